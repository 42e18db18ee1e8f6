"""Randomised checks of the elementary inequalities used in the analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..potentials import philox, trig_sup


class InequalityViolation(AssertionError):
    def __init__(self, msg, witness):
        super().__init__(msg)
        self.witness = witness


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _orth(v, against):
    """Component of v orthogonal to ``against`` (zero vector allowed)."""
    n2 = np.vdot(against, against).real
    return v if n2 == 0 else v - np.vdot(against, v) / n2 * against


def otriv_sides(v1, v2, a):
    """(||v - a||, 2 sqrt(| ||a||^2 - <v1, a> |)) with <x, y> linear in x."""
    lhs = float(np.linalg.norm(v1 + v2 - a))
    rhs = 2.0 * math.sqrt(abs(np.vdot(a, a).real - np.vdot(a, v1)))
    return lhs, rhs


def sample_otriv(rng, dim):
    """A triple with v1 _|_ v2, a _|_ v2 and ||v1||^2 + ||v2||^2 = ||a||^2."""
    a = _crandn(rng, dim) * rng.uniform(0.1, 3.0)
    na = np.linalg.norm(a)
    if dim == 1:
        v2 = np.zeros(1, complex)
    else:
        v2 = _orth(_crandn(rng, dim), a)
        v2 *= rng.uniform(0.0, 1.0) * na / max(np.linalg.norm(v2), 1e-300)
    mode = rng.integers(3)
    if mode == 0:  # generic direction
        v1 = _crandn(rng, dim)
    elif mode == 1:  # near a: the near-equality regime
        v1 = a + rng.uniform(0, 0.1) * na * _crandn(rng, dim)
    else:  # rotated copy of a
        v1 = a * np.exp(1j * rng.uniform(-math.pi, math.pi))
    v1 = _orth(v1, v2)
    target = math.sqrt(max(na ** 2 - np.linalg.norm(v2) ** 2, 0.0))
    n1 = np.linalg.norm(v1)
    v1 = v1 * (target / n1) if n1 > 0 else v1
    return v1, v2, a


@dataclass
class FuzzReport:
    trials: int
    violations: int
    max_ratio: float
    witness: tuple | None = None
    extra: dict = field(default_factory=dict)


def fuzz_otriv(trials, dim=16, seed=0, slack=1e-9, raise_on_violation=True):
    """Check ||v - a|| <= 2 sqrt(| ||a||^2 - <v1, a> |) on random triples of dimension <= dim."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = philox(seed, stream=21)
    worst, violations, witness = 0.0, 0, None
    for _ in range(trials):
        d = int(rng.integers(1, dim + 1))
        v1, v2, a = sample_otriv(rng, d)
        lhs, rhs = otriv_sides(v1, v2, a)
        scale = np.linalg.norm(a)
        if lhs > rhs + slack * max(scale, 1.0):
            violations += 1
            witness = (v1, v2, a)
            if raise_on_violation:
                raise InequalityViolation(f"violation: {lhs} > {rhs}", witness)
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    return FuzzReport(trials, violations, worst, witness)


def _h_half(c):
    n = np.arange(c.shape[-1]) - (c.shape[-1] - 1) // 2
    return float(np.sqrt(np.sum((1.0 + np.abs(n)) * np.abs(c) ** 2)))


def _sup(c, n_x=1024):
    return float(trig_sup(c, n_x))


def krein_ratio(f, g):
    """||fg||_{H^1/2} / (||f||_inf ||g||_{H^1/2} + ||g||_inf ||f||_{H^1/2}) for centred coefficient vectors."""
    fg = np.convolve(f, g)
    den = _sup(f) * _h_half(g) + _sup(g) * _h_half(f)
    return _h_half(fg) / den


def _random_trig(rng, deg_max=32):
    d = int(rng.integers(0, deg_max + 1))
    n = np.arange(-d, d + 1)
    c = _crandn(rng, 2 * d + 1) * (1.0 + np.abs(n)) ** (-rng.uniform(0.0, 2.0))
    if rng.random() < 0.3:  # sparse, near-extremal shapes
        c *= rng.random(2 * d + 1) < 0.2
        if not np.any(c):
            c[rng.integers(2 * d + 1)] = 1.0
    return c


def fuzz_krein(trials, seed=0, deg_max=32):
    """Empirical constant of the product bound in H^{1/2} on random trigonometric polynomials."""
    rng = philox(seed, stream=22)
    ratios = np.array([krein_ratio(_random_trig(rng, deg_max), _random_trig(rng, deg_max))
                       for _ in range(trials)])
    return FuzzReport(trials, 0, float(ratios.max()), extra={"median": float(np.median(ratios))})


def _evolve_pieces(H, J, f, dt, n_sub):
    """psi' = -i (H psi + j) with piecewise-constant H, j; samples at n_sub points per piece."""
    d = f.shape[0]
    psi = f.astype(complex)
    out = [psi]
    for Hk, jk in zip(H, J):
        aug = np.zeros((d + 1, d + 1), complex)
        aug[:d, :d] = -1j * Hk
        aug[:d, d] = -1j * jk
        E = expm(aug * dt / n_sub)
        for _ in range(n_sub):
            psi = (E @ np.append(psi, 1.0))[:d]
            out.append(psi)
    return np.array(out)


def _herm(rng, d, scale):
    A = _crandn(rng, d, d)
    return scale * (A + A.conj().T) / 2


def lemma41_check(trials=100, seed=0, pieces=8, T=1.0, n_sub=16):
    """sup_t ||psi1 - psi2|| <= int (||O1|| + ||j||) + ||f2 - f1|| on random small systems."""
    rng = philox(seed, stream=23)
    worst, violations = 0.0, 0
    dt = T / pieces
    for _ in range(trials):
        d = int(rng.integers(2, 7))
        O = [_herm(rng, d, rng.uniform(0, 3)) for _ in range(pieces)]
        O1 = [_herm(rng, d, rng.uniform(0, 0.3)) for _ in range(pieces)]
        J = [_crandn(rng, d) * rng.uniform(0, 0.1) for _ in range(pieces)]
        f1 = _crandn(rng, d)
        f1 /= np.linalg.norm(f1)
        f2 = f1 + rng.uniform(0, 0.1) * _crandn(rng, d)
        f2 /= np.linalg.norm(f2)
        p1 = _evolve_pieces(O, [np.zeros(d)] * pieces, f1, dt, n_sub)
        p2 = _evolve_pieces([a + b for a, b in zip(O, O1)], J, f2, dt, n_sub)
        lhs = float(np.max(np.linalg.norm(p1 - p2, axis=1)))
        rhs = dt * sum(np.linalg.norm(b, 2) + np.linalg.norm(j) for b, j in zip(O1, J)) + np.linalg.norm(f2 - f1)
        if lhs > rhs * (1 + 1e-10):
            violations += 1
        worst = max(worst, lhs / rhs)
    return FuzzReport(trials, violations, worst)
