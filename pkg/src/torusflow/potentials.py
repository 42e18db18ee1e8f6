"""Trigonometric-polynomial potentials with piecewise-linear time profiles.

``V(x, t) = sum_{|l| <= L} V_l(t) e^{ilx}`` where every ``V_l`` is linear
between consecutive entries of ``times`` and held constant outside
``[times[0], times[-1]]``.  Linear pieces make every oscillatory integral
``int V_l(t) e^{i omega t} dt`` available in closed form.

Random draws use numpy's Philox4x64 counter-based generator keyed by
``(seed, stream)``; see ``docs/potential_schema.md``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels

KINDS = ("random_bounded", "decaying", "oscillatory_Q", "constant_imag", "custom")
SUP_GRID = 512


class EnvelopeError(ValueError):
    """A potential violates its declared sup-norm envelope."""


def philox(seed, stream=0):
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(stream)]))


@lru_cache(maxsize=64)
def _fourier_matrix(n_x, L):
    x = 2 * np.pi * np.arange(n_x) / n_x
    return np.exp(1j * np.outer(x, np.arange(-L, L + 1)))


def trig_sup(coeffs, n_x=SUP_GRID):
    """max_x |sum_l c_l e^{ilx}| on an ``n_x``-point grid (a lower bound)."""
    coeffs = np.asarray(coeffs)
    L = (coeffs.shape[-1] - 1) // 2
    vals = coeffs @ _fourier_matrix(n_x, L).T
    return np.max(np.abs(vals), axis=-1)


def dense_sup_grid(L):
    return max(SUP_GRID, 32 * (2 * L + 1))


def trig_sup_refined(coeffs, n_x=None, newton=8):
    """max_x |sum_l c_l e^{ilx}| to near machine precision.

    Every local maximum of the grid samples is polished by Newton steps on
    |p|^2, each confined to its own grid cell.
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
    L = (c.shape[-1] - 1) // 2
    n_x = n_x or dense_sup_grid(L)
    a = np.abs(c @ _fourier_matrix(n_x, L).T)
    peak = (a >= np.roll(a, 1, axis=1)) & (a >= np.roll(a, -1, axis=1))
    rows, j = np.nonzero(peak)
    dx = 2 * np.pi / n_x
    x0 = j * dx
    x = x0.copy()
    l = np.arange(-L, L + 1)
    cr = c[rows]
    for _ in range(newton):
        e = np.exp(1j * np.outer(x, l))
        p = np.sum(cr * e, axis=1)
        p1 = np.sum(cr * 1j * l * e, axis=1)
        p2 = np.sum(-cr * l * l * e, axis=1)
        g = (np.conj(p) * p1).real
        h = np.abs(p1) ** 2 + (np.conj(p) * p2).real
        step = np.divide(-g, h, out=np.zeros_like(g), where=h < 0)
        x = np.clip(x + step, x0 - dx, x0 + dx)
    val = np.abs(np.sum(cr * np.exp(1j * np.outer(x, l)), axis=1))
    out = a.max(axis=1)
    np.maximum.at(out, rows, val)
    return out if np.ndim(coeffs) > 1 else out[0]


@dataclass(frozen=True, eq=False)
class PotentialModel:
    times: np.ndarray
    coeffs: np.ndarray
    kind: str = "custom"
    reality: bool = True
    bound: np.ndarray | None = None
    decay_gamma: float | None = None
    amplitude_lambda: float | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == 1:
            c = c[None, :]
        if c.shape[0] != t.shape[0]:
            raise ValueError("one coefficient row per time node is required")
        if c.shape[1] % 2 != 1:
            raise ValueError("coefficient rows must cover modes -L..L")
        if t.shape[0] > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.reality and not np.allclose(c, np.conj(c[:, ::-1]), rtol=0, atol=1e-14):
            raise ValueError("real potential needs V_{-l} = conj(V_l)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)
        if self.bound is not None:
            object.__setattr__(self, "bound", np.asarray(self.bound, dtype=float))
        dt = np.diff(t)
        slopes = np.diff(c, axis=0) / dt[:, None] if t.shape[0] > 1 else np.zeros((0, c.shape[1]))
        object.__setattr__(self, "_slopes", slopes)

    @property
    def l_max(self):
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def mode_range(self):
        return np.arange(-self.l_max, self.l_max + 1)

    @property
    def breakpoints(self):
        return self.times

    @property
    def is_zero(self):
        return not np.any(self.coeffs)

    def piece(self, t):
        """Index p with times[p] <= t < times[p+1]; -1 before, K after the grid."""
        if t < self.times[0]:
            return -1
        p = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(p, self.times.shape[0] - 1)

    def piece_coeffs(self, a, b=None):
        """Value at ``a`` and slope of the linear piece containing [a, b]."""
        K = self.times.shape[0] - 1
        mid = a if b is None else 0.5 * (a + b)
        p = self.piece(mid)
        if p < 0:
            return self.coeffs[0].copy(), np.zeros(self.coeffs.shape[1], complex)
        if p >= K:
            return self.coeffs[K].copy(), np.zeros(self.coeffs.shape[1], complex)
        slope = self._slopes[p]
        return self.coeffs[p] + slope * (a - self.times[p]), slope

    def coeff_at(self, t):
        alpha, _ = self.piece_coeffs(t)
        return alpha

    def coeffs_at(self, ts):
        """Coefficient rows at many times, shape (len(ts), 2L+1)."""
        ts = np.asarray(ts, dtype=float)
        K = self.times.shape[0] - 1
        if K == 0:
            return np.broadcast_to(self.coeffs[0], ts.shape + (self.coeffs.shape[1],)).copy()
        p = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, K - 1)
        s = np.clip(ts, self.times[0], self.times[-1]) - self.times[p]
        return self.coeffs[p] + self._slopes[p] * s[..., None]

    def sup_norms(self, ts, n_x=SUP_GRID):
        return trig_sup(self.coeffs_at(ts), n_x)

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.mode_range)) @ self.coeff_at(t)

    def sup_norm(self, t, n_x=SUP_GRID):
        return float(trig_sup(self.coeff_at(t), n_x))

    def l2_squared(self, t):
        """int_T |V(x,t)|^2 dx / 2pi."""
        return float(np.sum(np.abs(self.coeff_at(t)) ** 2))

    def pieces_between(self, t0, t1):
        """Sorted cut points of [t0, t1] at the profile breakpoints."""
        inner = self.times[(self.times > t0) & (self.times < t1)]
        return np.concatenate([[t0], inner, [t1]])

    def check_envelope(self, n_x=SUP_GRID, rtol=1e-9):
        """Raise EnvelopeError if sup_x |V(x, t_i)| exceeds the declared bound."""
        if self.bound is None:
            return
        sups = trig_sup(self.coeffs, n_x)
        bad = np.nonzero(sups > self.bound * (1 + rtol) + 1e-300)[0]
        if bad.size:
            i = int(bad[0])
            raise EnvelopeError(
                f"sup|V| = {sups[i]:.6g} exceeds bound {self.bound[i]:.6g} at t = {self.times[i]:.6g}"
            )

    def to_dict(self):
        return {
            "schema": "torusflow.potential/1",
            "kind": self.kind,
            "reality": self.reality,
            "l_max": self.l_max,
            "times": self.times.tolist(),
            "coeffs_re": self.coeffs.real.tolist(),
            "coeffs_im": self.coeffs.imag.tolist(),
            "bound": None if self.bound is None else self.bound.tolist(),
            "decay_gamma": self.decay_gamma,
            "amplitude_lambda": self.amplitude_lambda,
            "seed": self.seed,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != "torusflow.potential/1":
            raise ValueError("not a torusflow potential document")
        coeffs = np.asarray(d["coeffs_re"]) + 1j * np.asarray(d["coeffs_im"])
        return cls(
            times=np.asarray(d["times"]),
            coeffs=coeffs,
            kind=d["kind"],
            reality=d["reality"],
            bound=d.get("bound"),
            decay_gamma=d.get("decay_gamma"),
            amplitude_lambda=d.get("amplitude_lambda"),
            seed=d.get("seed"),
            meta=d.get("meta", {}),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_time_grid(t_max, h0=0.5, ratio=0.05, t_min=0.0):
    """Nodes with spacing max(h0, ratio * (t + 1)) covering [t_min, t_max]."""
    ts = [t_min]
    while ts[-1] < t_max:
        ts.append(ts[-1] + max(h0, ratio * (ts[-1] + 1.0)))
    ts[-1] = max(ts[-1], t_max)
    return np.asarray(ts)


def _random_shape(rng, L, size, complex_valued=False):
    """Per-node coefficient draws with amplitudes proportional to 1/(1+|l|)."""
    l = np.arange(-L, L + 1)
    amp = 1.0 / (1.0 + np.abs(l))
    z = (rng.standard_normal((size, 2 * L + 1)) + 1j * rng.standard_normal((size, 2 * L + 1))) / np.sqrt(2)
    z = z * amp
    if not complex_valued:
        z = 0.5 * (z + np.conj(z[:, ::-1]))
        z[:, L] = z[:, L].real
    return z


def _rescale(shape, bounds, L):
    sups = trig_sup_refined(shape)
    scale = np.divide(bounds, sups, out=np.zeros_like(sups), where=sups > 0)
    return shape * scale[:, None]


def make_random_bounded(seed, l_max, time_grid, bound, complex_valued=False):
    """Random potential with sup_x |V(x, t)| equal to ``bound`` at every node.

    Linear interpolation between nodes keeps the bound (convexity of the
    sup norm).
    """
    times = np.asarray(time_grid, dtype=float)
    if bound < 0:
        raise ValueError("bound must be non-negative")
    rng = philox(seed)
    shape = _random_shape(rng, l_max, times.shape[0], complex_valued)
    bounds = np.full(times.shape[0], float(bound))
    coeffs = _rescale(shape, bounds, l_max)
    if not complex_valued:
        coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
    return PotentialModel(times, coeffs, kind="random_bounded", reality=not complex_valued,
                          bound=bounds, seed=seed)


def decay_node_bounds(times, gamma, C):
    """Node bounds C (t_{i+1} + 1)^{-gamma}; the interpolant then stays under the envelope."""
    t_next = np.append(times[1:], times[-1])
    return C * (t_next + 1.0) ** (-gamma)


def make_decaying(seed, l_max, gamma, C=1.0, time_grid=None, t_max=2048.0):
    """Random real potential under the envelope C (t+1)^{-gamma}."""
    if gamma <= 0 or gamma > 1:
        raise ValueError("decay exponent must lie in (0, 1]")
    times = default_time_grid(t_max) if time_grid is None else np.asarray(time_grid, dtype=float)
    rng = philox(seed)
    shape = _random_shape(rng, l_max, times.shape[0])
    bounds = decay_node_bounds(times, gamma, C)
    coeffs = _rescale(shape, bounds, l_max)
    coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
    return PotentialModel(times, coeffs, kind="decaying", reality=True, bound=bounds,
                          decay_gamma=gamma, seed=seed, meta={"C": C})


def decay_envelope_ok(pot, C, gamma, n_x=SUP_GRID):
    """Check sup_x |V| <= C (t+1)^{-gamma} at every node."""
    sups = trig_sup(pot.coeffs, n_x)
    return bool(np.all(sups <= C * (pot.times + 1.0) ** (-gamma) * (1 + 1e-9)))


@dataclass(frozen=True, eq=False)
class OscillatoryQSpec:
    """Q(x, t) = lam (t+1)^{-gamma} q(x) with ``q_modes`` the coefficients of q.

    The envelope conditions ``||Q|| <= lam (t+1)^{-gamma}`` and
    ``||Q_x|| <= lam (t+1)^{1-gamma}`` hold iff ``||q||, ||q'|| <= 1``.
    """

    q_modes: np.ndarray
    gamma: float
    lam: float
    start_T: float = 0.0
    times: np.ndarray | None = None

    @classmethod
    def random(cls, seed, l_max, gamma, lam, start_T=0.0, times=None):
        rng = philox(seed, stream=7)
        q = _random_shape(rng, l_max, 1)[0]
        l = np.arange(-l_max, l_max + 1)
        scale = max(trig_sup_refined(q), trig_sup_refined(1j * l * q))
        return cls(q / (scale * (1 + 1e-6)), gamma, lam, start_T, times)


def make_oscillatory(spec, t_max=None):
    """V = Q_x / (t+1), so V_l(t) = i l Q_l(t) / (t+1) at every node."""
    if spec.gamma <= 0.75:
        raise ValueError("oscillatory potentials need gamma > 3/4")
    if spec.lam < 0:
        raise ValueError("lambda must be non-negative")
    q = np.asarray(spec.q_modes, dtype=np.complex128)
    L = (q.shape[0] - 1) // 2
    if not np.allclose(q, np.conj(q[::-1]), atol=1e-14):
        raise ValueError("Q must be real-valued")
    l = np.arange(-L, L + 1)
    tol = 1 + 1e-12
    q_sup = trig_sup_refined(q)
    qx_sup = trig_sup_refined(1j * l * q)
    if q_sup > tol or qx_sup > tol:
        lbad = int(l[np.argmax(np.abs(q))])
        raise EnvelopeError(
            f"Q violates the (lam, gamma) envelope at t = 0 (dominant mode l = {lbad}; "
            f"sup|q| = {q_sup:.6g}, sup|q'| = {qx_sup:.6g})"
        )
    if spec.times is not None:
        times = np.asarray(spec.times, dtype=float)
    else:
        times = default_time_grid(t_max or 4096.0, t_min=0.0)
    prof = spec.lam * (times + 1.0) ** (-spec.gamma - 1.0)
    coeffs = prof[:, None] * (1j * l * q)[None, :]
    coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
    return PotentialModel(times, coeffs, kind="oscillatory_Q", reality=True,
                          bound=spec.lam * qx_sup * (times + 1.0) ** (-spec.gamma - 1.0) * (1 + 1e-9),
                          decay_gamma=spec.gamma, amplitude_lambda=spec.lam,
                          meta={"start_T": spec.start_T, "q_modes_re": q.real.tolist(),
                                "q_modes_im": q.imag.tolist()})


def make_constant_imag(c):
    """V(x, t) = i c for all t."""
    coeffs = np.array([[1j * c], [1j * c]])
    return PotentialModel(np.array([0.0, 1.0]), coeffs, kind="constant_imag", reality=(c == 0))


def make_scalar(times, values):
    """x-independent real potential V(x, t) = g(t), piecewise linear."""
    v = np.asarray(values, dtype=float)
    return PotentialModel(np.asarray(times, dtype=float), v[:, None].astype(complex), kind="custom")


def make_static(coeffs_by_mode, l_max=None, times=(0.0, 1.0)):
    """Time-independent potential from a ``{l: V_l}`` mapping."""
    L = l_max if l_max is not None else max(abs(l) for l in coeffs_by_mode)
    row = np.zeros(2 * L + 1, dtype=np.complex128)
    for l, v in coeffs_by_mode.items():
        row[l + L] = v
    reality = bool(np.allclose(row, np.conj(row[::-1])))
    times = np.asarray(times, dtype=float)
    return PotentialModel(times, np.tile(row, (times.shape[0], 1)), kind="custom", reality=reality)


def make_zero(l_max=0, times=(0.0, 1.0)):
    times = np.asarray(times, dtype=float)
    return PotentialModel(times, np.zeros((times.shape[0], 2 * l_max + 1)), kind="custom")


# --- exact oscillatory integrals -------------------------------------------

def oscillatory_cell_integral(pot, l, omega, t0, t1):
    """int_{t0}^{t1} V_l(t) e^{i omega t} dt on a single linear piece."""
    if abs(l) > pot.l_max:
        return 0j
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    inner = pot.times[(pot.times > t0) & (pot.times < t1)]
    if inner.size:
        raise ValueError(f"[{t0}, {t1}] straddles the profile breakpoint {inner[0]}")
    alpha, beta = pot.piece_coeffs(t0, t1)
    li = l + pot.l_max
    return complex(_kernels.cell_integrals(
        np.array([alpha[li]]), np.array([beta[li]]), np.array([float(omega)]), float(t0), float(t1 - t0))[0])


def oscillatory_integral(pot, l, omega, t0, t1):
    """int_{t0}^{t1} V_l(t) e^{i omega t} dt, split at breakpoints."""
    cuts = pot.pieces_between(t0, t1)
    return sum(oscillatory_cell_integral(pot, l, omega, a, b) for a, b in zip(cuts[:-1], cuts[1:]))


def prefix_integrals(pot, ls, omegas, grid):
    """P[e, i] = int_{grid[0]}^{grid[i]} V_{ls[e]}(t) e^{i omegas[e] t} dt.

    ``ls`` and ``omegas`` broadcast against each other; the result has shape
    ``broadcast(ls, omegas).shape + (len(grid),)``.
    """
    grid = np.asarray(grid, dtype=float)
    ls, omegas = np.broadcast_arrays(np.asarray(ls), np.asarray(omegas, dtype=float))
    shape = ls.shape
    ls = ls.ravel()
    omegas = omegas.ravel()
    cuts = np.union1d(grid, pot.times[(pot.times > grid[0]) & (pot.times < grid[-1])])
    a = cuts[:-1]
    h = np.diff(cuts)
    mids = 0.5 * (a + cuts[1:])
    K = pot.times.shape[0] - 1
    p = np.clip(np.searchsorted(pot.times, mids, side="right") - 1, -1, K)
    L = pot.l_max
    inside = (p >= 0) & (p < K)
    pc = np.clip(p, 0, max(K - 1, 0))
    if K > 0:
        alpha = np.where(inside[:, None], pot.coeffs[pc] + pot._slopes[pc] * (a - pot.times[pc])[:, None],
                         np.where((p < 0)[:, None], pot.coeffs[0], pot.coeffs[K]))
        beta = np.where(inside[:, None], pot._slopes[pc], 0.0)
    else:
        alpha = np.broadcast_to(pot.coeffs[0], (a.shape[0], 2 * L + 1))
        beta = np.zeros_like(alpha)
    valid = np.abs(ls) <= L
    li = np.where(valid, ls + L, 0)
    al = alpha[:, li].T * valid[:, None]
    be = beta[:, li].T * valid[:, None]
    z = 1j * omegas[:, None] * h[None, :]
    cells = np.exp(1j * omegas[:, None] * a[None, :]) * h * (al * _e1(z) + be * h * _e2(z))
    pref = np.concatenate([np.zeros((ls.shape[0], 1), complex), np.cumsum(cells, axis=1)], axis=1)
    idx = np.searchsorted(cuts, grid)
    return pref[:, idx].reshape(shape + (grid.shape[0],))


def _e1(z):
    small = np.abs(z) < 0.1
    out = np.empty_like(z)
    zs = z[small]
    term = np.ones_like(zs)
    acc = np.ones_like(zs)
    for j in range(1, 16):
        term = term * zs / j
        acc = acc + term / (j + 1)
    out[small] = acc
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _e2(z):
    small = np.abs(z) < 0.1
    out = np.empty_like(z)
    zs = z[small]
    term = np.ones_like(zs)
    acc = 0.5 * np.ones_like(zs)
    for j in range(1, 16):
        term = term * zs / j
        acc = acc + term / (j + 2)
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.exp(zb) * (zb - 1) + 1) / zb ** 2
    return out
