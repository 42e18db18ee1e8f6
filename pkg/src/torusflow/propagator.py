"""Time evolution of ``i u_t = (k lambda(n, t) + V*) u`` on a Fourier band.

The integrator works in the interaction picture ``c_n = e^{i k Phi_n(t)} u_n``
with ``Phi_n(t) = int_0^t lambda(n, s) ds``, where the system reads
``i c' = Vt(t) c`` with ``Vt_mn(t) = e^{i k (Phi_m - Phi_n)} V_{m-n}(t)``.
Each step applies ``exp(-i Omega_1)`` with ``Omega_1 = int Vt`` over the step
(second-order Magnus).  For static symbols and piecewise-linear potentials
``Omega_1`` is evaluated exactly; time-dependent symbols linearise the
phase about the step midpoint.  ``omega="midpoint"`` uses the plain
exponential midpoint rule ``exp(-i dt Vt(t + dt/2))`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from . import _kernels
from .spectral import FourierState, SymbolSpec, modes

MIN_STEP = 1e-12


class IntegrationError(RuntimeError):
    """Step-size control failed; carries the time, step and last error estimate."""

    def __init__(self, msg, t=None, dt=None, err=None):
        super().__init__(f"{msg} (t={t}, dt={dt}, err={err})")
        self.t = t
        self.dt = dt
        self.err = err


@dataclass(frozen=True)
class EvolveConfig:
    k: float
    t0: float = 0.0
    t1: float = 1.0
    dt_init: float = 1e-2
    tol: float = 1e-9
    picture: str = "lab"
    observer_times: tuple = ()
    fixed_dt: float | None = None
    omega: str = "exact"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.t1 > self.t0 >= 0:
            raise ValueError("need t1 > t0 >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.picture not in ("lab", "interaction"):
            raise ValueError(f"unknown picture {self.picture!r}")
        if self.omega not in ("exact", "midpoint"):
            raise ValueError(f"unknown Omega rule {self.omega!r}")
        obs = tuple(sorted(float(t) for t in self.observer_times))
        if obs and (obs[0] < self.t0 or obs[-1] > self.t1):
            raise ValueError("observer times must lie in [t0, t1]")
        object.__setattr__(self, "observer_times", obs)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    maxima: dict = field(default_factory=dict)
    final: FourierState | None = None
    n_accepted: int = 0
    n_rejected: int = 0


@dataclass(frozen=True, eq=False)
class MonodromyMatrix:
    entries: np.ndarray
    n_max: int
    k: float
    t: float

    def unitarity_defect(self):
        X = self.entries
        return float(np.linalg.norm(X.conj().T @ X - np.eye(X.shape[0]), 2))

    def __matmul__(self, state):
        return state.with_coeffs(self.entries @ state.coeffs, time=self.t)


class _Stepper:
    """Banded Magnus steps for one (symbol, potential, k, band)."""

    def __init__(self, spec, pot, k, n_max, omega="exact"):
        self.spec = spec
        self.pot = pot
        self.k = float(k)
        self.n_max = n_max
        self.n = modes(n_max).astype(float)
        self.midpoint = omega == "midpoint"
        self.D = np.zeros((2 * pot.l_max + 1, 2 * n_max + 1), dtype=np.complex128)
        self._lam_static = spec.multiplier(self.n, 0.0) if spec.is_static else None

    def lam_phi(self, t):
        if self._lam_static is not None:
            return self._lam_static, self._lam_static * t
        return self.spec.multiplier(self.n, t), self.spec.phase(self.n, t)

    def phase(self, t):
        return self.lam_phi(t)[1]

    def step(self, v, a, h):
        alpha, beta = self.pot.piece_coeffs(a, a + h)
        if not (alpha.any() or beta.any()):
            return v
        lam, phi = self.lam_phi(a + 0.5 * h)
        _kernels.magnus_band(self.D, self.k, lam, phi, alpha, beta, a, h, self.midpoint)
        return _kernels.expm_band(self.D, v)

    def to_lab(self, v, t):
        return v * np.exp(-1j * self.k * self.phase(t))[:, None]

    def to_interaction(self, u, t):
        return u * np.exp(1j * self.k * self.phase(t))[:, None]

    def matrix(self, t):
        """Dense Vt(t)."""
        vhat = self.pot.coeff_at(t)
        L = self.pot.l_max
        M = 2 * self.n_max + 1
        diff = np.subtract.outer(np.arange(M), np.arange(M))
        T = np.where(np.abs(diff) <= L, vhat[np.clip(diff + L, 0, 2 * L)], 0.0)
        ph = np.exp(1j * self.k * self.phase(t))
        return ph[:, None] * T * np.conj(ph)[None, :]


def _as_block(state):
    c = state.coeffs
    return (c[:, None] if c.ndim == 1 else c).copy(), c.ndim == 1


def _cut_points(spec, pot, n_max, t0, t1, extra=()):
    pts = [t0, t1]
    pts.extend(pot.times[(pot.times > t0) & (pot.times < t1)])
    pts.extend(spec.switch_times(n_max, t0, t1))
    pts.extend(t for t in extra if t0 < t < t1)
    return np.unique(np.asarray(pts, dtype=float))


def _integrate(stepper, v, t0, t1, cuts, tol, dt, fixed_dt=None, on_accept=None, on_cut=None,
               max_steps=10_000_000):
    """Advance interaction coefficients ``v`` from t0 to t1 through ``cuts``."""
    t = t0
    n_acc = n_rej = 0
    for seg_end in cuts[1:]:
        while seg_end - t > 1e-13 * max(1.0, abs(seg_end)):
            if fixed_dt is not None:
                h = min(fixed_dt, seg_end - t)
                v = stepper.step(v, t, h)
                t = seg_end if h == seg_end - t else t + h
                n_acc += 1
                if on_accept is not None:
                    on_accept(t, v)
                continue
            h = min(dt, seg_end - t)
            if h < MIN_STEP:
                raise IntegrationError("step size underflow", t, h, None)
            full = stepper.step(v, t, h)
            half = stepper.step(stepper.step(v, t, 0.5 * h), t + 0.5 * h, 0.5 * h)
            scale = max(1.0, float(np.linalg.norm(half)))
            err = float(np.linalg.norm(full - half)) / scale
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (tol / err) ** (1.0 / 3.0)))
            if err <= tol:
                v = half
                clipped = h < dt
                t = seg_end if h == seg_end - t else t + h
                n_acc += 1
                dt = max(dt, h * factor) if clipped else h * factor
                if on_accept is not None:
                    on_accept(t, v)
            else:
                n_rej += 1
                dt = h * factor
                if dt < MIN_STEP:
                    raise IntegrationError("step size underflow", t, dt, err)
            if n_acc + n_rej > max_steps:
                raise IntegrationError("step budget exhausted", t, dt, err)
        t = seg_end
        if on_cut is not None:
            on_cut(t, v)
    return v, dt, n_acc, n_rej


def evolve(initial, spec, pot, cfg, observables=None):
    """Integrate from ``cfg.t0`` to ``cfg.t1``.

    ``observables`` maps names to functions of the lab-picture state; their
    running maxima over accepted steps are recorded at each observer time.
    """
    n_max = initial.n_max
    stepper = _Stepper(spec, pot, cfg.k, n_max, cfg.omega)
    v, single = _as_block(initial)
    if initial.picture == "lab":
        v = stepper.to_interaction(v, cfg.t0)
    observables = observables or {}
    running = {name: -np.inf for name in observables}

    def lab_state(t, v):
        u = stepper.to_lab(v, t)
        return FourierState(u[:, 0] if single else u, n_max, "lab", t)

    def observe(t, v):
        if observables:
            s = lab_state(t, v)
            for name, f in observables.items():
                running[name] = max(running[name], float(f(s)))

    observe(cfg.t0, v)
    obs = set(cfg.observer_times)
    rec_t, rec_s = [], []
    maxima = {name: [] for name in observables}

    def record(t, v):
        if cfg.picture == "lab":
            s = lab_state(t, v)
        else:
            s = FourierState(v[:, 0].copy() if single else v.copy(), n_max, "interaction", t)
        rec_t.append(t)
        rec_s.append(s)
        for name in observables:
            maxima[name].append(running[name])

    if cfg.t0 in obs:
        record(cfg.t0, v)

    def on_cut(t, v):
        if t in obs:
            record(t, v)

    cuts = _cut_points(spec, pot, n_max, cfg.t0, cfg.t1, cfg.observer_times)
    v, _, n_acc, n_rej = _integrate(stepper, v, cfg.t0, cfg.t1, cuts, cfg.tol, cfg.dt_init,
                                    cfg.fixed_dt, observe, on_cut, cfg.max_steps)
    if cfg.picture == "lab":
        final = lab_state(cfg.t1, v)
    else:
        final = FourierState(v[:, 0] if single else v, n_max, "interaction", cfg.t1)
    return Trajectory(np.asarray(rec_t), rec_s, {k: np.asarray(m) for k, m in maxima.items()},
                      final, n_acc, n_rej)


def step_midpoint(state, spec, pot, k, dt, omega="exact"):
    """One Magnus step of length ``dt`` from ``state.time``; same picture out as in."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    stepper = _Stepper(spec, pot, k, state.n_max, omega)
    v, single = _as_block(state)
    t = state.time
    if state.picture == "lab":
        v = stepper.to_interaction(v, t)
    v = stepper.step(v, t, dt)
    if state.picture == "lab":
        v = stepper.to_lab(v, t + dt)
    return state.with_coeffs(v[:, 0] if single else v, time=t + dt)


def interaction_entry(spec, pot, k, t, m, n):
    """e^{ik(Phi_m(t) - Phi_n(t))} V_{m-n}(t)."""
    l = m - n
    if abs(l) > pot.l_max:
        return 0j
    vhat = pot.coeff_at(t)[l + pot.l_max]
    dphi = float(spec.phase(m, t) - spec.phase(n, t))
    return complex(np.exp(1j * k * dphi) * vhat)


# --- oracles ---------------------------------------------------------------

def _gl_rule(q):
    x, w = legendre.leggauss(q)
    V = legendre.legvander(x, q - 1)
    Iv = np.empty((q, q))
    for j in range(q):
        e = np.zeros(q)
        e[j] = 1.0
        Iv[:, j] = legendre.legval(x, legendre.legint(e, lbnd=-1))
    return x, w, Iv @ np.linalg.inv(V)


def _duhamel_terms(stepper, c0, cuts, panels, q, n_terms):
    x, w, S = _gl_rule(q)
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        edges.extend(np.linspace(a, b, panels + 1)[:-1])
    edges.append(cuts[-1])
    edges = np.asarray(edges)
    mats = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
        mats.append((0.5 * (b - a), np.stack([stepper.matrix(t) for t in nodes])))
    finals = [c0.copy()]
    prev = [np.broadcast_to(c0, (q,) + c0.shape) for _ in mats]
    for _ in range(1, n_terms):
        carry = np.zeros_like(c0)
        cur = []
        for (half, Vs), p in zip(mats, prev):
            f = np.einsum("qij,qj...->qi...", Vs, p)
            vals = carry[None] - 1j * half * np.tensordot(S, f, axes=(1, 0))
            carry = carry - 1j * half * np.tensordot(w, f, axes=(0, 0))
            cur.append(vals)
        finals.append(carry)
        prev = cur
    return finals


def duhamel_series(initial, spec, pot, cfg, n_terms, rtol=1e-13, q=12, max_panels=256):
    """Truncated Duhamel (Dyson) expansion in the interaction picture.

    Term ``j`` is ``-i int_t0^t Vt(s) term_{j-1}(s) ds``, evaluated by
    composite Gauss-Legendre panels with spectral cumulative integration;
    the panel count doubles until the summed result stops changing.
    Returns the lab-picture state at ``cfg.t1`` and the norm of the last
    retained term.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    n_max = initial.n_max
    stepper = _Stepper(spec, pot, cfg.k, n_max)
    c0, single = _as_block(initial)
    if initial.picture == "lab":
        c0 = stepper.to_interaction(c0, cfg.t0)
    cuts = _cut_points(spec, pot, n_max, cfg.t0, cfg.t1)
    panels = 1
    prev = None
    while True:
        terms = _duhamel_terms(stepper, c0, cuts, panels, q, n_terms)
        total = sum(terms)
        if prev is not None and np.linalg.norm(total - prev) <= rtol * max(1.0, np.linalg.norm(total)):
            break
        if panels >= max_panels:
            break
        prev = total
        panels *= 2
    u = stepper.to_lab(total, cfg.t1)
    state = FourierState(u[:, 0] if single else u, n_max, "lab", cfg.t1)
    return state, float(np.linalg.norm(terms[-1]))


def dense_monodromy(spec, pot, k, N, tspan, tol=1e-11, dt_init=1e-2):
    """Solution operator from tspan[0] to tspan[1] on the band |n| <= N (lab picture)."""
    if N > 64:
        raise ValueError("dense monodromy is limited to N <= 64")
    t0, t1 = tspan
    eye = FourierState(np.eye(2 * N + 1, dtype=np.complex128), N, "lab", t0)
    if t1 == t0:
        return MonodromyMatrix(eye.coeffs, N, k, t1)
    traj = evolve(eye, spec, pot, EvolveConfig(k=k, t0=t0, t1=t1, tol=tol, dt_init=dt_init))
    return MonodromyMatrix(traj.final.coeffs, N, k, t1)


def truncation_scan(spec, pot, k, cfg, N_list, initial_mode=0):
    """Sup over observer times of the distance to a reference solution on band 2 max(N_list)."""
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    n_ref = 2 * N_list[-1]
    times = cfg.observer_times or (cfg.t1,)
    run_cfg = EvolveConfig(k=k, t0=cfg.t0, t1=cfg.t1, dt_init=cfg.dt_init, tol=cfg.tol,
                           observer_times=times)

    def run(N):
        init = FourierState.basis(initial_mode, N, time=cfg.t0)
        return evolve(init, spec, pot, run_cfg).states

    ref = run(n_ref)
    rows = []
    for N in N_list:
        states = run(N)
        dev = max(np.linalg.norm(s.resized(n_ref).coeffs - r.coeffs) for s, r in zip(states, ref))
        rows.append({"N": N, "deviation": float(dev)})
    return rows
