"""Transport (WKB) corrections for the decaying-gaps evolution.

Modes are ``e^{inx}`` and a symbol value ``n`` is the Fourier multiplier
of ``-i d/dx``.  The transport equations are taken on the Fourier side,
``i nu_t = k q(t) n nu + V * nu`` with ``nu(., 0) = 1``, which in physical
space transports along ``x - k int q`` and matches the low-mode block of
the gaps evolution exactly.  The solution is ``nu = exp(i mu)`` with

    mu_l(t) = -int_0^t V_l(s) exp(-i l k (Q(t) - Q(s))) ds,   Q' = q,

a trigonometric polynomial whose coefficients come from exact integrals
over the linear pieces of V.  ``q = 1/T`` gives nu, ``q = 1/(1+t)`` gives
G, and piecewise-constant q on diadic blocks gives the chained nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import _e1, _e2, trig_sup
from .propagator import EvolveConfig, evolve
from .spectral import FourierState, SymbolSpec, modes

DEFAULT_NX = 512


@dataclass(frozen=True, eq=False)
class TransportSolution:
    """Phase coefficients mu_l at ``times``; ``mu_hat`` has shape (len(times), 2L+1)."""

    kind: str
    k: float
    times: np.ndarray
    mu_hat: np.ndarray
    real: bool = True
    T: float | None = None

    @property
    def l_max(self):
        return (self.mu_hat.shape[1] - 1) // 2

    def phase(self, x_grid):
        mu = np.exp(1j * np.multiply.outer(np.asarray(x_grid, dtype=float), modes(self.l_max))) @ self.mu_hat.T
        return (mu.real if self.real else mu).T

    def field(self, x_grid):
        """exp(i mu) on the grid, shape (len(times), len(x_grid))."""
        return np.exp(1j * self.phase(x_grid))

    def coefficients(self, n_max, n_x=None):
        """Fourier coefficients of nu on |n| <= n_max at every time (FFT of samples)."""
        n_x = n_x or max(DEFAULT_NX, 4 * n_max)
        f = self.field(2 * np.pi * np.arange(n_x) / n_x)
        c = np.fft.fft(f, axis=1) / n_x
        idx = np.arange(-n_max, n_max + 1) % n_x
        return c[:, idx]

    def h_half_norms(self, n_x=None):
        n_x = n_x or DEFAULT_NX
        f = self.field(2 * np.pi * np.arange(n_x) / n_x)
        c = np.fft.fft(f, axis=1) / n_x
        n = np.fft.fftfreq(n_x, 1.0 / n_x)
        return np.sqrt(np.sum((1.0 + np.abs(n)) * np.abs(c) ** 2, axis=1))


def _piece_table(pot, cuts):
    """Value at the left end and slope of V on each cell between ``cuts``."""
    a = cuts[:-1]
    mids = 0.5 * (a + cuts[1:])
    K = pot.times.shape[0] - 1
    rows = pot.coeffs_at(a)
    if K == 0:
        return rows, np.zeros_like(rows)
    p = np.searchsorted(pot.times, mids, side="right") - 1
    inside = (p >= 0) & (p < K)
    slopes = np.where(inside[:, None], pot._slopes[np.clip(p, 0, K - 1)], 0.0)
    return rows, slopes


def _mu_speed(pot, k, breaks, speeds, times, t_start):
    """mu_l(t) for piecewise-constant speed ``speeds[i]`` on [breaks[i], breaks[i+1])."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_end = float(times.max())
    inner = np.concatenate([pot.times, breaks, times])
    cuts = np.unique(np.concatenate([[t_start, t_end], inner[(inner > t_start) & (inner < t_end)]]))
    if cuts.shape[0] < 2:
        return np.zeros((times.shape[0], 2 * pot.l_max + 1), dtype=np.complex128)
    a, h = cuts[:-1], np.diff(cuts)
    si = np.clip(np.searchsorted(breaks, a, side="right") - 1, 0, len(speeds) - 1)
    q = np.asarray(speeds, dtype=float)[si]
    Qa = np.concatenate([[0.0], np.cumsum(q * h)])  # Q at every cut, Q(t_start) = 0
    l = modes(pot.l_max).astype(float)
    alpha, beta = _piece_table(pot, cuts)
    z = 1j * k * np.outer(h * q, l)
    cells = np.exp(1j * k * np.outer(Qa[:-1], l)) * h[:, None] * (alpha * _e1(z) + beta * h[:, None] * _e2(z))
    pref = np.vstack([np.zeros((1, l.shape[0]), complex), np.cumsum(cells, axis=0)])
    idx = np.searchsorted(cuts, times)
    return -np.exp(-1j * k * np.outer(Qa[idx], l)) * pref[idx]


def transport_nu(pot, k, T, x_grid=None, t=None, t_start=0.0):
    """nu for speed 1/T, started at ``t_start`` with V(., t_start + tau).

    ``t`` holds relative times tau in [0, T]; returns the TransportSolution,
    or its field on ``x_grid`` when a grid is given.
    """
    tau = np.atleast_1d(np.asarray(T if t is None else t, dtype=float))
    mu = _mu_speed(pot, k, np.array([t_start]), [1.0 / T], t_start + tau, t_start)
    sol = TransportSolution("nu_T", k, tau, mu, pot.reality, T)
    return sol if x_grid is None else sol.field(x_grid)


def transport_piecewise(pot, k, breaks, speeds, t):
    """nu for piecewise-constant speed, started at breaks[0] = 0."""
    mu = _mu_speed(pot, k, np.asarray(breaks, dtype=float), speeds, t, 0.0)
    return TransportSolution("piecewise", k, np.atleast_1d(np.asarray(t, dtype=float)), mu, pot.reality)


def _mu_G(pot, k, times):
    """mu_l(t) = -(1+t)^{-ilk} int_0^t V_l(s) (1+s)^{ilk} ds, exactly per linear piece."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_end = float(times.max())
    inner = np.concatenate([pot.times, times])
    cuts = np.unique(np.concatenate([[0.0, t_end], inner[(inner > 0) & (inner < t_end)]]))
    if cuts.shape[0] < 2:
        return np.zeros((times.shape[0], 2 * pot.l_max + 1), dtype=np.complex128)
    a = cuts[:-1]
    ua = np.log1p(a)
    du = np.log1p(cuts[1:]) - ua
    l = modes(pot.l_max).astype(float)
    alpha, beta = _piece_table(pot, cuts)
    c0 = alpha - beta * (1.0 + a)[:, None]  # V = c0 + beta (1 + s)
    w1 = 1.0 + 1j * k * l
    w2 = 2.0 + 1j * k * l
    # int r^{ikl} dr and int r^{1+ikl} dr over [1+a, 1+b] in the variable u = log r
    i1 = np.exp(np.outer(ua, w1)) * du[:, None] * _e1(np.outer(du, w1))
    i2 = np.exp(np.outer(ua, w2)) * du[:, None] * _e1(np.outer(du, w2))
    cells = c0 * i1 + beta * i2
    pref = np.vstack([np.zeros((1, l.shape[0]), complex), np.cumsum(cells, axis=0)])
    idx = np.searchsorted(cuts, times)
    return -np.exp(-1j * k * np.outer(np.log1p(times), l)) * pref[idx]


def transport_G(pot, k, t, x_grid=None):
    """G for speed 1/(1+t); characteristics x - k log((1+t)/(1+s))."""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    sol = TransportSolution("G", k, times, _mu_G(pot, k, times), pot.reality)
    return sol if x_grid is None else sol.field(x_grid)


def _v2_rhs(pot, T):
    """int_0^T (1+t) sum_l |V_l(t)|^2 dt, exact (cubic per piece, 3-point Gauss)."""
    cuts = pot.pieces_between(0.0, T)
    x, w = np.polynomial.legendre.leggauss(3)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        s = 0.5 * (b - a) * x + 0.5 * (a + b)
        rows = pot.coeffs_at(s)
        total += 0.5 * (b - a) * float(np.sum(w * (1.0 + s) * np.sum(np.abs(rows) ** 2, axis=1)))
    return total


def h_half_norm_of_transport(pot, k, T, n_t=256, n_x=DEFAULT_NX):
    """(sup_{t<T} ||G(., t, k)||_{H^{1/2}}, int_0^T (1+t) int V^2 dx dt).

    The sup is taken over ``n_t`` uniform times plus the profile breakpoints;
    ``int dx`` uses the normalised measure, so it equals sum_l |V_l|^2.
    """
    ts = np.union1d(np.linspace(0.0, T, n_t + 1)[:-1], pot.times[(pot.times >= 0) & (pot.times < T)])
    lhs = float(np.max(transport_G(pot, k, ts).h_half_norms(n_x)))
    return lhs, _v2_rhs(pot, T)


# --- the frozen-block reduction --------------------------------------------

def gaps_rhs_correction(T, alpha_exp, t, n, k):
    """V1(n, t): the gaps multiplier minus the frozen one, times k, on |n| <= [T^alpha]."""
    if not T <= t <= 2 * T:
        raise ValueError("t must lie in [T, 2T]")
    rest = SymbolSpec.rest(T, alpha_exp)
    return complex(k * (SymbolSpec.gaps().multiplier(n, t) - rest.multiplier(n, t)))


def gaps_rhs_sup(T, alpha_exp, k=1.0, n_t=257):
    """sup over |n| <= [T^alpha] and t in [T, 2T] of |V1(n, t)|."""
    cut = SymbolSpec.rest(T, alpha_exp).frozen_cutoff
    n = np.arange(-cut, cut + 1).astype(float)
    ts = np.linspace(T, 2 * T, n_t)
    gaps = SymbolSpec.gaps()
    vals = [np.max(np.abs(gaps.multiplier(n, t) - n / T)) for t in ts]
    return abs(k) * float(max(vals))


def loglog_fit(x, y):
    """Least-squares slope of log y against log x with a residual half-width."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    dof = max(len(lx) - 2, 1)
    resid = ly - A @ coef
    s2 = float(resid @ resid) / dof
    half = math.sqrt(s2 / max(float(np.sum((lx - lx.mean()) ** 2)), 1e-300))
    return float(coef[0]), half


def gaps_rhs_fit(T_list, alpha_exp, k=1.0):
    sups = [gaps_rhs_sup(T, alpha_exp, k) for T in T_list]
    slope, half = loglog_fit(T_list, sups)
    return {"T": list(T_list), "sup": sups, "slope": slope, "halfwidth": half,
            "constant_2a2": [s / T ** (2 * alpha_exp - 2) for s, T in zip(sups, T_list)],
            "constant_a1": [s / T ** (alpha_exp - 1) for s, T in zip(sups, T_list)]}


@dataclass(frozen=True)
class DiadicParams:
    gamma: float
    A: float = 2.0
    alpha_exp: float | None = None
    delta_exp: float | None = None
    omega_beta: float | None = None
    C_betar: float = 1.0
    linf_slack: float = 0.1

    def __post_init__(self):
        eps = 1.0 - self.gamma
        if not 83.0 / 87.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [83/87, 1)")
        if self.alpha_exp is None:
            object.__setattr__(self, "alpha_exp", 11.0 * eps)
        if self.delta_exp is None:
            object.__setattr__(self, "delta_exp", 6.0 * eps)
        if self.omega_beta is None:
            object.__setattr__(self, "omega_beta", 1.25 * eps)
        if self.A <= 1:
            raise ValueError("A must exceed 1")
        if not self.alpha_exp < 0.5:
            raise ValueError("need alpha < 1/2")
        if not self.delta_exp < self.alpha_exp:
            raise ValueError("need delta < alpha")
        if not self.alpha_exp > self.delta_exp + 4.0 * eps:
            raise ValueError("need alpha > delta + 4 (1 - gamma)")
        if not eps < self.omega_beta < 1.5 * eps:
            raise ValueError("omega_beta must lie in (1 - gamma, 1.5 (1 - gamma))")

    @property
    def beta_exp(self):
        return 1.5 * (1.0 - self.gamma)

    @staticmethod
    def T_list(j_max, j_min=0):
        return [2.0 ** j for j in range(j_min, j_max + 1)]


class HypothesisError(ValueError):
    """Initial data violate the block hypotheses (sup and H^{1/2} bounds)."""


def _grid_values(state, n_x):
    c = np.zeros(n_x, dtype=np.complex128)
    c[state.modes % n_x] = state.coeffs
    return np.fft.ifft(c) * n_x


def check_betar(u0, T, params, n_x=None):
    """Return (ok, sup|u0|, ||u0||_{H^{1/2}}, bound)."""
    n_x = n_x or max(DEFAULT_NX, 4 * u0.n_max)
    sup = float(np.max(np.abs(_grid_values(u0, n_x))))
    h = math.sqrt(float(np.sum((1.0 + np.abs(u0.modes)) * np.abs(u0.coeffs) ** 2)))
    bound = params.C_betar * T ** params.beta_exp
    return sup <= 1.0 + params.linf_slack and h <= bound, sup, h, bound


@dataclass
class WKBResult:
    error: float
    times: np.ndarray
    errors: np.ndarray
    end_state: FourierState
    v1_integral: float
    states: list = field(default_factory=list)


def _v1_integral(T, alpha_exp, k, n_t=257):
    """int_T^{2T} sup_n |V1(n, t)| dt by the trapezoidal rule."""
    cut = SymbolSpec.rest(T, alpha_exp).frozen_cutoff
    n = np.arange(-cut, cut + 1).astype(float)
    ts = np.linspace(T, 2 * T, n_t)
    gaps = SymbolSpec.gaps()
    vals = np.array([np.max(np.abs(gaps.multiplier(n, t) - n / T)) for t in ts]) * abs(k)
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts)))


def wkb_compare(pot, params, T, k, u0, n_obs=16, tol=1e-8, n_x=None, check=True):
    """sup over observer times in [T, 2T] of ||u - nu u0(. - k tau / T)||.

    ``u`` solves the frozen-block evolution from ``u0`` at time T; nu is
    the speed-1/T transport solution started at T.
    """
    if check:
        ok, sup, h, bound = check_betar(u0, T, params, n_x)
        if not ok:
            raise HypothesisError(f"initial data violate the block hypotheses: sup={sup:.4g}, "
                                  f"H^1/2={h:.4g}, bound={bound:.4g}")
    spec = SymbolSpec.rest(T, params.alpha_exp)
    obs = tuple(T + T * np.arange(1, n_obs + 1) / n_obs)
    init = FourierState(u0.coeffs, u0.n_max, "lab", T)
    traj = evolve(init, spec, pot, EvolveConfig(k=k, t0=T, t1=2 * T, tol=tol, dt_init=0.1,
                                                observer_times=obs))
    tau = np.asarray(obs) - T
    nu = transport_nu(pot, k, T, t=tau, t_start=T)
    n_x = n_x or max(DEFAULT_NX, 4 * u0.n_max)
    x = 2 * np.pi * np.arange(n_x) / n_x
    nu_f = nu.field(x)
    errs = []
    n = u0.modes
    for i, s in enumerate(traj.states):
        shifted = u0.with_coeffs(u0.coeffs * np.exp(-1j * n * k * tau[i] / T))
        diff = _grid_values(s, n_x) - nu_f[i] * _grid_values(shifted, n_x)
        errs.append(math.sqrt(float(np.mean(np.abs(diff) ** 2))))
    errs = np.asarray(errs)
    return WKBResult(float(errs.max()), np.asarray(obs), errs, traj.final,
                     _v1_integral(T, params.alpha_exp, k), traj.states)


# --- oscillatory-potential zero mode ---------------------------------------

@dataclass
class ZeroModeResult:
    sup_zero: float
    sup_l2: float
    chain_ok: bool
    worst_slack: float


def zero_mode_deviation(pot, T_start, k, t_end, n_max=32, tol=1e-9):
    """Running sups of |1 - u_0| and ||1 - u|| for V chi_{t > T_start}, u = 1 initially.

    Uses the multiplier n^2/(1+t)^2.  Before T_start the constant solution
    is stationary, so integration starts there.  Every accepted step also
    checks ||1 - u||^2 <= 3 |1 - u_0| + tol.
    """
    spec = SymbolSpec.decaying_laplacian()
    worst = [-np.inf]

    def zero_dev(s):
        return abs(1.0 - s.amplitude(0))

    def l2_dev(s):
        d = s.coeffs.copy()
        d[s.n_max] -= 1.0
        lhs = float(np.sum(np.abs(d) ** 2))
        worst[0] = max(worst[0], lhs - 3.0 * zero_dev(s) - 10 * tol)
        return math.sqrt(lhs)

    init = FourierState.constant(n_max, time=T_start)
    traj = evolve(init, spec, pot, EvolveConfig(k=k, t0=T_start, t1=t_end, tol=tol, dt_init=0.1,
                                                observer_times=(t_end,)),
                  observables={"zero": zero_dev, "l2": l2_dev})
    return ZeroModeResult(float(traj.maxima["zero"][-1]), float(traj.maxima["l2"][-1]),
                          worst[0] <= 0.0, float(worst[0]))


# --- diadic chaining --------------------------------------------------------

@dataclass
class DiadicReport:
    k: float
    T_list: list
    block_errors: list
    v1_integrals: list
    betar_ok: list
    omega_sum: float
    in_omega: bool
    flagged: bool
    sup_u_minus_G: float
    meta: dict = field(default_factory=dict)


def _speed_schedule(T_list):
    """q = 1 on [0, T_0) and q = 1/T_j on [T_j, T_{j+1})."""
    breaks = np.concatenate([[0.0], T_list])
    speeds = np.concatenate([[1.0], 1.0 / np.asarray(T_list)])
    return breaks, speeds


def diadic_pipeline_k(pot, params, k, j_max, j_min=0, n_max=128, n_obs=8, tol=1e-8, n_x=None):
    """Chained block comparison for one k.

    The exact gaps equation is integrated on [0, T_{j_min}]; each block
    [T_j, 2 T_j] then runs the frozen-block evolution from the previous end
    state.  ``sup_u_minus_G`` is measured at the block observer times.
    """
    if j_max > 14:
        raise ValueError("j_max is limited to 14")
    T_list = DiadicParams.T_list(j_max, j_min)
    n_x = n_x or max(DEFAULT_NX, 4 * n_max)
    x = 2 * np.pi * np.arange(n_x) / n_x
    u = FourierState.constant(n_max)
    sup_uG = 0.0
    if T_list[0] > 0:
        obs = tuple(T_list[0] * np.arange(1, n_obs + 1) / n_obs)
        traj = evolve(u, SymbolSpec.gaps(), pot, EvolveConfig(k=k, t1=T_list[0], tol=tol, dt_init=0.1,
                                                              observer_times=obs))
        G = transport_G(pot, k, np.asarray(obs)).field(x)
        for s, g in zip(traj.states, G):
            sup_uG = max(sup_uG, math.sqrt(float(np.mean(np.abs(_grid_values(s, n_x) - g) ** 2))))
        u = traj.final
    errors, v1s, oks = [], [], []
    flagged = False
    for T in T_list[:-1]:
        ok = check_betar(u, T, params, n_x)[0]
        oks.append(bool(ok))
        flagged = flagged or not ok
        res = wkb_compare(pot, params, T, k, u, n_obs=n_obs, tol=tol, n_x=n_x, check=False)
        errors.append(res.error)
        v1s.append(res.v1_integral)
        G = transport_G(pot, k, res.times).field(x)
        for s, g in zip(res.states, G):
            sup_uG = max(sup_uG, math.sqrt(float(np.mean(np.abs(_grid_values(s, n_x) - g) ** 2))))
        u = res.end_state
    breaks, speeds = _speed_schedule(T_list)
    nu = transport_piecewise(pot, k, breaks, speeds, np.asarray(T_list))
    hn = nu.h_half_norms(n_x)
    # excess over the free value sum_j T_j^{-2 beta}; ||nu||_{H^1/2} >= ||nu|| = 1
    omega = float(np.sum((hn ** 2 - 1.0) / np.asarray(T_list) ** (2 * params.omega_beta)))
    return DiadicReport(k, T_list, errors, v1s, oks, omega, omega < 1.0, flagged, sup_uG)


def diadic_pipeline(pot, params, k_grid, j_max, j_min=0, n_max=128, **kw):
    """Per-k reports plus the k-average of sup ||u - G|| and the bad-set measure."""
    reports = [diadic_pipeline_k(pot, params, k, j_max, j_min, n_max, **kw) for k in k_grid]
    k_grid = np.asarray(k_grid, dtype=float)
    dk = 2 * params.A / len(k_grid)
    bad = sum(dk for r in reports if r.flagged or not r.in_omega)
    return {
        "reports": reports,
        "mean_sup_u_minus_G": float(np.mean([r.sup_u_minus_G for r in reports])),
        "bad_measure": float(bad),
        "omega_fraction": float(np.mean([r.in_omega and not r.flagged for r in reports])),
    }
