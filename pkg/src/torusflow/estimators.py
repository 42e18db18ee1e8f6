"""Bound-side quantities: sup norms of V, D1/D2, Carleson maxima,
Hilbert-Schmidt off-diagonal norms, weighted operator norms and
p-variation norms of increment curves.

Suprema over subintervals are taken over grid endpoints only, so every
reported value is a lower bound of the continuous supremum.  Entries of
integrated interaction matrices use exact oscillatory cell integrals;
this requires a static symbol, for which the phase is linear in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy.spatial import ConvexHull, QhullError

from . import _kernels
from .potentials import PotentialModel, prefix_integrals
from .spectral import modes

MAX_GRID = 4096


class ConvergenceError(RuntimeError):
    """Power iteration did not converge; ``last`` holds the final estimate."""

    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


# --- sup norms and D1/D2 ---------------------------------------------------

def upsilon1(pot, t, n_x=512):
    """sup_x |V(x, t)| on an ``n_x``-point grid."""
    return pot.sup_norm(t, n_x)


def _as_profile(pot):
    """Vectorised u1(t) and the profile breakpoints."""
    if isinstance(pot, PotentialModel):
        return pot.sup_norms, pot.times
    return _vectorised(pot), np.empty(0)


def _vectorised(f):
    def g(ts):
        out = np.asarray(f(ts), dtype=float)
        if out.shape != np.shape(ts):
            out = np.array([f(t) for t in np.ravel(ts)], dtype=float).reshape(np.shape(ts))
        return out
    return g


@lru_cache(maxsize=8)
def _gl_rule(q):
    """Gauss-Legendre nodes/weights on [-1, 1] and the matrix mapping nodal
    values to integrals from -1 up to each node."""
    x, w = legendre.leggauss(q)
    Iv = np.empty((q, q))
    for j in range(q):
        e = np.zeros(q)
        e[j] = 1.0
        Iv[:, j] = legendre.legval(x, legendre.legint(e, lbnd=-1))
    return x, w, Iv @ np.linalg.inv(legendre.legvander(x, q - 1))


class _Panels:
    """Composite Gauss-Legendre rule with ``per_piece`` panels per profile piece."""

    def __init__(self, T, pts, per_piece, q=8):
        cuts = np.concatenate([[0.0], pts[(pts > 0) & (pts < T)], [T]])
        edges = np.concatenate([np.linspace(a, b, per_piece + 1)[:-1] for a, b in zip(cuts[:-1], cuts[1:])] + [[T]])
        x, w, S = _gl_rule(q)
        self.half = 0.5 * np.diff(edges)[:, None]
        self.nodes = self.half * x + 0.5 * (edges[:-1] + edges[1:])[:, None]
        self.weights = self.half * w
        self.S = S

    def integral(self, f):
        return float(np.sum(self.weights * f))

    def primitive(self, f):
        """int_0^t f at every node."""
        panel = np.sum(self.weights * f, axis=1)
        before = np.concatenate([[0.0], np.cumsum(panel)[:-1]])
        return before[:, None] + self.half * (f @ self.S.T)


def _refine(evaluate, T, pts, rtol, max_nodes):
    """Double the panel count until successive values agree to rtol."""
    per_piece, prev = 1, None
    n_pieces = max(1, int(np.sum((pts > 0) & (pts < T))) + 1)
    while True:
        val = evaluate(_Panels(T, pts, per_piece))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        if 2 * per_piece * n_pieces * 8 > max_nodes:
            return val
        prev, per_piece = val, 2 * per_piece


def D1(pot, T, rtol=1e-8, max_nodes=2 ** 17):
    """int_0^T u1(s)^2 (1 + int_0^s u1) ds with u1 = sup_x |V(., s)|.

    ``pot`` is a PotentialModel or a callable giving u1 directly.  Panels
    double until two successive values agree to ``rtol`` or the node
    budget is spent (the sup profile has kinks, which slow convergence).
    """
    u1, pts = _as_profile(pot)

    def evaluate(panels):
        u = u1(panels.nodes)
        return panels.integral(u ** 2 * (1.0 + panels.primitive(u)))

    return _refine(evaluate, T, pts, rtol, max_nodes)


def D2(pot, T, w, rtol=1e-8, max_nodes=2 ** 17):
    """(int_0^T u1^2 w) * (int_0^T u1(s)^2 int_0^s w^{-1} ds) for a positive weight w."""
    wv = _vectorised(w)
    if np.any(wv(np.linspace(0.0, T, 257)) <= 0):
        raise ValueError("weight w must be positive on [0, T]")
    u1, pts = _as_profile(pot)

    def evaluate(panels):
        u2 = u1(panels.nodes) ** 2
        ww = wv(panels.nodes)
        return panels.integral(u2 * ww) * panels.integral(u2 * panels.primitive(1.0 / ww))

    return _refine(evaluate, T, pts, rtol, max_nodes)


# --- grids and curve diameters ---------------------------------------------

@dataclass(frozen=True, eq=False)
class IntervalGrid:
    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.ndim != 1 or b.shape[0] < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing with at least two points")
        if b.shape[0] - 1 > MAX_GRID:
            raise ValueError(f"grid has more than {MAX_GRID} intervals")
        object.__setattr__(self, "breakpoints", b)

    @classmethod
    def uniform(cls, t0, t1, G, pot=None):
        """G equal cells on [t0, t1], merged with the potential's breakpoints."""
        b = np.linspace(t0, t1, G + 1)
        if pot is not None:
            b = np.union1d(b, pot.times[(pot.times > t0) & (pot.times < t1)])
        return cls(b)

    @property
    def G(self):
        return self.breakpoints.shape[0] - 1

    def refined(self):
        b = self.breakpoints
        return IntervalGrid(np.sort(np.concatenate([b, 0.5 * (b[:-1] + b[1:])])))

    def subsample(self, G):
        """At most G cells, keeping both endpoints."""
        if self.G <= G:
            return self
        idx = np.unique(np.round(np.linspace(0, self.G, G + 1)).astype(int))
        return IntervalGrid(self.breakpoints[idx])


def _breakpoints(grid):
    return grid.breakpoints if isinstance(grid, IntervalGrid) else IntervalGrid(grid).breakpoints


def curve_diameter(points):
    """max |z_i - z_j| over a planar point set given as complex numbers."""
    z = np.asarray(points, dtype=np.complex128).ravel()
    if z.shape[0] < 2:
        return 0.0
    if z.shape[0] <= 64:
        return float(_kernels.pairwise_sup(z[None, :])[0][0])
    xy = np.column_stack([z.real, z.imag])
    try:
        hull = z[ConvexHull(xy).vertices]
    except (QhullError, ValueError):
        # collinear or coincident points: the extreme pair lies along a line
        d = z - z[0]
        if not np.any(d):
            return 0.0
        u = d[np.argmax(np.abs(d))]
        proj = (d * np.conj(u)).real / abs(u)
        return float(proj.max() - proj.min())
    return float(_kernels.pairwise_sup(hull[None, :])[0][0])


def carleson_q(pot, l, k, grid):
    """sup over grid subintervals S of |int_S V_l(t) e^{ikt} dt|."""
    t = _breakpoints(grid)
    return curve_diameter(prefix_integrals(pot, l, k, t))


# --- Hilbert-Schmidt off-diagonal norms ------------------------------------

def _static_lambda(spec, n):
    if not spec.is_static:
        raise ValueError("exact entry integrals need a static symbol")
    return spec.multiplier(np.asarray(n, dtype=float), 0.0)


def offdiag_entries(pot, spec, N, n_max=None):
    """Index pairs (m, n) of P_N V Q_N with nonzero coupling: |m| <= N < |n| <= n_max."""
    L = pot.l_max
    n_max = N + L if n_max is None else n_max
    if n_max <= N:
        raise ValueError("band must exceed the projection level")
    m = modes(N)
    n = modes(n_max)
    n = n[np.abs(n) > N]
    mm, nn = np.meshgrid(m, n, indexing="ij")
    keep = np.abs(mm - nn) <= L
    return mm[keep], nn[keep]


def _entry_prefixes(pot, spec, k, m, n, t):
    omega = k * (_static_lambda(spec, m) - _static_lambda(spec, n))
    return prefix_integrals(pot, m - n, omega, t)


def hs_offdiag(pot, spec, N, S, k, n_max=None):
    """||P_N Vt_S(k) Q_N||_HS for the integrated interaction matrix over S."""
    m, n = offdiag_entries(pot, spec, N, n_max)
    if m.size == 0:
        return 0.0
    P = _entry_prefixes(pot, spec, k, m, n, np.asarray(S, dtype=float))
    return float(np.sqrt(np.sum(np.abs(P[:, -1] - P[:, 0]) ** 2)))


@dataclass(frozen=True)
class HSBounds:
    lower: float
    upper: float

    @property
    def gap(self):
        return self.upper - self.lower


def sup_hs_offdiag(pot, spec, N, k, grid, n_max=None, coarse=128):
    """Bounds on sup_S ||P_N Vt_S(k) Q_N||_HS over grid subintervals S.

    ``upper`` is sqrt(sum of squared per-entry prefix-curve diameters);
    ``lower`` is the exact joint sup over subintervals of a coarse subgrid.
    """
    t = _breakpoints(grid)
    m, n = offdiag_entries(pot, spec, N, n_max)
    if m.size == 0:
        return HSBounds(0.0, 0.0)
    P = _entry_prefixes(pot, spec, k, m, n, t)
    upper = math.sqrt(sum(curve_diameter(row) ** 2 for row in P))
    idx = np.unique(np.round(np.linspace(0, t.shape[0] - 1, min(coarse, t.shape[0] - 1) + 1)).astype(int))
    lower = float(_kernels.joint_pairwise_sup(np.ascontiguousarray(P[:, idx])))
    return HSBounds(min(lower, upper), upper)


def sup_hs_offdiag_batch(pot, spec, N, ks, grid, n_max=None, coarse=128):
    return [sup_hs_offdiag(pot, spec, N, k, grid, n_max, coarse) for k in ks]


# --- weighted operator norms -----------------------------------------------

def _centered(dim):
    return np.arange(dim) - (dim - 1) // 2


def weight_diag(dim, alpha, base=1.0):
    return (base + np.abs(_centered(dim))) ** alpha


def weighted_opnorm(matrix, alpha, base=1.0, rtol=1e-10, max_iter=1000, method="power"):
    """Operator norm on the weighted space with weights (base + |j|)^alpha.

    Equals the largest singular value of D M D^{-1}.  ``method="svd"`` uses
    a dense SVD instead of power iteration.
    """
    M = np.asarray(matrix, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    d = weight_diag(M.shape[0], alpha, base)
    B = d[:, None] * M / d[None, :]
    if method == "svd":
        return float(np.linalg.norm(B, 2))
    if not np.any(B):
        return 0.0
    v = np.random.default_rng(0).standard_normal(B.shape[1]) + 0j
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = B.conj().T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - sigma) <= rtol * new:
            return new
        sigma = new
    raise ConvergenceError("power iteration did not converge", sigma)


def lambda_weights(N, mu):
    """Diagonal of Lambda^mu, (2 + |n|)^mu."""
    return (2.0 + np.abs(modes(N))) ** mu


def integrated_matrices(pot, spec, k, N, grid):
    """Prefix integrals F[:, :, i] = int_{t_0}^{t_i} Vt(k) on the band |n| <= N."""
    t = _breakpoints(grid)
    M = 2 * N + 1
    out = np.zeros((M, M, t.shape[0]), dtype=np.complex128)
    n = modes(N)
    mm, nn = np.meshgrid(n, n, indexing="ij")
    keep = np.abs(mm - nn) <= pot.l_max
    out[keep] = _entry_prefixes(pot, spec, k, mm[keep], nn[keep], t)
    return out


def commutator_increment(pot, spec, mu, k, t_i, t_j, N):
    """||[Lambda^mu, Vt_S] Lambda^{-mu}||_HS over S = [t_i, t_j]."""
    if not 0.5 < mu <= 1.0:
        raise ValueError("mu must lie in (1/2, 1]")
    F = integrated_matrices(pot, spec, k, N, np.array([t_i, t_j]))
    E = F[:, :, 1] - F[:, :, 0]
    lam = lambda_weights(N, mu)
    W = (lam[:, None] - lam[None, :]) / lam[None, :]
    return float(np.linalg.norm(W * E))


# --- increment curves and p-variation --------------------------------------

@dataclass(frozen=True, eq=False)
class IncrementCurve:
    """Increments d[i, j] (i < j) of a curve sampled on grid indices 0..G."""

    d: np.ndarray
    norm: str = "scalar"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("increment table must be square")
        if np.any(np.diag(d) != 0) or np.any(np.triu(d) < 0):
            raise ValueError("increments must be non-negative with zero diagonal")
        object.__setattr__(self, "d", d)

    @property
    def G(self):
        return self.d.shape[0] - 1

    @classmethod
    def from_samples(cls, samples, norm="scalar"):
        """d[i, j] = |x_j - x_i| (Euclidean over trailing axes)."""
        x = np.asarray(samples)
        x = x.reshape(x.shape[0], -1)
        diff = x[None, :, :] - x[:, None, :]
        return cls(np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1)), norm)


def variation_norm(curve, beta):
    """sup over grid partitions of (sum d(p_i, p_{i+1})^beta)^{1/beta}; returns (value, partition)."""
    if not 1.0 <= beta <= 2.0:
        raise ValueError("beta must lie in [1, 2]")
    G = curve.G
    if G == 0:
        return 0.0, [0]
    best, link = _kernels.variation_dp(np.ascontiguousarray(curve.d), float(beta))
    part = [G]
    while part[-1] != 0:
        part.append(int(link[part[-1]]))
    return float(best[G] ** (1.0 / beta)), part[::-1]


@dataclass(frozen=True)
class ComplexVParams:
    p: float
    alpha: float

    def __post_init__(self):
        if not 4.0 / 3.0 < self.p < 2.0:
            raise ValueError("p must lie in (4/3, 2)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.alpha * self.p < 2.0 * (self.p - 1.0):
            raise ValueError("need alpha * p < 2 (p - 1)")

    @property
    def p_prime(self):
        return self.p / (self.p - 1.0)

    @property
    def s0(self):
        return self.alpha * self.p_prime / 2.0

    @property
    def mu(self):
        return 2.0 / self.p_prime


def build_v2_curve(pot, spec, k, mu, grid, N):
    """d(i, j) = ||Lambda^mu (int_{t_i}^{t_j} Vt) Lambda^{-mu}|| on the (2+|n|)-weighted space."""
    F = integrated_matrices(pot, spec, k, N, grid)
    lam = lambda_weights(N, mu)
    F = lam[:, None, None] * F / lam[None, :, None]
    G = F.shape[2] - 1
    d = np.zeros((G + 1, G + 1))
    for i in range(G):
        diff = F[:, :, i + 1:] - F[:, :, i:i + 1]
        # batched spectral norms of the increments from t_i
        d[i, i + 1:] = np.linalg.norm(np.moveaxis(diff, 2, 0), ord=2, axis=(1, 2))
    return IncrementCurve(d, "operator", {"mu": mu, "k": k, "N": N})
