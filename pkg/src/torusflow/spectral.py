"""Band-limited Fourier states on the torus and the symbols acting on them.

States are stored on the centered mode range ``-n_max..n_max``; array index
``i`` holds mode ``i - n_max``.  Functions are ``f(x) = sum_n f_n e^{inx}``
and the L^2 norm uses the normalised measure ``dx / 2pi`` so that
``||f||^2 = sum_n |f_n|^2``.

Mode ``n`` of the dispersion operator carries the multiplier ``P(n)``; with
``P(x) = x^2`` this is the ``n^2`` of ``-Delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

PICTURES = ("lab", "interaction")
SYMBOL_KINDS = ("static", "gaps", "decaying_laplacian", "rest")


def modes(n_max):
    return np.arange(-n_max, n_max + 1)


@dataclass(frozen=True, eq=False)
class FourierState:
    """Fourier coefficients of a band-limited function (or a block of them).

    ``coeffs`` has shape ``(2 n_max + 1,)`` or ``(2 n_max + 1, ncols)``; the
    second form carries several states at once (monodromy columns).
    """

    coeffs: np.ndarray
    n_max: int
    picture: str = "lab"
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        if c.shape[0] != 2 * self.n_max + 1:
            raise ValueError(
                f"expected {2 * self.n_max + 1} coefficients, got {c.shape[0]}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("Fourier coefficients must be finite")
        if self.picture not in PICTURES:
            raise ValueError(f"unknown picture {self.picture!r}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, n, n_max, **kw):
        if abs(n) > n_max:
            raise ValueError(f"mode {n} outside band {n_max}")
        c = np.zeros(2 * n_max + 1, dtype=np.complex128)
        c[n + n_max] = 1.0
        return cls(c, n_max, **kw)

    @classmethod
    def constant(cls, n_max, value=1.0, **kw):
        """The function identically equal to ``value`` (only mode 0)."""
        return cls.basis(0, n_max, **kw).scaled(value)

    @classmethod
    def zeros(cls, n_max, **kw):
        return cls(np.zeros(2 * n_max + 1, dtype=np.complex128), n_max, **kw)

    @classmethod
    def from_modes(cls, amplitudes, n_max, **kw):
        """Build from a ``{mode: amplitude}`` mapping."""
        c = np.zeros(2 * n_max + 1, dtype=np.complex128)
        for n, a in amplitudes.items():
            if abs(n) > n_max:
                raise ValueError(f"mode {n} outside band {n_max}")
            c[n + n_max] += a
        return cls(c, n_max, **kw)

    @property
    def modes(self):
        return modes(self.n_max)

    def amplitude(self, n):
        return self.coeffs[n + self.n_max]

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def scaled(self, a):
        return replace(self, coeffs=self.coeffs * a)

    def with_coeffs(self, coeffs, **kw):
        return replace(self, coeffs=coeffs, **kw)

    def resized(self, n_max):
        """Zero-pad or truncate to a new band limit."""
        shape = (2 * n_max + 1,) + self.coeffs.shape[1:]
        out = np.zeros(shape, dtype=np.complex128)
        m = min(n_max, self.n_max)
        out[n_max - m:n_max + m + 1] = self.coeffs[self.n_max - m:self.n_max + m + 1]
        return FourierState(out, n_max, self.picture, self.time)

    def on_grid(self, n_x):
        """Samples ``f(2 pi j / n_x)``; diagnostics only."""
        x = 2 * np.pi * np.arange(n_x) / n_x
        return np.exp(1j * np.outer(x, self.modes)) @ self.coeffs


@dataclass(frozen=True)
class SobolevIndex:
    alpha: float
    homogeneous: bool = False


@dataclass(frozen=True)
class SymbolSpec:
    """Dispersion multiplier lambda(n, t) of the evolution ``i u_t = (k P + V) u``.

    kinds
      ``static``: ``P(n) = sum_j p_j n^j`` with ``poly_coeffs = (p_1, ..., p_d)``.
      ``gaps``: ``n/(t+1) + [|n| <= t/2] n^2/(t+1)^2``.
      ``decaying_laplacian``: ``n^2/(t+1)^2``.
      ``rest``: the gaps multiplier with modes ``|n| <= [T^alpha]`` frozen at
      ``n/T`` (block start ``T = block_start``).
    """

    poly_coeffs: tuple = (0.0, 1.0)
    kind: str = "static"
    block_start: float | None = None
    alpha_exp: float | None = None

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if len(self.poly_coeffs) > 3:
            raise ValueError("polynomial symbols of degree > 3 are not supported")
        if self.kind == "rest" and (self.block_start is None or self.alpha_exp is None):
            raise ValueError("rest symbol needs block_start and alpha_exp")
        object.__setattr__(self, "poly_coeffs", tuple(float(p) for p in self.poly_coeffs))

    @classmethod
    def schrodinger(cls):
        return cls((0.0, 1.0))

    @classmethod
    def gaps(cls):
        return cls(kind="gaps")

    @classmethod
    def decaying_laplacian(cls):
        return cls(kind="decaying_laplacian")

    @classmethod
    def rest(cls, block_start, alpha_exp):
        return cls(kind="rest", block_start=float(block_start), alpha_exp=float(alpha_exp))

    @property
    def is_static(self):
        return self.kind == "static"

    @property
    def frozen_cutoff(self):
        """``[T^alpha]`` for the rest symbol."""
        return int(math.floor(self.block_start ** self.alpha_exp + 1e-12))

    def multiplier(self, n, t):
        n = np.asarray(n, dtype=float)
        if self.kind == "static":
            return sum(p * n ** (j + 1) for j, p in enumerate(self.poly_coeffs)) + 0.0 * n
        if self.kind == "decaying_laplacian":
            return n ** 2 / (t + 1.0) ** 2
        gaps = n / (t + 1.0) + np.where(np.abs(n) <= t / 2.0, n ** 2 / (t + 1.0) ** 2, 0.0)
        if self.kind == "gaps":
            return gaps
        low = np.abs(n) <= self.frozen_cutoff
        return np.where(low, n / self.block_start, gaps)

    def phase(self, n, t):
        """Closed-form ``int_0^t multiplier(n, s) ds``."""
        n = np.asarray(n, dtype=float)
        if self.kind == "static":
            return self.multiplier(n, t) * t
        if self.kind == "decaying_laplacian":
            return n ** 2 * (1.0 - 1.0 / (1.0 + t))
        start = 2.0 * np.abs(n)
        quad = np.where(t > start, n ** 2 * (1.0 / (1.0 + start) - 1.0 / (1.0 + t)), 0.0)
        gaps = n * math.log1p(t) + quad
        if self.kind == "gaps":
            return gaps
        low = np.abs(n) <= self.frozen_cutoff
        return np.where(low, n * t / self.block_start, gaps)

    def switch_times(self, n_max, t0, t1):
        """Times in (t0, t1) where the multiplier jumps (projection thresholds)."""
        if self.kind not in ("gaps", "rest"):
            return np.empty(0)
        n = np.arange(0, n_max + 1)
        if self.kind == "rest":
            n = n[n > self.frozen_cutoff]
        ts = 2.0 * n
        return ts[(ts > t0) & (ts < t1)]


def symbol_multiplier(spec, n, t, n_max=None):
    """lambda(n, t) for a single mode, excluding the coupling k."""
    if n_max is not None and abs(n) > n_max:
        raise ValueError(f"mode {n} outside band {n_max}")
    if t < 0:
        raise ValueError("time must be non-negative")
    return float(spec.multiplier(n, t))


def project(state, N, part="low"):
    """P_N (``low``: |n| <= N) or Q_N (``high``: |n| > N)."""
    if N < 0 or N > state.n_max:
        raise ValueError(f"projection level {N} outside band {state.n_max}")
    keep = np.abs(state.modes) <= N
    if part == "high":
        keep = ~keep
    elif part != "low":
        raise ValueError(f"unknown part {part!r}")
    mask = keep.reshape((-1,) + (1,) * (state.coeffs.ndim - 1))
    return state.with_coeffs(np.where(mask, state.coeffs, 0.0))


def sobolev_weights(n_max, alpha, homogeneous=False):
    w = (1.0 + np.abs(modes(n_max))) ** (2.0 * alpha)
    if homogeneous:
        w[n_max] = 0.0
    return w


def sobolev_norm(state, idx):
    w = sobolev_weights(state.n_max, idx.alpha, idx.homogeneous)
    return float(np.sqrt(np.sum(w * np.abs(state.coeffs) ** 2)))


def tail_mass(state, mu):
    if mu < 0 or mu > state.n_max:
        raise ValueError(f"tail level {mu} outside band {state.n_max}")
    high = np.abs(state.modes) > mu
    return float(np.sum(np.abs(state.coeffs[high]) ** 2))


def apply_potential(pot, t, state):
    """Multiplication by V(., t), i.e. convolution with its Fourier coefficients."""
    vhat = pot.coeff_at(t)
    L = pot.l_max
    N = state.n_max
    c = state.coeffs
    if c.ndim == 1:
        out = np.convolve(c, vhat)[L:L + 2 * N + 1]
    else:
        out = np.stack([np.convolve(c[:, j], vhat)[L:L + 2 * N + 1]
                        for j in range(c.shape[1])], axis=1)
    return state.with_coeffs(out)


def inner(a, b):
    """<a, b> linear in the first slot."""
    return complex(np.vdot(b.coeffs, a.coeffs))
