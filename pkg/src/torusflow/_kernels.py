"""Compiled inner loops for the banded interaction-picture stepper.

A banded generator is stored by diagonals: ``D[l + L, m]`` holds the entry
at row ``m`` and column ``m - l`` (centered band indices), so mode coupling
``V_hat[l]`` sits on diagonal ``l``.
"""

import numpy as np
from numba import njit

_SERIES_RADIUS = 0.1


@njit(cache=True)
def _e12(z, ez):
    """Return (E1, E2) with E1(z)=(e^z-1)/z and E2(z)=int_0^1 u e^{zu} du."""
    if abs(z) < _SERIES_RADIUS:
        term = 1.0 + 0j
        e1 = 1.0 + 0j
        e2 = 0.5 + 0j
        for j in range(1, 30):
            term = term * z * (1.0 / j)
            e1 += term * (1.0 / (j + 1))
            e2 += term * (1.0 / (j + 2))
            if abs(term) < 1e-18:
                break
        return e1, e2
    return (ez - 1.0) / z, (ez * (z - 1.0) + 1.0) / (z * z)


@njit(cache=True)
def cell_integrals(alpha, beta, omega, a, h):
    """Exact integrals of (alpha + beta (t - a)) e^{i omega t} over [a, a + h].

    All inputs broadcast elementwise over 1-d arrays of equal length.
    """
    out = np.empty(alpha.shape[0], dtype=np.complex128)
    for i in range(alpha.shape[0]):
        z = 1j * omega[i] * h
        e1, e2 = _e12(z, np.exp(z))
        out[i] = np.exp(1j * omega[i] * a) * h * (alpha[i] * e1 + beta[i] * h * e2)
    return out


@njit(cache=True)
def magnus_band(D, k, lam, phi, alpha, beta, a, h, midpoint):
    """Fill ``D`` with -i * Omega_1 for one step [a, a + h].

    ``lam`` and ``phi`` are the multiplier and its accumulated phase at the
    step midpoint; the phase is linearised about the midpoint, which is
    exact for static symbols.  ``alpha``/``beta`` are the potential's value
    at ``a`` and slope, per mode l in [-L, L].
    """
    nl, M = D.shape
    L = (nl - 1) // 2
    c = a + 0.5 * h
    pm = np.empty(M, dtype=np.complex128)
    qm = np.empty(M, dtype=np.complex128)
    for m in range(M):
        pm[m] = np.exp(1j * k * (phi[m] + lam[m] * (a - c)))
        qm[m] = np.exp(1j * k * lam[m] * h)
    for li in range(nl):
        l = li - L
        al = alpha[li]
        bl = beta[li]
        for m in range(M):
            n = m - l
            if n < 0 or n >= M:
                D[li, m] = 0.0
                continue
            if al == 0.0 and bl == 0.0:
                D[li, m] = 0.0
                continue
            ph = pm[m] * np.conj(pm[n])
            if midpoint:
                D[li, m] = -1j * np.exp(1j * k * (phi[m] - phi[n])) * h * (al + 0.5 * bl * h)
            else:
                z = 1j * k * (lam[m] - lam[n]) * h
                e1, e2 = _e12(z, qm[m] * np.conj(qm[n]))
                D[li, m] = -1j * ph * h * (al * e1 + bl * h * e2)


@njit(cache=True)
def band_matvec(D, v):
    nl, M = D.shape
    L = (nl - 1) // 2
    out = np.zeros_like(v)
    for li in range(nl):
        l = li - L
        for m in range(M):
            n = m - l
            if n < 0 or n >= M:
                continue
            d = D[li, m]
            if d == 0.0:
                continue
            for q in range(v.shape[1]):
                out[m, q] += d * v[n, q]
    return out


@njit(cache=True)
def expm_band(D, v):
    """exp(A) v for the banded matrix A stored in ``D``; ``v`` is (M, ncols).

    Scaling by s = ceil(||A||_1 / 0.5) and Taylor summation until the next
    term falls below 1e-16 relative to the partial sum.
    """
    nl, M = D.shape
    L = (nl - 1) // 2
    nrm = 0.0
    for m in range(M):
        col = 0.0
        for li in range(nl):
            col += abs(D[li, m])
        if col > nrm:
            nrm = col
    s = max(1, int(np.ceil(nrm / 0.5)))
    y = v.copy()
    term = np.empty_like(v)
    new = np.empty_like(v)
    for _ in range(s):
        term[:, :] = y
        for j in range(1, 60):
            new[:, :] = 0.0
            scale = 1.0 / (s * j)
            for li in range(nl):
                l = li - L
                for m in range(M):
                    n = m - l
                    if n < 0 or n >= M:
                        continue
                    d = D[li, m]
                    if d == 0.0:
                        continue
                    d = d * scale
                    for q in range(v.shape[1]):
                        new[m, q] += d * term[n, q]
            tn = 0.0
            yn = 0.0
            for m in range(M):
                for q in range(v.shape[1]):
                    y[m, q] += new[m, q]
                    tn += new[m, q].real ** 2 + new[m, q].imag ** 2
                    yn += y[m, q].real ** 2 + y[m, q].imag ** 2
            term, new = new, term
            if tn <= 1e-32 * yn:
                break
    return y


@njit(cache=True)
def pairwise_sup(P):
    """Max over i < j of |P[..., j] - P[..., i]| for each leading row of P."""
    R, G = P.shape
    out = np.zeros(R)
    arg = np.zeros((R, 2), dtype=np.int64)
    for r in range(R):
        best = 0.0
        bi = 0
        bj = 0
        for i in range(G):
            for j in range(i + 1, G):
                d = abs(P[r, j] - P[r, i])
                if d > best:
                    best = d
                    bi = i
                    bj = j
        out[r] = best
        arg[r, 0] = bi
        arg[r, 1] = bj
    return out, arg


@njit(cache=True)
def joint_pairwise_sup(P):
    """Max over i < j of sqrt(sum_r |P[r, j] - P[r, i]|^2)."""
    R, G = P.shape
    best = 0.0
    for i in range(G):
        for j in range(i + 1, G):
            acc = 0.0
            for r in range(R):
                d = P[r, j] - P[r, i]
                acc += d.real ** 2 + d.imag ** 2
            if acc > best:
                best = acc
    return np.sqrt(best)


@njit(cache=True)
def variation_dp(d, beta):
    """best[j] = max_{i<j} best[i] + d[i, j]^beta; returns best and links."""
    G = d.shape[0]
    best = np.zeros(G)
    link = np.zeros(G, dtype=np.int64)
    for j in range(1, G):
        b = -1.0
        bi = 0
        for i in range(j):
            cand = best[i] + d[i, j] ** beta
            if cand > b:
                b = cand
                bi = i
        best[j] = b
        link[j] = bi
    return best, link
