import math

import numpy as np
import pytest

from torusflow import potentials as pm
from torusflow.estimators import (D1, D2, ComplexVParams, IncrementCurve, IntervalGrid, build_v2_curve,
                                  carleson_q, commutator_increment, curve_diameter, hs_offdiag,
                                  integrated_matrices, sup_hs_offdiag, upsilon1, variation_norm,
                                  weighted_opnorm)
from torusflow.spectral import SymbolSpec

from oracles import brute_variation, random_curve

SCH = SymbolSpec.schrodinger()
COS2 = pm.make_static({-1: 1.0, 1: 1.0})


# --- sup norms, D1, D2 ---------------------------------------------------------

def test_upsilon1_examples():
    assert upsilon1(pm.make_zero(2), 0.5) == 0.0
    assert upsilon1(COS2, 0.3) == pytest.approx(2.0, abs=1e-4)
    assert upsilon1(pm.make_constant_imag(0.7), 1.0) == pytest.approx(0.7)


def test_D1_D2_unit_profile():
    one = lambda t: np.ones_like(np.asarray(t, float))
    assert D1(one, 2.0) == pytest.approx(4.0, rel=1e-12)
    assert D2(one, 2.0, lambda t: np.ones_like(np.asarray(t, float))) == pytest.approx(4.0, rel=1e-12)


def test_D1_D2_decaying_profile():
    """Closed forms for u1 = (1+t)^{-1} and w = (1+t)^{1/2}."""
    u1 = lambda t: 1.0 / (1.0 + np.asarray(t))
    w = lambda t: np.sqrt(1.0 + np.asarray(t))
    vals = []
    for T in (10.0, 100.0, 1000.0):
        s = 1.0 + T
        d1 = (1 - 1 / s) + (1 - (math.log(s) + 1) / s)
        a = 2 * (1 - s ** -0.5)
        d2 = a * 2 * (a - (1 - 1 / s))
        assert D1(u1, T) == pytest.approx(d1, rel=1e-9)
        assert D2(u1, T, w) == pytest.approx(d2, rel=1e-9)
        vals.append(d1 + d2)
    # both converge as T grows
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])


def test_D2_rejects_bad_weight():
    with pytest.raises(ValueError):
        D2(COS2, 1.0, lambda t: np.zeros_like(np.asarray(t, float)))


def test_D1_potential_zero():
    assert D1(pm.make_zero(1, (0.0, 2.0)), 2.0) == 0.0


# --- Carleson q ---------------------------------------------------------------

def test_carleson_examples():
    one = pm.make_static({0: 1.0}, times=(0.0, 1.0))
    g = IntervalGrid.uniform(0.0, 1.0, 4000)
    assert carleson_q(one, 0, 0.0, g) == pytest.approx(1.0, abs=1e-14)
    assert carleson_q(one, 0, 2 * math.pi, g) == pytest.approx(1 / math.pi, abs=1e-6)
    assert carleson_q(pm.make_zero(0), 0, 1.0, g) == 0.0


def test_carleson_refinement_monotone():
    rng = np.random.default_rng(7)
    for i in range(100):
        pot = pm.make_random_bounded(i, 2, pm.default_time_grid(2.0), 1.0)
        g = IntervalGrid.uniform(0.0, 2.0, int(rng.integers(2, 40)), pot)
        l, k = int(rng.integers(-2, 3)), rng.uniform(-20, 20)
        assert carleson_q(pot, l, k, g.refined()) >= carleson_q(pot, l, k, g) * (1 - 1e-14)


def test_curve_diameter_paths():
    z = np.exp(2j * np.pi * np.arange(200) / 200)
    assert curve_diameter(z) == pytest.approx(2.0, abs=1e-3)
    assert curve_diameter(np.linspace(0, 1, 100) * (1 + 1j)) == pytest.approx(math.sqrt(2))
    assert curve_diameter(np.zeros(100)) == 0.0
    rng = np.random.default_rng(0)
    pts = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    assert curve_diameter(pts) == pytest.approx(np.max(np.abs(pts[:, None] - pts[None, :])), rel=1e-14)


def test_grid_limits():
    with pytest.raises(ValueError):
        IntervalGrid(np.linspace(0, 1, 4098))
    with pytest.raises(ValueError):
        IntervalGrid(np.array([0.0, 1.0, 0.5]))
    pot = pm.make_random_bounded(0, 1, pm.default_time_grid(3.0), 1.0)
    g = IntervalGrid.uniform(0.0, 3.0, 5, pot)
    assert set(pot.times).issubset(set(g.breakpoints))


# --- Hilbert-Schmidt blocks ---------------------------------------------------

def test_hs_examples():
    assert hs_offdiag(pm.make_zero(2), SCH, 3, (0.0, 1.0), 1.0) == 0.0
    assert hs_offdiag(COS2, SCH, 3, (0.0, 1.0), 0.0, n_max=4) == pytest.approx(math.sqrt(2), abs=1e-14)


def test_hs_block_symmetry():
    """For real V the (P, Q) and (Q, P) blocks have equal HS norms."""
    pot = pm.make_random_bounded(4, 3, pm.default_time_grid(1.0), 1.0)
    N, n_max, S, k = 5, 8, (0.1, 0.9), 0.7
    F = integrated_matrices(pot, SCH, k, n_max, np.array(S))
    E = F[:, :, 1] - F[:, :, 0]
    low = np.abs(np.arange(-n_max, n_max + 1)) <= N
    pq = np.linalg.norm(E[np.ix_(low, ~low)])
    qp = np.linalg.norm(E[np.ix_(~low, low)])
    assert pq == pytest.approx(qp, rel=1e-12)
    assert hs_offdiag(pot, SCH, N, S, k, n_max) == pytest.approx(pq, rel=1e-12)


def test_sup_hs_examples():
    g = IntervalGrid.uniform(0.0, 1.0, 256)
    b0 = sup_hs_offdiag(pm.make_zero(2), SCH, 4, 1.0, g)
    assert (b0.lower, b0.upper) == (0.0, 0.0)
    one = pm.make_static({1: 1.0}, l_max=1, times=(0.0, 1.0))
    # N = 0 with band 1 leaves the single entry (0, -1)
    b = sup_hs_offdiag(one, SCH, 0, 2.0, g, n_max=1)
    q = carleson_q(one, 1, 2.0 * (0 - 1), g)
    assert b.upper == pytest.approx(q, rel=1e-12)
    assert b.lower == pytest.approx(q, rel=1e-12)
    pot = pm.make_random_bounded(3, 4, pm.default_time_grid(1.0), 1.0)
    r = sup_hs_offdiag(pot, SCH, 8, 1.3, IntervalGrid.uniform(0.0, 1.0, 512, pot))
    assert 0 < r.lower <= r.upper and r.gap >= 0


# --- weighted norms and commutators ---------------------------------------------

def test_weighted_opnorm_examples():
    assert weighted_opnorm(np.eye(7), 0.8) == pytest.approx(1.0, rel=1e-10)
    assert weighted_opnorm(np.diag([2.0, 3.0]), 1.7) == pytest.approx(3.0, rel=1e-10)
    rng = np.random.default_rng(3)
    A = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    assert weighted_opnorm(A, 0.5) == pytest.approx(weighted_opnorm(A, 0.5, method="svd"), rel=1e-8)
    assert weighted_opnorm(np.zeros((3, 3)), 1.0) == 0.0


def test_commutator_examples():
    assert commutator_increment(pm.make_zero(2), SCH, 1.0, 1.0, 0.0, 1.0, 3) == 0.0
    diag = pm.make_static({0: 1.5})
    assert commutator_increment(diag, SCH, 0.8, 1.0, 0.0, 1.0, 3) == 0.0
    got = commutator_increment(COS2, SCH, 1.0, 0.0, 0.0, 1.0, 2)
    total = 0.0
    for m in range(-2, 3):
        for n in (m - 1, m + 1):
            if abs(n) <= 2:
                lm, ln = 2 + abs(m), 2 + abs(n)
                total += ((lm - ln) / ln) ** 2
    assert got == pytest.approx(math.sqrt(total), rel=1e-14)
    assert got == pytest.approx(1.034139, abs=1e-6)


# --- variation norms -------------------------------------------------------------

def test_variation_examples():
    c = IncrementCurve.from_samples(np.array([0.0, 1.0, 0.0]))
    assert variation_norm(c, 1.0)[0] == pytest.approx(2.0)
    assert variation_norm(c, 2.0)[0] == pytest.approx(math.sqrt(2))
    assert variation_norm(IncrementCurve.from_samples(np.ones(6)), 1.5)[0] == 0.0
    mono = np.cumsum(np.random.default_rng(1).uniform(0, 1, 10))
    v, part = variation_norm(IncrementCurve.from_samples(mono), 1.0)
    assert v == pytest.approx(mono[-1] - mono[0])
    assert part[0] == 0 and part[-1] == 9


def test_variation_matches_enumeration():
    rng = np.random.default_rng(0)
    for G in range(1, 13):
        for _ in range(3):
            c = random_curve(rng, G)
            for beta in (1.0, 1.3, 2.0):
                v, part = variation_norm(c, beta)
                assert v == pytest.approx(brute_variation(c.d, beta), rel=1e-13)
                assert sum(c.d[a, b] ** beta for a, b in zip(part, part[1:])) ** (1 / beta) == pytest.approx(v)


def test_variation_rejects_beta():
    with pytest.raises(ValueError):
        variation_norm(IncrementCurve.from_samples(np.zeros(3)), 2.5)


def test_increment_curve_validation():
    with pytest.raises(ValueError):
        IncrementCurve(np.ones((3, 3)))


def test_complex_params():
    p = ComplexVParams(1.8, 0.5)
    assert p.p_prime == pytest.approx(2.25)
    assert p.s0 == pytest.approx(0.5625)
    assert p.mu == pytest.approx(2 / 2.25)
    for bad in ((1.2, 0.5), (1.5, 0.9), (1.8, 0.0)):
        with pytest.raises(ValueError):
            ComplexVParams(*bad)


def test_v2_curve_examples():
    grid = np.linspace(0, 1, 9)
    z = build_v2_curve(pm.make_zero(2), SCH, 1.0, 0.8, grid, 3)
    assert not np.any(z.d)
    times = np.linspace(0, 1, 5)
    vals = np.array([0.2, -1.0, 0.5, 0.3, 1.1])
    g = pm.make_scalar(times, vals)
    c = build_v2_curve(g, SCH, 1.0, 0.8, grid, 3)
    prim = np.array([pm.oscillatory_integral(g, 0, 0.0, 0.0, t) for t in grid]).real
    assert np.allclose(c.d, np.abs(prim[None, :] - prim[:, None]) * np.triu(np.ones((9, 9)), 1), atol=1e-14)


def test_v2_curve_dense_oracle():
    N, k, mu = 4, 1.0, 0.9
    grid = np.linspace(0, 1, 6)
    c = build_v2_curve(COS2, SCH, k, mu, grid, N)
    n = np.arange(-N, N + 1)
    F = np.zeros((2 * N + 1, 2 * N + 1), complex)
    for i, m in enumerate(n):
        for j, nn in enumerate(n):
            if abs(m - nn) == 1:
                w = k * (m * m - nn * nn)
                F[i, j] = 1.0 if w == 0 else (np.exp(1j * w) - 1) / (1j * w)
    lam = (2.0 + np.abs(n)) ** mu
    assert c.d[0, -1] == pytest.approx(np.linalg.norm(lam[:, None] * F / lam[None, :], 2), abs=1e-10)


def test_variation_monotone_and_lower_bound():
    rng = np.random.default_rng(5)
    for _ in range(100):
        c = random_curve(rng, int(rng.integers(2, 30)), dim=int(rng.integers(1, 4)))
        vals = [variation_norm(c, b)[0] for b in (1.0, 1.25, 1.5, 1.75, 2.0)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        assert min(vals) >= c.d[0, -1] * (1 - 1e-12)
