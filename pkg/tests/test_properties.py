"""Property tests for the invariants of the state, potential, flow and estimator layers."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from torusflow import potentials as pm
from torusflow.estimators import IncrementCurve, variation_norm
from torusflow.harness.fuzz import krein_ratio, otriv_sides, sample_otriv
from torusflow.propagator import EvolveConfig, evolve
from torusflow.spectral import (FourierState, SobolevIndex, SymbolSpec, apply_potential, inner, project,
                                sobolev_norm, tail_mass)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def states(draw, n_max=None):
    n = draw(st.integers(0, 12)) if n_max is None else n_max
    re = draw(arrays(float, 2 * n + 1, elements=finite))
    im = draw(arrays(float, 2 * n + 1, elements=finite))
    return FourierState(re + 1j * im, n)


@given(states(), st.floats(0, 3))
def test_parseval_and_weights(s, alpha):
    l2 = sobolev_norm(s, SobolevIndex(0.0))
    assert l2 == pytest.approx(s.norm(), rel=1e-12, abs=1e-300)
    assert sobolev_norm(s, SobolevIndex(alpha)) >= l2 * (1 - 1e-12)
    assert sobolev_norm(s, SobolevIndex(alpha, True)) <= sobolev_norm(s, SobolevIndex(alpha)) * (1 + 1e-12)


@given(states())
def test_tail_mass_monotone(s):
    tails = [tail_mass(s, mu) for mu in range(s.n_max + 1)]
    assert all(a >= b * (1 - 1e-14) for a, b in zip(tails, tails[1:]))
    assert tails[-1] == 0.0 and tails[0] <= s.norm() ** 2 * (1 + 1e-12)


@given(st.data())
def test_projection_reconstructs(data):
    s = data.draw(states())
    N = data.draw(st.integers(0, s.n_max))
    lo, hi = project(s, N), project(s, N, "high")
    assert np.array_equal(lo.coeffs + hi.coeffs, s.coeffs)
    assert abs(inner(lo, hi)) == 0
    assert np.array_equal(project(lo, N).coeffs, lo.coeffs)


@given(st.data())
def test_multiplication_linear_and_local(data):
    n = data.draw(st.integers(0, 8))
    a, b = data.draw(states(n)), data.draw(states(n))
    z = complex(data.draw(finite), data.draw(finite))
    pot = pm.make_random_bounded(data.draw(st.integers(0, 50)), data.draw(st.integers(0, 3)),
                                 pm.default_time_grid(2.0), 1.0, complex_valued=True)
    t = data.draw(st.floats(0, 2))
    lhs = apply_potential(pot, t, a.with_coeffs(a.coeffs + z * b.coeffs)).coeffs
    rhs = apply_potential(pot, t, a).coeffs + z * apply_potential(pot, t, b).coeffs
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(st.integers(0, 1000), st.integers(0, 3), st.floats(0, 4))
def test_real_potential_is_hermitian(seed, L, t):
    pot = pm.make_random_bounded(seed, L, pm.default_time_grid(4.0), 1.0)
    n = 6
    M = np.stack([apply_potential(pot, t, FourierState.basis(j, n)).coeffs for j in range(-n, n + 1)], axis=1)
    assert np.allclose(M, M.conj().T, atol=1e-14)


@given(st.integers(0, 1000), st.integers(0, 4), st.floats(0.1, 1.0))
def test_random_potential_envelope(seed, L, bound):
    pot = pm.make_random_bounded(seed, L, pm.default_time_grid(4.0), bound)
    assert np.all(pot.sup_norms(pot.times, 2048) <= bound * (1 + 1e-9))


@settings(max_examples=15)
@given(st.integers(0, 1000), st.floats(-2, 2), st.integers(0, 100))
def test_flow_is_unitary_and_linear(seed, k, sseed):
    pot = pm.make_random_bounded(seed, 2, pm.default_time_grid(1.0), 1.0)
    rng = np.random.default_rng(sseed)
    a = FourierState(rng.standard_normal(13) + 1j * rng.standard_normal(13), 6)
    b = FourierState(rng.standard_normal(13) + 1j * rng.standard_normal(13), 6)
    cfg = EvolveConfig(k=k, t1=1.0, tol=1e-11)
    spec = SymbolSpec.schrodinger()
    ua, ub = evolve(a, spec, pot, cfg).final, evolve(b, spec, pot, cfg).final
    uab = evolve(a.with_coeffs(a.coeffs + 2j * b.coeffs), spec, pot, cfg).final
    assert ua.norm() == pytest.approx(a.norm(), rel=1e-8)
    assert np.allclose(uab.coeffs, ua.coeffs + 2j * ub.coeffs, atol=1e-8 * a.norm())
    assert abs(inner(ua, ub) - inner(a, b)) <= 1e-8 * a.norm() * b.norm()


@settings(max_examples=40)
@given(arrays(float, st.tuples(st.integers(2, 9), st.just(2)), elements=st.floats(-5, 5)), st.floats(1, 2))
def test_variation_bounds(points, beta):
    curve = IncrementCurve.from_samples(points)
    v, part = variation_norm(curve, beta)
    end = float(np.linalg.norm(points[-1] - points[0]))
    total = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))
    assert end * (1 - 1e-12) - 1e-12 <= v <= total * (1 + 1e-12) + 1e-12
    assert part[0] == 0 and part[-1] == curve.G
    assert variation_norm(curve, 2.0)[0] <= variation_norm(curve, 1.0)[0] * (1 + 1e-12) + 1e-12


@settings(max_examples=40)
@given(arrays(float, st.tuples(st.integers(2, 8), st.just(1)), elements=st.floats(-5, 5)), st.integers(1, 4))
def test_variation_refinement_monotone(points, extra):
    """Adding sample points never decreases the variation."""
    rng = np.random.default_rng(extra)
    more = np.concatenate([points, rng.uniform(-5, 5, (extra, 1))])
    assert variation_norm(IncrementCurve.from_samples(more), 1.5)[0] >= \
        variation_norm(IncrementCurve.from_samples(points), 1.5)[0] * (1 - 1e-12)


@given(st.integers(0, 10_000), st.integers(1, 8))
def test_otriv_inequality(seed, dim):
    v1, v2, a = sample_otriv(np.random.default_rng(seed), dim)
    assert abs(np.vdot(v1, v2)) <= 1e-9 * (1 + np.linalg.norm(a) ** 2)
    lhs, rhs = otriv_sides(v1, v2, a)
    assert lhs <= rhs * (1 + 1e-9) + 1e-9


@given(st.integers(0, 10_000), st.integers(0, 6))
def test_krein_ratio_bounded(seed, d):
    rng = np.random.default_rng(seed)
    dim = 2 * d + 1
    f = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    r = krein_ratio(f, g)
    assert np.isfinite(r) and r >= 0
