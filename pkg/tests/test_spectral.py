import math

import numpy as np
import pytest

from torusflow.potentials import make_scalar, make_static, make_zero
from torusflow.spectral import (FourierState, SobolevIndex, SymbolSpec, apply_potential, inner, project,
                                sobolev_norm, symbol_multiplier, tail_mass)


def test_symbol_examples():
    assert symbol_multiplier(SymbolSpec.schrodinger(), 3, 0.0) == 9.0
    assert symbol_multiplier(SymbolSpec.gaps(), 1, 3.0) == pytest.approx(0.3125, abs=1e-15)
    # |n| = 4 > t/2 = 1.5: the quadratic part is projected away
    assert symbol_multiplier(SymbolSpec.gaps(), 4, 3.0) == pytest.approx(1.0, abs=1e-15)


def test_symbol_rejects_bad_input():
    with pytest.raises(ValueError):
        SymbolSpec((1.0, 0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        symbol_multiplier(SymbolSpec.schrodinger(), 1, -1.0)
    with pytest.raises(ValueError):
        symbol_multiplier(SymbolSpec.schrodinger(), 5, 0.0, n_max=4)


def test_gaps_threshold_sides():
    g = SymbolSpec.gaps()
    n = 3
    below, above = 2 * n - 1e-9, 2 * n + 1e-9
    # below the crossing |n| > t/2, so only the first-order term remains
    assert g.multiplier(n, below) == pytest.approx(n / (below + 1))
    assert g.multiplier(n, above) == pytest.approx(n / (above + 1) + n ** 2 / (above + 1) ** 2)


def test_projection_examples():
    d0 = FourierState.basis(0, 3)
    assert np.array_equal(project(d0, 0, "low").coeffs, d0.coeffs)
    assert project(d0, 0, "high").norm() == 0.0
    s = FourierState.from_modes({-2: 1.0, 1: 2.0}, 3)
    hi = project(s, 1, "high")
    assert hi.amplitude(-2) == 1.0 and hi.amplitude(1) == 0.0


def test_sobolev_examples():
    assert sobolev_norm(FourierState.basis(0, 2), SobolevIndex(0.5)) == 1.0
    assert sobolev_norm(FourierState.basis(1, 2), SobolevIndex(0.5, True)) == pytest.approx(math.sqrt(2))
    assert sobolev_norm(FourierState.basis(0, 2), SobolevIndex(1.3, True)) == 0.0


def test_tail_examples():
    assert tail_mass(FourierState.basis(0, 4), 0) == 0.0
    assert tail_mass(FourierState.basis(2, 4), 1) == 1.0
    s = FourierState(np.ones(9) / 3.0, 4)
    assert tail_mass(s, 4) == 0.0


def test_apply_potential_examples():
    s = FourierState(np.arange(7) + 1j, 3)
    assert apply_potential(make_zero(2), 0.3, s).norm() == 0.0
    g = make_scalar([0.0, 1.0], [2.0, 4.0])
    assert np.allclose(apply_potential(g, 0.5, s).coeffs, 3.0 * s.coeffs, rtol=0, atol=1e-15)
    cos2 = make_static({-1: 1.0, 1: 1.0})
    out = apply_potential(cos2, 0.0, FourierState.basis(0, 3))
    assert np.array_equal(out.coeffs, FourierState.from_modes({-1: 1, 1: 1}, 3).coeffs)


def test_state_validation():
    with pytest.raises(ValueError):
        FourierState(np.ones(4), 2)
    with pytest.raises(ValueError):
        FourierState(np.array([1, np.nan, 0]), 1)
    with pytest.raises(ValueError):
        FourierState.basis(3, 2)


def test_hermitian_action(rng):
    pot = make_static({-2: 0.3 - 0.1j, -1: 0.5j, 0: 0.7, 1: -0.5j, 2: 0.3 + 0.1j})
    for _ in range(20):
        a = FourierState(rng.standard_normal(13) + 1j * rng.standard_normal(13), 6)
        b = FourierState(rng.standard_normal(13) + 1j * rng.standard_normal(13), 6)
        # truncation keeps the band-limited operator Hermitian
        lhs = inner(apply_potential(pot, 0.0, a), b)
        rhs = inner(a, apply_potential(pot, 0.0, b))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_on_grid_matches_modes():
    s = FourierState.from_modes({-1: 0.5, 2: 1j}, 3)
    x = 2 * np.pi * np.arange(8) / 8
    assert np.allclose(s.on_grid(8), 0.5 * np.exp(-1j * x) + 1j * np.exp(2j * x))
