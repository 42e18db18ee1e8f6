import math

import numpy as np
import pytest

from torusflow import potentials as pm
from torusflow.propagator import (EvolveConfig, IntegrationError, dense_monodromy, duhamel_series, evolve,
                                  interaction_entry, step_midpoint, truncation_scan)
from torusflow.spectral import FourierState, SobolevIndex, SymbolSpec, sobolev_norm

SCH = SymbolSpec.schrodinger()


def _random_pot(seed=3, L=2, t_max=1.0, complex_valued=False):
    return pm.make_random_bounded(seed, L, pm.default_time_grid(t_max, h0=0.125), 1.0, complex_valued)


def _random_state(n_max, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(2 * n_max + 1) + 1j * rng.standard_normal(2 * n_max + 1)
    return FourierState(c / np.linalg.norm(c), n_max)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(k=1.0, t0=1.0, t1=1.0)
    with pytest.raises(ValueError):
        EvolveConfig(k=1.0, tol=0.0)
    with pytest.raises(ValueError):
        EvolveConfig(k=1.0, t1=1.0, observer_times=(2.0,))
    assert EvolveConfig(k=0.0, observer_times=(0.5, 0.25)).observer_times == (0.25, 0.5)


def test_interaction_entry_examples():
    z = pm.make_zero(2)
    assert interaction_entry(SCH, z, 1.3, 0.4, 2, 1) == 0
    p = _random_pot()
    assert interaction_entry(SCH, p, 2.0, 0.3, 1, 1) == pytest.approx(p.coeff_at(0.3)[p.l_max])
    one = pm.make_static({1: 1.0}, l_max=1)
    assert interaction_entry(SCH, one, 1.0, 1.0, 1, 0) == pytest.approx(np.exp(1j), abs=1e-15)


def test_step_midpoint_free_and_scalar():
    s = _random_state(4)
    out = step_midpoint(s, SCH, pm.make_zero(1), 1.0, 0.1)
    # the free lab flow is a phase per mode
    assert np.allclose(out.coeffs, s.coeffs * np.exp(-1j * s.modes ** 2 * 0.1), atol=1e-14)
    g = pm.make_scalar([0.0, 1.0], [0.5, 2.0])
    d0 = FourierState.basis(0, 3)
    dt = 0.1
    integral = 0.5 * dt + 0.75 * dt ** 2
    got = step_midpoint(d0, SCH, g, 0.7, dt).amplitude(0)
    assert abs(got - np.exp(-1j * integral)) <= dt ** 3


def test_step_richardson_ratio():
    pot = _random_pot(seed=11, t_max=1.0)
    s = _random_state(4, seed=2)
    errs = []
    for dt in (0.01, 0.005):
        ref = evolve(s, SCH, pot, EvolveConfig(k=1.0, t1=dt, tol=1e-14, dt_init=dt / 64)).final
        errs.append(np.linalg.norm(step_midpoint(s, SCH, pot, 1.0, dt).coeffs - ref.coeffs))
    assert 6.0 <= errs[0] / errs[1] <= 10.0


def test_evolve_free_constant():
    tr = evolve(FourierState.constant(8), SCH, pm.make_zero(3), EvolveConfig(k=1.7, t1=3.0, observer_times=(1.0, 3.0)))
    for s in tr.states:
        assert np.allclose(s.coeffs, FourierState.constant(8).coeffs, atol=1e-15)


@pytest.mark.parametrize("c", [1.0, -1.0])
def test_constant_imaginary_potential(c):
    tr = evolve(FourierState.constant(4), SCH, pm.make_constant_imag(c), EvolveConfig(k=0.3, t1=2.0))
    assert tr.final.norm() == pytest.approx(math.exp(2 * c), abs=1e-6)


def test_scalar_potential_phase():
    times = np.linspace(0, 2, 9)
    vals = np.cos(3 * times)
    g = pm.make_scalar(times, vals)
    tr = evolve(FourierState.constant(6), SCH, g, EvolveConfig(k=1.1, t1=2.0))
    integral = np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times))
    assert tr.final.amplitude(0) == pytest.approx(np.exp(-1j * integral), abs=1e-8)
    assert sobolev_norm(tr.final, SobolevIndex(0.5, True)) <= 1e-12


def test_unitarity_short():
    pot = _random_pot(seed=4, L=3, t_max=2.0)
    tr = evolve(_random_state(16, 1), SCH, pot, EvolveConfig(k=1.3, t1=2.0, tol=1e-10,
                                                             observer_times=tuple(np.linspace(0.25, 2, 8))))
    assert max(abs(s.norm() - 1.0) for s in tr.states) <= 1e-8


def test_gauge_consistency():
    pot = _random_pot(seed=6, t_max=1.0)
    s = _random_state(5, 3)
    lab = evolve(s, SCH, pot, EvolveConfig(k=0.8, t1=1.0, tol=1e-12)).final
    inter = evolve(s, SCH, pot, EvolveConfig(k=0.8, t1=1.0, tol=1e-12, picture="interaction")).final
    unrot = inter.coeffs * np.exp(-1j * 0.8 * s.modes ** 2 * 1.0)
    assert np.linalg.norm(unrot - lab.coeffs) <= 1e-9


def test_duhamel_examples():
    s = _random_state(3)
    cfg = EvolveConfig(k=1.0, t1=0.5)
    free, _ = duhamel_series(s, SCH, _random_pot(), cfg, 1)
    assert np.allclose(free.coeffs, s.coeffs * np.exp(-1j * s.modes ** 2 * 0.5), atol=1e-14)
    for n in (1, 3, 6):
        out, _ = duhamel_series(FourierState.constant(2), SCH, pm.make_constant_imag(1.0),
                                EvolveConfig(k=0.5, t1=1.2), n)
        partial = sum(1.2 ** j / math.factorial(j) for j in range(n))
        assert out.amplitude(0).real == pytest.approx(partial, rel=1e-12)


def test_duhamel_vs_evolve():
    pot = _random_pot(seed=8)
    s = _random_state(2, 4)
    cfg = EvolveConfig(k=1.0, t1=0.1, tol=1e-12)
    d, last = duhamel_series(s, SCH, pot, cfg, 8)
    e = evolve(s, SCH, pot, cfg).final
    assert np.linalg.norm(d.coeffs - e.coeffs) <= 1e-8
    assert last < 1e-8


def test_monodromy():
    X0 = dense_monodromy(SCH, pm.make_zero(2), 1.0, 3, (0.0, 0.7))
    free = np.diag(np.exp(-1j * np.arange(-3, 4) ** 2 * 0.7))
    assert np.allclose(X0.entries, free, atol=1e-14)
    assert np.allclose(dense_monodromy(SCH, pm.make_zero(2), 0.0, 3, (0.0, 0.7)).entries, np.eye(7))
    pot = _random_pot(seed=9)
    assert dense_monodromy(SCH, pot, 1.4, 4, (0.0, 1.0)).unitarity_defect() <= 1e-8
    X = dense_monodromy(SCH, pot, 1.0, 2, (0.0, 0.1))
    for j in range(5):
        col, _ = duhamel_series(FourierState.basis(j - 2, 2), SCH, pot, EvolveConfig(k=1.0, t1=0.1), 10)
        assert np.linalg.norm(X.entries[:, j] - col.coeffs) <= 1e-8
    s = _random_state(2, 7)
    assert np.linalg.norm((X @ s).coeffs - X.entries @ s.coeffs) == 0


def test_monodromy_limit():
    with pytest.raises(ValueError):
        dense_monodromy(SCH, pm.make_zero(1), 1.0, 65, (0.0, 1.0))


def test_truncation_scan():
    z = truncation_scan(SCH, pm.make_zero(2), 1.0, EvolveConfig(k=1.0, t1=1.0), [2, 4])
    assert all(r["deviation"] == 0 for r in z)
    tiny = truncation_scan(SCH, _random_pot(L=2), 1.0, EvolveConfig(k=1.0, t1=1e-3, tol=1e-13), [2, 8, 16])
    assert tiny[-1]["deviation"] <= 1e-14
    pot = _random_pot(seed=5, L=3, t_max=2.0)
    rows = truncation_scan(SCH, pot, 0.3, EvolveConfig(k=0.3, t1=2.0, tol=1e-11), [8, 16, 32])
    devs = [r["deviation"] for r in rows]
    assert devs[0] > devs[1] > devs[2] or devs[1] <= 1e-12


def test_step_budget_exhaustion():
    with pytest.raises(IntegrationError):
        evolve(_random_state(4), SCH, _random_pot(), EvolveConfig(k=1.0, t1=1.0, tol=1e-12, max_steps=3))


def test_gaps_symbol_unitary():
    pot = _random_pot(seed=2, t_max=12.0)
    tr = evolve(FourierState.constant(16), SymbolSpec.gaps(), pot,
                EvolveConfig(k=1.0, t1=12.0, tol=1e-10, observer_times=(3.0, 7.0, 12.0)))
    assert max(abs(s.norm() - 1.0) for s in tr.states) <= 1e-8
