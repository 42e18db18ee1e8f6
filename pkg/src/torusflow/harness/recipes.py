"""Config recipes -> potentials, symbols, initial states and observables."""

from __future__ import annotations

import numpy as np

from .. import potentials as pm
from ..spectral import FourierState, SobolevIndex, SymbolSpec, sobolev_norm, tail_mass


def build_potential(recipe, seed, t_max):
    """PotentialModel from a ``{"kind": ..., ...}`` recipe covering [0, t_max]."""
    kind = recipe.get("kind", "random_bounded")
    L = int(recipe.get("l_max", 4))
    grid = pm.default_time_grid(t_max, h0=recipe.get("h0", 0.5), ratio=recipe.get("ratio", 0.05))
    if kind == "zero":
        return pm.make_zero(L, grid)
    if kind == "random_bounded":
        return pm.make_random_bounded(seed, L, grid, recipe.get("bound", 1.0),
                                      complex_valued=recipe.get("complex", False))
    if kind == "decaying":
        return pm.make_decaying(seed, L, recipe.get("gamma", 0.96), recipe.get("C", 1.0), time_grid=grid)
    if kind == "oscillatory":
        spec = pm.OscillatoryQSpec.random(seed, L, recipe.get("gamma", 0.9), recipe.get("lam", 0.05),
                                          recipe.get("start_T", 0.0))
        return pm.make_oscillatory(spec, t_max=t_max)
    if kind == "constant_imag":
        return pm.make_constant_imag(recipe.get("c", 1.0))
    if kind == "scalar":
        # g(t) = amp cos(omega t) sampled on the grid
        amp, omega = recipe.get("amp", 1.0), recipe.get("omega", 1.0)
        return pm.make_scalar(grid, amp * np.cos(omega * grid))
    if kind == "static":
        modes = {int(l): complex(re, im) for l, re, im in recipe.get("modes", [])}
        return pm.make_static(modes, L, grid)
    if kind == "file":
        return pm.PotentialModel.load(recipe["path"])
    raise ValueError(f"unknown potential kind {kind!r}")


def build_symbol(recipe):
    kind = recipe.get("kind", "static")
    if kind == "static":
        return SymbolSpec(tuple(recipe.get("poly_coeffs", (0.0, 1.0))))
    if kind == "gaps":
        return SymbolSpec.gaps()
    if kind == "decaying_laplacian":
        return SymbolSpec.decaying_laplacian()
    raise ValueError(f"unknown symbol kind {kind!r}")


def build_initial(spec, n_max):
    """``"constant"`` or ``"mode:n"``."""
    if spec == "constant":
        return FourierState.constant(n_max)
    if spec.startswith("mode:"):
        return FourierState.basis(int(spec.split(":", 1)[1]), n_max)
    raise ValueError(f"unknown initial state {spec!r}")


OBSERVABLES = ("l2", "l2_dev", "halpha", "halpha_sq", "hdot_alpha", "hdot_alpha_sq", "hdot1_sq",
               "tail_mu1", "tail_mu2", "zero_dev")


def make_observables(names, alpha=0.5, mu1=4, mu2=8):
    """Name -> function of a lab-picture state."""
    inh = SobolevIndex(alpha)
    hom = SobolevIndex(alpha, homogeneous=True)
    one = SobolevIndex(1.0, homogeneous=True)
    table = {
        "l2": lambda s: s.norm(),
        "l2_dev": lambda s: abs(s.norm() - 1.0),
        "halpha": lambda s: sobolev_norm(s, inh),
        "halpha_sq": lambda s: sobolev_norm(s, inh) ** 2,
        "hdot_alpha": lambda s: sobolev_norm(s, hom),
        "hdot_alpha_sq": lambda s: sobolev_norm(s, hom) ** 2,
        "hdot1_sq": lambda s: sobolev_norm(s, one) ** 2,
        "tail_mu1": lambda s: tail_mass(s, min(mu1, s.n_max)),
        "tail_mu2": lambda s: tail_mass(s, min(mu2, s.n_max)),
        "zero_dev": lambda s: abs(1.0 - s.amplitude(0)),
    }
    unknown = [n for n in names if n not in table]
    if unknown:
        raise ValueError(f"unknown observables {unknown}")
    return {n: table[n] for n in names}
