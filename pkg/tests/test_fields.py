import numpy as np
import pytest

from rotwaves.dispersion import bifurcation_lambda
from rotwaves.fields import (analyticity_diagnostic, count_extrema, euler_residual, evenness_defect, streamline,
                             surface_profile, velocity_pressure)
from rotwaves.grid import TensorGrid, discretization
from rotwaves.laminar import speed_profile
from rotwaves.operators import WaveState, laminar_state
from rotwaves.solver import SolverConfig, continue_branch

GRID = TensorGrid(nq=64, n_p=41)


@pytest.fixture(scope="module")
def branch_state():
    from rotwaves.params import PhysicalParams, VorticitySpec

    P = PhysicalParams(g=9.81, sigma=0.074, p0=-1.0)
    spec = VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0])
    bp = bifurcation_lambda(P, spec, 1, n=1)
    branch = continue_branch(bp, P, spec, SolverConfig(ds_init=1e-3, max_steps=6), GRID)
    return P, spec, branch.points[-1].state


def test_laminar_velocity_and_pressure(gravity_params, two_layer):
    state = laminar_state(gravity_params, two_layer, 3.0, GRID)
    disc = discretization(GRID, two_layer, 1)
    flow = velocity_pressure(state, gravity_params, two_layer)
    np.testing.assert_allclose(flow.u_rel, -speed_profile(two_layer, 3.0, disc.nodes)[:, None] * np.ones(64),
                               rtol=1e-14)
    assert np.all(flow.v == 0)
    assert flow.bernoulli_spread == 0.0
    np.testing.assert_allclose(flow.P[-1], gravity_params.P0)
    np.testing.assert_allclose(flow.psi[:, 0], -disc.nodes)


def test_laminar_surface_flat(gravity_params, two_layer):
    surf = surface_profile(laminar_state(gravity_params, two_layer, 3.0, GRID), gravity_params, two_layer)
    assert surf.height == 0.0
    assert surf.depth > 0


def test_streamlines(gravity_params, two_layer):
    state = laminar_state(gravity_params, two_layer, 3.0, GRID)
    d = surface_profile(state, gravity_params, two_layer).depth
    top, interp = streamline(state, gravity_params, two_layer, 0.0)
    assert not interp
    np.testing.assert_allclose(top, 0.0, atol=1e-14)
    bed, interp = streamline(state, gravity_params, two_layer, -1.0)
    assert not interp
    np.testing.assert_allclose(bed, -d)
    mid, interp = streamline(state, gravity_params, two_layer, -0.4321)
    assert interp
    assert -d < mid[0] < 0
    with pytest.raises(ValueError):
        streamline(state, gravity_params, two_layer, 0.5)


def test_extrema_count_by_wavenumber(gravity_params, two_layer):
    for kn in (1, 2, 3):
        grid = TensorGrid(nq=64, n_p=21)
        base = laminar_state(gravity_params, two_layer, 3.0, grid, k=kn)
        coeffs = base.coeffs.copy()
        coeffs[1:, 1] = 1e-3
        coeffs[1:, 2] = 2e-4
        state = WaveState(lam=3.0, coeffs=coeffs, k=kn, n=1, Q=base.Q, grid=grid)
        assert count_extrema(state) == 2 * kn
        assert evenness_defect(state) <= 1e-15


def test_branch_state_diagnostics(branch_state):
    P, spec, state = branch_state
    assert count_extrema(state) == 2
    assert evenness_defect(state) <= 1e-14
    surf = surface_profile(state, P, spec)
    # crest at q = 0 or pi depending on the sign convention of the amplitude
    assert min(abs(surf.crest), abs(surf.crest - np.pi), abs(surf.crest - 2 * np.pi)) < 0.1
    assert velocity_pressure(state, P, spec).bernoulli_spread <= 1e-8
    assert euler_residual(state, P, spec) <= 1e-6


def test_euler_residual_detects_non_solutions(branch_state):
    P, spec, state = branch_state
    coeffs = state.coeffs.copy()
    coeffs[1:, 2] += 1e-3 * np.sin(np.pi * (discretization(GRID, spec, 1).nodes[1:] + 1))
    bad = WaveState(lam=state.lam, coeffs=coeffs, k=1, n=1, Q=state.Q, grid=GRID)
    assert euler_residual(bad, P, spec) > 1e3 * euler_residual(state, P, spec)


def test_analyticity_laminar_saturated(gravity_params, two_layer):
    fits = analyticity_diagnostic(laminar_state(gravity_params, two_layer, 3.0, GRID), two_layer)
    assert len(fits) == 40
    assert all(f.saturated for f in fits)


def test_analyticity_small_amplitude(branch_state):
    P, spec, state = branch_state
    fits = [f for f in analyticity_diagnostic(state, spec) if not f.saturated]
    assert len(fits) >= 30
    assert min(f.r2 for f in fits) >= 0.99
    assert all(f.rate > 0 for f in fits)
