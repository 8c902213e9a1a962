import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotwaves.errors import InvalidStateError
from rotwaves.grid import TensorGrid, discretization
from rotwaves.operators import (Bump, _interior, _panels, bernoulli_recovery, boundary_residual,
                                evaluate_residuals, helmholtz_inverse, interior_residual, laminar_state,
                                random_bumps, reference, weak_form_check)
from rotwaves.params import PhysicalParams, gamma_antiderivative, gamma_eval

EPS = 0.05


def f(p):
    return np.sin(3 * (p + 1)) * (p + 1)


def fp(p):
    return 3 * np.cos(3 * (p + 1)) * (p + 1) + np.sin(3 * (p + 1))


def fpp(p):
    return -9 * np.sin(3 * (p + 1)) * (p + 1) + 6 * np.cos(3 * (p + 1))


def exact_residual(spec, lam, p, q):
    """Continuous interior operator for h = H(p) + EPS f(p) cos q, evaluated in closed form."""
    p, q = np.meshgrid(p, q, indexing="ij")
    Hp = 1 / np.sqrt(lam - 2 * gamma_antiderivative(spec, p))
    gam = gamma_eval(spec, p)
    hq, hqq = -EPS * f(p) * np.sin(q), -EPS * f(p) * np.cos(q)
    hp = Hp + EPS * fp(p) * np.cos(q)
    hpq = -EPS * fp(p) * np.sin(q)
    hpp = gam * Hp**3 + EPS * fpp(p) * np.cos(q)
    return hqq / hp - 2 * hq * hpq / hp**2 + (1 + hq**2) * hpp / hp**3 - gam


def mms_state(params, spec, lam, grid):
    state = laminar_state(params, spec, lam, grid)
    disc = discretization(grid, spec, 1)
    coeffs = state.coeffs.copy()
    coeffs[:, 1] = EPS * f(disc.nodes)
    return state.__class__(lam=lam, coeffs=coeffs, k=1, n=1, Q=state.Q, grid=grid), disc


# -- Helmholtz inverse -----------------------------------------------------------

def test_helmholtz_constant_and_cosine():
    q = 2 * np.pi * np.arange(32) / 32
    np.testing.assert_allclose(helmholtz_inverse(np.full(32, 3.0)), 3.0, atol=1e-15)
    np.testing.assert_allclose(helmholtz_inverse(np.cos(4 * q)), np.cos(4 * q) / 17, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_helmholtz_self_adjoint_and_solves(seed):
    rng = np.random.default_rng(seed)
    nq = 48
    a, b = rng.standard_normal(nq), rng.standard_normal(nq)
    assert a @ helmholtz_inverse(b) == pytest.approx(b @ helmholtz_inverse(a), rel=1e-12, abs=1e-12)
    u = helmholtz_inverse(a)
    k = np.fft.rfftfreq(nq, 1 / nq)
    uqq = np.fft.irfft(-(k**2) * np.fft.rfft(u), n=nq)
    # the Nyquist mode is its own real cosine, so the identity holds on the full spectrum
    np.testing.assert_allclose(u - uqq, a, atol=1e-12)
    assert a @ helmholtz_inverse(a) > 0


# -- laminar consistency ---------------------------------------------------------

@pytest.mark.parametrize("scheme", ["chebyshev", "fd2"])
def test_laminar_residuals_vanish(gravity_params, two_layer, scheme):
    grid = TensorGrid(nq=32, n_p=41, scheme=scheme)
    state = laminar_state(gravity_params, two_layer, 3.0, grid)
    assert np.abs(interior_residual(state, two_layer)).max() == 0.0
    assert np.abs(boundary_residual(state, gravity_params, two_layer)).max() == 0.0
    assert np.abs(bernoulli_recovery(state, gravity_params, two_layer)).max() == 0.0
    assert evaluate_residuals(state, gravity_params, two_layer) == (0.0, 0.0)


def test_zero_gravity_laminar_head(two_layer):
    P = PhysicalParams(g=0.0, sigma=10.0, p0=-1.0)
    state = laminar_state(P, two_layer, 5.0, TensorGrid(nq=16, n_p=21))
    assert state.Q == 5.0
    assert evaluate_residuals(state, P, two_layer) == (0.0, 0.0)


# -- manufactured solutions ------------------------------------------------------

def test_chebyshev_mms(gravity_params, two_layer):
    errs = []
    for n_p in (61, 121):
        state, disc = mms_state(gravity_params, two_layer, 3.0, TensorGrid(nq=32, n_p=n_p))
        R = interior_residual(state, two_layer)
        exact = exact_residual(two_layer, 3.0, disc.nodes[1:-1], disc.q)
        errs.append(np.abs(R - exact)[disc.collocated].max())
        # interface rows hold the flux jump, which vanishes for a continuous flux
        assert np.abs(R[~disc.collocated]).max() < 1e-8
    assert errs[1] < 1e-8
    assert errs[0] / errs[1] > 2**6  # high order at fixed element degree


def test_fd2_mms_second_order(gravity_params, irrotational):
    errs = []
    for n_p in (21, 41, 81, 161):
        grid = TensorGrid(nq=32, n_p=n_p, scheme="fd2")
        state, disc = mms_state(gravity_params, irrotational, 3.0, grid)
        R = interior_residual(state, irrotational)
        errs.append(np.abs(R - exact_residual(irrotational, 3.0, disc.nodes[1:-1], disc.q)).max())
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.7), rates


# -- symmetries ------------------------------------------------------------------

def _random_perturbation(disc, rng, even):
    m = np.arange(1, 5)
    amp = 0.05 * np.outer(np.sin(disc.nodes - disc.nodes[0]), rng.standard_normal(m.size)) / m
    phase = np.zeros(m.size) if even else rng.uniform(0, 2 * np.pi, m.size)
    return np.einsum("pm,mq->pq", amp, np.cos(m[:, None] * disc.q[None, :] + phase[:, None]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 31))
def test_translation_equivariance(seed, shift):
    from rotwaves.params import VorticitySpec

    spec = VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0])
    P = PhysicalParams(g=9.81, sigma=0.074, p0=-1.0)
    disc = discretization(TensorGrid(nq=32, n_p=21), spec, 1)
    ref = reference(disc, P, 3.0)
    ht = _random_perturbation(disc, np.random.default_rng(seed), even=False)
    R = _interior(disc, ref, ht, disc.dq(ht))
    moved = np.roll(ht, shift, axis=-1)
    Rm = _interior(disc, ref, moved, disc.dq(moved))
    np.testing.assert_allclose(Rm, np.roll(R, shift, axis=-1), atol=1e-12)


def test_evenness_closure(gravity_params, two_layer, rng):
    disc = discretization(TensorGrid(nq=32, n_p=21), two_layer, 1)
    ref = reference(disc, gravity_params, 3.0)
    ht = _random_perturbation(disc, rng, even=True)
    R = _interior(disc, ref, ht, disc.dq(ht))
    mirror = (-np.arange(32)) % 32
    np.testing.assert_allclose(R[:, mirror], R, atol=1e-13)


def test_invalid_state_names_node(gravity_params, two_layer):
    grid = TensorGrid(nq=16, n_p=21)
    state = laminar_state(gravity_params, two_layer, 3.0, grid)
    coeffs = state.coeffs.copy()
    coeffs[:, 0] = coeffs[::-1, 0]
    bad = state.__class__(lam=3.0, coeffs=coeffs, k=1, n=1, Q=state.Q, grid=grid)
    with pytest.raises(InvalidStateError) as info:
        interior_residual(bad, two_layer)
    assert info.value.node is not None


# -- weak form -------------------------------------------------------------------

def test_weak_form_laminar_and_zero_test_function(gravity_params, two_layer, rng):
    state = laminar_state(gravity_params, two_layer, 3.0, TensorGrid(nq=16, n_p=21))
    assert weak_form_check(state, two_layer, random_bumps(-1.0, 4, rng)) == [0.0] * 4
    pert, _ = mms_state(gravity_params, two_layer, 3.0, TensorGrid(nq=16, n_p=21))
    assert weak_form_check(pert, two_layer, [Bump(1.0, -0.5, 0.5, 0.2, amplitude=0.0)]) == [0.0]


def test_bumps_supported_inside(rng):
    for b in random_bumps(-2.0, 50, rng):
        assert -2.0 < b.pc - b.rp and b.pc + b.rp < 0
        phi, _, _ = b(np.array([b.qc]), np.array([b.pc + b.rp]))
        assert phi[0] == 0.0


def test_weak_form_matches_integrated_residual(gravity_params, irrotational, rng):
    """For smooth h the weak form equals -int R phi (integration by parts)."""
    state, _ = mms_state(gravity_params, irrotational, 3.0, TensorGrid(nq=32, n_p=41))
    bumps = random_bumps(-1.0, 3, rng)
    weak = weak_form_check(state, irrotational, bumps)
    for b, w in zip(bumps, weak):
        p, wp = _panels(b.pc - b.rp, b.pc + b.rp, [], b.rp / 12)
        q, wq = _panels(b.qc - b.rq, b.qc + b.rq, [], b.rq / 12)
        phi, _, _ = b(q[None, :], p[:, None])
        strong = -(wp @ (exact_residual(irrotational, 3.0, p, q) * phi) @ wq)
        assert w == pytest.approx(strong, abs=1e-9 * b.c1_norm())
