"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Oracles are independent of the library (scalar root finding for the tanh
relation, closed-form integrals for the mu = 0 solution).
"""

import time

import numpy as np
from scipy.optimize import brentq

from conftest import ACCEPTANCE_LINES
from rotwaves.dispersion import bifurcation_lambda, lambda0, solve_pair, solve_v1, transversality_integral
from rotwaves.fields import analyticity_diagnostic, count_extrema, euler_residual, evenness_defect, velocity_pressure
from rotwaves.grid import TensorGrid, discretization
from rotwaves.operators import bernoulli_recovery, laminar_state, random_bumps, reference, weak_form_check
from rotwaves.params import PhysicalParams, VorticitySpec, gamma_max
from rotwaves.solver import SolverConfig, assemble_system, continue_branch, jacobian, kernel_coefficients
from rotwaves.verify import min_hp

GRAVITY = PhysicalParams(g=9.81, sigma=0.074, p0=-1.0)
IRROT = VorticitySpec.constant(-1.0, 0.0)
TWO = VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0])

_BRANCHES = {}


def report(number, ok, summary, elapsed, budget):
    ok = ok and elapsed <= budget
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {summary} ({elapsed:.2f} s, budget {budget:g} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def admissible_lambdas(spec, rng, count):
    low = 2.0 * gamma_max(spec)
    return low + rng.uniform(0.05, 8.0, count)


def explicit_v1_mu0(spec, lam, p):
    """a(p0)^3 int_{p0}^p (lambda - 2 Gamma)^{-3/2} with Gamma piecewise affine."""
    b, vals, gam = spec.breakpoints, spec.values, spec._gamma_nodes
    out = np.zeros_like(p)
    for i, x in enumerate(p):
        for j in range(vals.size):
            lo, hi = b[j], min(b[j + 1], x)
            if hi <= lo:
                break
            c = lam - 2 * gam[j] + 2 * vals[j] * b[j]
            if vals[j] == 0:
                out[i] += (hi - lo) * c**-1.5
            else:
                out[i] += ((c - 2 * vals[j] * hi) ** -0.5 - (c - 2 * vals[j] * lo) ** -0.5) / vals[j]
    return (lam - 2 * gam[0]) ** 1.5 * out


def wronskian_spread(params, spec, rng, count=20):
    worst = 0.0
    for lam, mu in zip(admissible_lambdas(spec, rng, count), rng.uniform(0.0, 400.0, count)):
        W = solve_pair(params, spec, lam, mu).flux_wronskian()
        worst = max(worst, float(np.ptp(W) / np.abs(W).max()))
    return worst


def laminar_residual(params, spec, rng, count=10, grid=TensorGrid(nq=64, n_p=41)):
    worst = 0.0
    for lam in admissible_lambdas(spec, rng, count):
        R = assemble_system(laminar_state(params, spec, lam, grid), params, spec)
        worst = max(worst, float(np.abs(R).max() / max(1.0, lam)))
    return worst


def branch(key, params, spec, config, grid):
    if key not in _BRANCHES:
        bp = bifurcation_lambda(params, spec, 1, n=1)
        _BRANCHES[key] = (params, spec, bp, continue_branch(bp, params, spec, config, grid))
    return _BRANCHES[key]


IRROT_BRANCH = ("irrotational", GRAVITY, IRROT, SolverConfig(ds_init=1e-4, growth=1.3, max_steps=20),
                TensorGrid(nq=32, n_p=41))
TWO_BRANCH = ("two-layer", GRAVITY, TWO, SolverConfig(ds_init=1e-3, max_steps=10), TensorGrid(nq=64, n_p=41))
CAP_BRANCHES = [
    ("capillary irrotational", PhysicalParams(g=0.0, sigma=0.074, p0=-1.0), IRROT,
     SolverConfig(ds_init=1e-4, max_steps=5), TensorGrid(nq=64, n_p=41)),
    ("capillary two-layer", PhysicalParams(g=0.0, sigma=10.0, p0=-1.0), TWO,
     SolverConfig(ds_init=1e-3, max_steps=5), TensorGrid(nq=64, n_p=41)),
]


# -- criteria --------------------------------------------------------------------

def test_criterion_01_irrotational_dispersion():
    t0 = time.perf_counter()
    bp = bifurcation_lambda(GRAVITY, IRROT, 1, n=1)
    f = lambda lam: lam - (9.81 + 0.074) * np.tanh(1.0 / np.sqrt(lam))
    oracle = brentq(f, 1e-6, 100.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    err = abs(bp.lambda_k - oracle) / oracle
    report(1, err <= 1e-8, f"lambda_1 = {bp.lambda_k:.15g}, tanh root {oracle:.15g}, rel err {err:.1e}",
           time.perf_counter() - t0, 1.0)


def test_criterion_02_lambda0_closed_form():
    t0 = time.perf_counter()
    lam0 = lambda0(GRAVITY, IRROT)
    exact = 9.81 ** (2 / 3)
    err = abs(lam0 - exact) / exact
    report(2, err <= 1e-10, f"lambda_0 = {lam0:.15g}, rel err {err:.1e}", time.perf_counter() - t0, 0.1)


def test_criterion_03_wronskian_constancy():
    t0 = time.perf_counter()
    worst = wronskian_spread(GRAVITY, TWO, np.random.default_rng(3))
    report(3, worst <= 1e-8, f"max relative Wronskian deviation over 20 (lambda, mu): {worst:.1e}",
           time.perf_counter() - t0, 1.0)


def test_criterion_04_mu0_explicit():
    t0 = time.perf_counter()
    worst = 0.0
    for lam in (1.2, 2.0, 5.0):
        sol = solve_v1(GRAVITY, TWO, lam, 0.0)
        exact = explicit_v1_mu0(TWO, lam, sol.grid_p)
        worst = max(worst, float(np.abs(sol.v1 - exact).max() / np.abs(exact).max()))
    report(4, worst <= 1e-8, f"mu = 0 solution vs closed form, max rel err {worst:.1e}",
           time.perf_counter() - t0, 0.1)


def test_criterion_05_trivial_residual():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = max(laminar_residual(GRAVITY, TWO, rng), laminar_residual(GRAVITY, IRROT, rng))
    report(5, worst <= 1e-10, f"laminar residual / max(1, lambda) over 20 lambdas: {worst:.1e}",
           time.perf_counter() - t0, 1.0)


def _kernel_norm(spec, n_p, element_nodes=9):
    bp = bifurcation_lambda(GRAVITY, spec, 1, n=1)
    grid = TensorGrid(nq=64, n_p=n_p, element_nodes=element_nodes)
    disc = discretization(grid, spec, 1)
    w = kernel_coefficients(disc, bp)
    J = jacobian(laminar_state(GRAVITY, spec, bp.lambda_k, grid), GRAVITY, spec).dc
    value = float(np.abs(J @ w[1:].ravel()).max())
    floor = 64 * np.finfo(float).eps * abs(J).max() * np.abs(w).max()
    return value, floor


def test_criterion_06_kernel_consistency():
    t0 = time.perf_counter()
    at200 = {name: _kernel_norm(spec, 200)[0] for name, spec in (("irrotational", IRROT), ("two-layer", TWO))}
    ladder = [_kernel_norm(TWO, n, element_nodes=7) for n in (25, 50, 100, 200, 400)]
    decreasing = all(b[0] < a[0] or b[0] <= b[1] for a, b in zip(ladder[:-1], ladder[1:]))
    ok = max(at200.values()) <= 1e-6 and decreasing
    seq = ", ".join(f"{v:.1e}" for v, _ in ladder)
    report(6, ok, f"|J w*| at 64x200: irrotational {at200['irrotational']:.1e}, two-layer {at200['two-layer']:.1e}; "
                  f"refinement Np=25..400: {seq}", time.perf_counter() - t0, 30.0)


def test_criterion_07_branch_tangent_law():
    t0 = time.perf_counter()
    params, spec, bp, br = branch(*IRROT_BRANCH)
    elapsed = time.perf_counter() - t0
    disc = discretization(IRROT_BRANCH[4], spec, 1)
    w = kernel_coefficients(disc, bp)
    s, dev, lam = [], [], []
    for pt in br.points[1:]:
        ht = pt.state.coeffs.copy()
        ht[:, 0] -= reference(disc, params, pt.state.lam).H_node
        s.append(pt.s)
        dev.append(np.abs((ht - pt.s * w) @ disc.cos).max())
        lam.append(pt.state.lam)
    s, dev, lam = map(np.array, (s, dev, lam))
    window = (s >= 1e-4) & (s <= 1e-2)
    slope = np.polyfit(np.log(s[window]), np.log(dev[window]), 1)[0]
    small = s <= 2e-3
    lam_at_0 = np.polyval(np.polyfit(s[small] ** 2, lam[small], 2), 0.0)
    err = abs(lam_at_0 - bp.lambda_k)
    ok = slope >= 1.9 and err <= 1e-6 and len(br.points) == 21 and np.all(np.diff(br.s) > 0)
    report(7, ok, f"{window.sum()} states in [1e-4, 1e-2], log-log slope {slope:.3f}; "
                  f"lambda(0) extrapolation error {err:.1e}", elapsed, 120.0)


def _state_checks(params, spec, state, rng):
    low, _ = min_hp(state, params, spec)
    even = evenness_defect(state)
    extrema = count_extrema(state)
    brn = float(np.abs(bernoulli_recovery(state, params, spec)).max())
    weak = max(abs(v) for v in weak_form_check(state, spec, random_bumps(spec.p0, 5, rng)))
    ok = low > 0 and even <= 1e-12 and extrema == 2 * state.kn and brn <= 1e-6 and weak <= 1e-6
    return ok, (low, even, extrema, brn, weak)


def test_criterion_08_discontinuous_branch():
    t0 = time.perf_counter()
    params, spec, bp, br = branch(*TWO_BRANCH)
    rng = np.random.default_rng(8)
    results = [_state_checks(params, spec, pt.state, rng) for pt in br.points[1:]]
    vals = np.array([r[1] for r in results], dtype=float)
    ok = len(results) == 10 and all(r[0] for r in results)
    report(8, ok, f"{len(results)} states: min h_p {vals[:, 0].min():.3f}, evenness {vals[:, 1].max():.1e}, "
                  f"extrema {sorted(set(vals[:, 2].astype(int).tolist()))}, Bernoulli {vals[:, 3].max():.1e}, "
                  f"weak form {vals[:, 4].max():.1e}", time.perf_counter() - t0, 300.0)


def test_criterion_09_transversality():
    t0 = time.perf_counter()
    worst_change, lowest = 0.0, np.inf
    for spec in (IRROT, TWO):
        for k in (1, 2, 3):
            bp = bifurcation_lambda(GRAVITY, spec, k, n=1)
            T1 = transversality_integral(GRAVITY, spec, bp)
            T2 = transversality_integral(GRAVITY, spec, bp, resolution=2)
            lowest = min(lowest, T1, T2)
            worst_change = max(worst_change, abs(T1 - T2) / abs(T2))
    report(9, lowest > 0 and worst_change <= 1e-6,
           f"min T {lowest:.3e} > 0, max relative change under doubling {worst_change:.1e}",
           time.perf_counter() - t0, 10.0)


def test_criterion_10_analyticity():
    t0 = time.perf_counter()
    grid = TensorGrid(nq=128, n_p=41)
    r2, fitted, saturated, states = np.inf, 0, 0, 0
    for spec in (IRROT, TWO):
        bp = bifurcation_lambda(GRAVITY, spec, 1, n=1)
        br = continue_branch(bp, GRAVITY, spec, SolverConfig(ds_init=2e-3, max_steps=3), grid)
        for pt in br.points[1:]:
            fits = analyticity_diagnostic(pt.state, spec)
            good = [f for f in fits if not f.saturated]
            fitted += len(good)
            saturated += len(fits) - len(good)
            r2 = min(r2, min(f.r2 for f in good))
            states += 1
    report(10, r2 >= 0.99 and fitted > 0, f"{states} states at Nq=128: min R^2 {r2:.4f} over {fitted} node fits "
                                          f"({saturated} nodes at rounding level)", time.perf_counter() - t0, 30.0)


def test_criterion_11_bernoulli_constancy():
    runs = [branch(*IRROT_BRANCH), branch(*TWO_BRANCH)] + [branch(*c) for c in CAP_BRANCHES]
    t0 = time.perf_counter()
    spread, euler, count = 0.0, 0.0, 0
    for params, spec, _, br in runs:
        for pt in br.points[1:]:
            spread = max(spread, velocity_pressure(pt.state, params, spec).bernoulli_spread)
            euler = max(euler, euler_residual(pt.state, params, spec))
            count += 1
    report(11, spread <= 1e-6 and euler <= 1e-6,
           f"{count} states: max relative E spread {spread:.1e}, steady Euler residual {euler:.1e}",
           time.perf_counter() - t0, 10.0)


def test_criterion_12_pure_capillary():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    parts, ok = [], True
    for name, params, spec, config, grid in CAP_BRANCHES:
        wr = wronskian_spread(params, spec, rng)
        lr = laminar_residual(params, spec, rng)
        _, _, bp, br = branch(name, params, spec, config, grid)
        checks = [_state_checks(params, spec, pt.state, rng) for pt in br.points[1:]]
        good = len(checks) == 5 and all(c[0] for c in checks)
        ok &= wr <= 1e-8 and lr <= 1e-10 and good
        parts.append(f"{name}: Wronskian {wr:.1e}, laminar {lr:.1e}, lambda_1 {bp.lambda_k:.6g}, "
                     f"{len(checks)} states {'ok' if good else 'FAILED'}")
    report(12, ok, "; ".join(parts), time.perf_counter() - t0, 120.0)
