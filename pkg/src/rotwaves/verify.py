"""Battery of consistency checks for a single state."""

from dataclasses import dataclass

import numpy as np

from .dispersion import bifurcation_lambda
from .errors import InvalidStateError
from .fields import analyticity_diagnostic, count_extrema, evenness_defect, velocity_pressure
from .grid import discretization
from .operators import bernoulli_recovery, evaluate_residuals, random_bumps, weak_form_check
from .solver import amplitude, kernel_coefficients

__all__ = ["Check", "min_hp", "verify_state"]


@dataclass(frozen=True)
class Check:
    name: str
    value: object
    threshold: object
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "pass": bool(self.passed), "detail": self.detail}


def min_hp(state, params, spec):
    """(min h_p, (p-node, q-index)) using the p-derivative at nodes."""
    disc = discretization(state.grid, spec, state.kn)
    hp = disc.Dnode @ state.h
    j, i = np.unravel_index(np.argmin(hp), hp.shape)
    return float(hp[j, i]), (int(j), int(i))


def verify_state(state, params, spec, tol=1e-6, residual_tol=1e-8, seed=0, n_bumps=5):
    """Run every check; never raises for a failed check, only records it."""
    checks = []
    low, where = min_hp(state, params, spec)
    checks.append(Check("pbc", low, "> 0", low > 0, f"min h_p at p-node {where[0]}, q-index {where[1]}"))
    if not low > 0:
        return checks

    laminar = float(np.max(np.abs(state.coeffs[:, 1:]), initial=0.0)) == 0.0
    try:
        interior, surface = evaluate_residuals(state, params, spec)
    except InvalidStateError as exc:
        checks.append(Check("residual", None, residual_tol, False, str(exc)))
        return checks
    scale = max(1.0, abs(state.lam))
    checks.append(Check("interior_residual", interior, residual_tol * scale, interior <= residual_tol * scale))
    checks.append(Check("boundary_residual", surface, residual_tol * scale, surface <= residual_tol * scale))

    brn = float(np.max(np.abs(bernoulli_recovery(state, params, spec))))
    checks.append(Check("bernoulli_recovery", brn, tol, brn <= tol))

    bumps = random_bumps(spec.p0, n_bumps, np.random.default_rng(seed))
    weak = np.abs(weak_form_check(state, spec, bumps)) / np.array([b.c1_norm() for b in bumps])
    checks.append(Check("weak_form", float(weak.max()), tol, bool(weak.max() <= tol), "scaled by ||phi||_C1"))

    even = evenness_defect(state)
    checks.append(Check("evenness", even, 1e-12 * max(1.0, float(np.abs(state.coeffs).max())),
                        even <= 1e-12 * max(1.0, float(np.abs(state.coeffs).max()))))

    if laminar:
        checks.append(Check("classification", "laminar (s = 0)", None, True))
    else:
        extrema = count_extrema(state)
        expected = 2 * state.kn
        checks.append(Check("crest_trough", extrema, expected, extrema == expected,
                            "sign changes of d/dq h(q, 0) over [0, 2 pi)"))
        try:
            bp = bifurcation_lambda(params, spec, state.k, n=state.n)
            disc = discretization(state.grid, spec, state.kn)
            s = amplitude(state, spec, kernel_coefficients(disc, bp), params)
            checks.append(Check("classification", s, None, True, "amplitude coordinate s"))
        except Exception as exc:  # classification is informative only
            checks.append(Check("classification", None, None, True, f"s unavailable: {exc}"))

    flow = velocity_pressure(state, params, spec)
    spread = flow.bernoulli_spread
    checks.append(Check("bernoulli_constancy", spread, tol, spread <= tol))
    checks.append(Check("bottom_kinematic", float(np.abs(flow.v[0]).max()), 0.0, float(np.abs(flow.v[0]).max()) == 0.0))

    fits = analyticity_diagnostic(state, spec)
    resolved = [f for f in fits if not f.saturated]
    if resolved:
        r2 = min(f.r2 for f in resolved)
        checks.append(Check("analyticity", r2, 0.99, r2 >= 0.99,
                            f"{len(resolved)} nodes fitted, {len(fits) - len(resolved)} saturated"))
    else:
        checks.append(Check("analyticity", "saturated", 0.99, True, "no resolved modes above rounding"))
    return checks
