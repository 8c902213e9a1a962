"""Laminar (flat-surface, parallel-streamline) solutions H(p; lambda) and the head Q(lambda)."""

from dataclasses import dataclass
from functools import partial

import numpy as np

from . import quadrature
from .errors import ParameterRangeError
from .params import gamma_antiderivative, gamma_max

__all__ = [
    "LaminarFlow",
    "check_lambda",
    "speed_profile",
    "laminar_height",
    "head",
    "laminar_flow",
]


def _guard(lam):
    return 1e-10 * max(1.0, abs(lam))


def check_lambda(spec, lam, guard=None):
    """Raise unless ``lam`` exceeds ``2 max Gamma`` by at least ``guard``."""
    floor = 2.0 * gamma_max(spec)
    guard = _guard(lam) if guard is None else guard
    if not lam > floor + guard:
        raise ParameterRangeError(
            f"lambda={lam!r} must exceed 2*max(Gamma)={floor!r} (guard {guard:.1e}); "
            "the laminar family is undefined there"
        )


def _check_flux(params, spec):
    if not np.isclose(params.p0, spec.p0, rtol=0, atol=1e-14 * abs(params.p0)):
        raise ValueError(f"params.p0={params.p0} disagrees with vorticity p0={spec.p0}")


def speed_profile(spec, lam, p):
    """a(p) = sqrt(lambda - 2 Gamma(p)), the relative speed c - u of the laminar flow."""
    return np.sqrt(lam - 2.0 * gamma_antiderivative(spec, p))


def _inverse_speed(spec, lam, p):
    return 1.0 / np.sqrt(lam - 2.0 * gamma_antiderivative(spec, p))


def laminar_height(params, spec, lam, p):
    """H(p; lambda) = int_{p0}^p (lambda - 2 Gamma)^(-1/2), split at breakpoints."""
    _check_flux(params, spec)
    check_lambda(spec, lam)
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    gamma_antiderivative(spec, p)  # domain check
    out = quadrature.cumulative(partial(_inverse_speed, spec, lam), spec.breakpoints, p)
    out[p == spec.p0] = 0.0
    return float(out[0]) if scalar else out


def head(params, spec, lam):
    """Q(lambda) = lambda + 2 g H(0; lambda)."""
    return lam + 2.0 * params.g * laminar_height(params, spec, lam, 0.0)


@dataclass(frozen=True)
class LaminarFlow:
    lam: float
    depth: float
    Q: float
    params: object
    spec: object

    def a(self, p):
        return speed_profile(self.spec, self.lam, p)

    def H(self, p):
        return laminar_height(self.params, self.spec, self.lam, p)

    def Hp(self, p):
        return 1.0 / self.a(p)


def laminar_flow(params, spec, lam):
    depth = laminar_height(params, spec, lam, 0.0)
    return LaminarFlow(lam=float(lam), depth=depth, Q=lam + 2.0 * params.g * depth, params=params, spec=spec)
