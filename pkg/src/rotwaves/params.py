"""Physical parameters and the vorticity function gamma(p) on [p0, 0].

The vorticity is either piecewise constant between breakpoints or given by
samples on a grid (linearly interpolated).  Its antiderivative

    Gamma(p) = int_0^p gamma(s) ds

is evaluated exactly for both kinds: piecewise affine for piecewise-constant
data, piecewise quadratic for sampled data (which agrees with the composite
trapezoid rule at the sample nodes).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

__all__ = [
    "PhysicalParams",
    "VorticityKind",
    "VorticitySpec",
    "gamma_eval",
    "gamma_antiderivative",
    "gamma_max",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Gravity ``g``, surface tension ``sigma``, relative mass flux ``p0`` and
    atmospheric pressure ``P0`` (only used when reconstructing pressure)."""

    g: float
    sigma: float
    p0: float
    P0: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"surface tension must be positive, got {self.sigma}")
        if not self.p0 < 0:
            raise ValueError(f"mass flux p0 must be negative, got {self.p0}")
        if not self.g >= 0:
            raise ValueError(f"gravity must be non-negative, got {self.g}")


class VorticityKind(str, Enum):
    PIECEWISE_CONSTANT = "PiecewiseConstant"
    SAMPLED = "Sampled"


@dataclass(frozen=True, eq=False)
class VorticitySpec:
    kind: VorticityKind
    breakpoints: np.ndarray
    values: np.ndarray
    bound: float = field(init=False)
    _gamma_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kind = VorticityKind(self.kind)
        b = np.array(self.breakpoints, dtype=float)
        v = np.array(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(b) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if b[-1] != 0.0:
            raise ValueError("last breakpoint must be 0")
        if b[0] >= 0:
            raise ValueError("first breakpoint must be p0 < 0")
        expected = b.size - 1 if kind is VorticityKind.PIECEWISE_CONSTANT else b.size
        if v.shape != (expected,):
            raise ValueError(f"{kind.value} vorticity needs {expected} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vorticity values must be finite")
        b.flags.writeable = False
        v.flags.writeable = False

        widths = np.diff(b)
        if kind is VorticityKind.PIECEWISE_CONSTANT:
            increments = v * widths
        else:
            increments = 0.5 * (v[:-1] + v[1:]) * widths
        # Gamma at breakpoints, integrated from p = 0 downwards
        nodes = -np.concatenate([np.cumsum(increments[::-1])[::-1], [0.0]])
        nodes.flags.writeable = False

        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "bound", float(np.max(np.abs(v))))
        object.__setattr__(self, "_gamma_nodes", nodes)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, p0, value=0.0):
        return cls(VorticityKind.PIECEWISE_CONSTANT, [p0, 0.0], [value])

    @classmethod
    def piecewise(cls, breakpoints, values):
        return cls(VorticityKind.PIECEWISE_CONSTANT, breakpoints, values)

    @classmethod
    def sampled(cls, nodes, values):
        return cls(VorticityKind.SAMPLED, nodes, values)

    @classmethod
    def from_function(cls, func, p0, n=1001):
        nodes = np.linspace(p0, 0.0, n)
        return cls.sampled(nodes, func(nodes))

    # -- geometry -----------------------------------------------------------
    @property
    def p0(self):
        return float(self.breakpoints[0])

    @property
    def layers(self):
        """Points between which the flow is smooth in p.

        Sampled vorticity is continuous, so the whole strip is one layer.
        """
        if self.kind is VorticityKind.SAMPLED:
            return np.array([self.p0, 0.0])
        return self.breakpoints

    def to_dict(self):
        return {
            "type": self.kind.value,
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }

    def _locate(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p < self.p0) or np.any(p > 0.0) or np.any(np.isnan(p)):
            raise DomainError(f"p outside [{self.p0}, 0]")
        # right-continuous: a breakpoint belongs to the interval on its right
        idx = np.searchsorted(self.breakpoints, p, side="right") - 1
        return p, np.clip(idx, 0, self.breakpoints.size - 2)


def gamma_eval(spec, p):
    """Vorticity gamma(p); right-continuous at interior breakpoints."""
    p, i = spec._locate(p)
    if spec.kind is VorticityKind.PIECEWISE_CONSTANT:
        out = spec.values[i]
    else:
        b = spec.breakpoints
        t = (p - b[i]) / (b[i + 1] - b[i])
        out = (1.0 - t) * spec.values[i] + t * spec.values[i + 1]
    return out if np.ndim(out) else float(out)


def gamma_antiderivative(spec, p):
    """Gamma(p) = int_0^p gamma(s) ds, with Gamma(0) = 0."""
    p, i = spec._locate(p)
    b = spec.breakpoints
    x = p - b[i]
    if spec.kind is VorticityKind.PIECEWISE_CONSTANT:
        out = spec._gamma_nodes[i] + spec.values[i] * x
    else:
        slope = (spec.values[i + 1] - spec.values[i]) / (b[i + 1] - b[i])
        out = spec._gamma_nodes[i] + spec.values[i] * x + 0.5 * slope * x * x
    return out if np.ndim(out) else float(out)


def gamma_max(spec):
    """Maximum of Gamma over [p0, 0].

    Piecewise-constant data give a piecewise affine Gamma, so the maximum is
    at a breakpoint.  For sampled data the interior stationary points
    (zeros of the interpolated gamma) are checked as well.
    """
    candidates = [spec._gamma_nodes]
    if spec.kind is VorticityKind.SAMPLED:
        v = spec.values
        b = spec.breakpoints
        crossing = np.flatnonzero(v[:-1] * v[1:] < 0)
        if crossing.size:
            t = v[crossing] / (v[crossing] - v[crossing + 1])
            roots = b[crossing] + t * (b[crossing + 1] - b[crossing])
            candidates.append(np.atleast_1d(gamma_antiderivative(spec, roots)))
    return float(max(np.max(c) for c in candidates))
