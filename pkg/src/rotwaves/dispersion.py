"""Sturm-Liouville problems behind the linearised water-wave operator.

For (lambda, mu) the two solutions of ``(a^3 v')' = mu a v`` with

    v1(p0) = 0,  v1'(p0) = 1            and
    v2(0) = lambda^(3/2),  v2'(0) = g + sigma mu

are integrated as first-order systems in ``(v, w = a^3 v')``.  ``w`` stays
continuous across vorticity jumps, so a fixed-step RK4 on a
breakpoint-aligned grid keeps its order piece by piece.  Zeros of the surface
Wronskian ``W(0; lambda, mu)`` give the neutral modes; from them we get
lambda_0, mu(lambda), the period divisor n and the bifurcation points
lambda_k.
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import quadrature
from .errors import IntegrationError, NotApplicableError, RootBracketError
from .laminar import check_lambda, laminar_height, speed_profile
from .params import gamma_max

__all__ = [
    "SturmSolution",
    "KernelMode",
    "BifurcationPoint",
    "solve_v1",
    "solve_v2",
    "solve_pair",
    "wronskian_at_surface",
    "dispersion_function",
    "lambda0",
    "d2_integral",
    "check_d2",
    "mu_of_lambda",
    "period_divisor_n",
    "bifurcation_lambda",
    "transversality_integral",
]

DEFAULT_STEPS = 2000
MAX_STEPS = 400_000
MU_LO = 1e-12
MU_HI = 2.0**60


@dataclass(frozen=True, eq=False)
class SturmSolution:
    lam: float
    mu: float
    grid_p: np.ndarray
    v1: np.ndarray = None
    v1p: np.ndarray = None
    v2: np.ndarray = None
    v2p: np.ndarray = None
    W0: float = None

    def flux_wronskian(self):
        """a^3 (v1 v2' - v2 v1') on the grid; constant for exact solutions."""
        a3 = self.a3
        return a3 * (self.v1 * self.v2p - self.v2 * self.v1p)

    @property
    def a3(self):
        return self._a3

    def v1_interpolant(self):
        return _hermite(self.grid_p, self.v1, self.v1p)


def _hermite(x, y, dy):
    # nodes repeat nothing, so one spline across breakpoints is fine: v and v' are continuous
    return CubicHermiteSpline(x, y, dy)


# ---------------------------------------------------------------------------
# integration machinery
# ---------------------------------------------------------------------------

def _step_count(params, spec, lam, mu, steps):
    if steps is not None:
        return int(steps)
    depth = laminar_height(params, spec, lam, 0.0)
    scale = max(1.0, math.sqrt(max(mu, 0.0)) * depth / 2.0)
    return int(min(MAX_STEPS, math.ceil(DEFAULT_STEPS * scale)))


def step_grid(spec, steps):
    """Breakpoint-aligned nodes from p0 to 0, about ``steps`` intervals in total.

    Intervals are shared among the pieces in proportion to their width, with
    an even count of at least two on each piece.
    """
    b = spec.breakpoints
    width = np.diff(b)
    per_piece = np.maximum(2, np.ceil(steps * width / abs(spec.p0)).astype(int))
    per_piece += per_piece % 2
    nodes = [np.linspace(b[i], b[i + 1], per_piece[i] + 1)[:-1] for i in range(width.size)]
    nodes.append([0.0])
    return np.concatenate(nodes)


def _transfer_matrices(spec, lam, mu, nodes):
    """RK4 step matrices for y' = A(p) y, A = [[0, a^-3], [mu a, 0]]."""
    h = np.diff(nodes)
    mids = nodes[:-1] + 0.5 * h
    a_all = speed_profile(spec, lam, np.concatenate([nodes, mids]))
    a_nodes, a_mid = a_all[: nodes.size], a_all[nodes.size:]

    def system(a):
        A = np.zeros((a.size, 2, 2))
        A[:, 0, 1] = a**-3
        A[:, 1, 0] = mu * a
        return A

    A1, A2, A3 = system(a_nodes[:-1]), system(a_mid), system(a_nodes[1:])
    eye = np.eye(2)
    hh = h[:, None, None]
    K1 = A1
    K2 = A2 @ (eye + 0.5 * hh * K1)
    K3 = A2 @ (eye + 0.5 * hh * K2)
    K4 = A3 @ (eye + hh * K3)
    return eye + hh / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4), a_nodes


def _propagate(mats, v, w):
    """Apply step matrices in order; rescale to dodge overflow, tracking log scale."""
    vs = [v]
    ws = [w]
    logs = [0.0]
    log = 0.0
    for m00, m01, m10, m11 in mats.reshape(-1, 4).tolist():
        v, w = m00 * v + m01 * w, m10 * v + m11 * w
        size = abs(v) + abs(w)
        if size > 1e150:
            v /= size
            w /= size
            log += math.log(size)
        elif not size < math.inf:
            raise IntegrationError("non-finite state in Sturm-Liouville integration")
        vs.append(v)
        ws.append(w)
        logs.append(log)
    return np.array(vs), np.array(ws), np.array(logs)


def _forward(params, spec, lam, mu, steps):
    check_lambda(spec, lam)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    nodes = step_grid(spec, _step_count(params, spec, lam, mu, steps))
    mats, a = _transfer_matrices(spec, lam, mu, nodes)
    v, w, logs = _propagate(mats, 0.0, a[0] ** 3)
    return nodes, a, v, w, logs


def _backward(params, spec, lam, mu, steps):
    check_lambda(spec, lam)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    nodes = step_grid(spec, _step_count(params, spec, lam, mu, steps))
    back = nodes[::-1]
    mats, a = _transfer_matrices(spec, lam, mu, back)
    v, w, logs = _propagate(mats, lam**1.5, a[0] ** 3 * (params.g + params.sigma * mu))
    return nodes, a[::-1], v[::-1], w[::-1], logs[::-1]


def _unscale(x, logs):
    with np.errstate(over="ignore"):
        return x * np.exp(logs)


def _surface_w(params, lam, mu, v1_0, v1p_0):
    return lam**1.5 * v1p_0 - (params.g + params.sigma * mu) * v1_0


def _make(lam, mu, nodes, a, **fields):
    sol = SturmSolution(lam=float(lam), mu=float(mu), grid_p=nodes, **fields)
    object.__setattr__(sol, "_a3", a**3)
    return sol


def solve_v1(params, spec, lam, mu, steps=None):
    """v1 with v1(p0) = 0, v1'(p0) = 1, and the surface Wronskian W(0)."""
    nodes, a, v, w, logs = _forward(params, spec, lam, mu, steps)
    v1 = _unscale(v, logs)
    v1p = _unscale(w, logs) / a**3
    v1[0], v1p[0] = 0.0, 1.0
    return _make(lam, mu, nodes, a, v1=v1, v1p=v1p, W0=_surface_w(params, lam, mu, v1[-1], v1p[-1]))


def solve_v2(params, spec, lam, mu, steps=None):
    """v2 with v2(0) = lambda^(3/2), v2'(0) = g + sigma mu (integrated towards p0)."""
    nodes, a, v, w, logs = _backward(params, spec, lam, mu, steps)
    v2 = _unscale(v, logs)
    v2p = _unscale(w, logs) / a**3
    v2[-1], v2p[-1] = lam**1.5, params.g + params.sigma * mu
    return _make(lam, mu, nodes, a, v2=v2, v2p=v2p)


def solve_pair(params, spec, lam, mu, steps=None):
    """Both solutions on one grid."""
    s1 = solve_v1(params, spec, lam, mu, steps)
    s2 = solve_v2(params, spec, lam, mu, steps)
    return _make(lam, mu, s1.grid_p, s1.a3 ** (1 / 3), v1=s1.v1, v1p=s1.v1p,
                 v2=s2.v2, v2p=s2.v2p, W0=s1.W0)


def wronskian_at_surface(params, spec, lam, mu, steps=None):
    """W(0; lambda, mu) = lambda^(3/2) v1'(0) - (g + sigma mu) v1(0)."""
    _, a, v, w, logs = _forward(params, spec, lam, mu, steps)
    value = _surface_w(params, lam, mu, v[-1], w[-1] / a[-1] ** 3)
    with np.errstate(over="ignore"):
        return float(value * math.exp(logs[-1])) if logs[-1] < 700 else math.copysign(math.inf, value)


def dispersion_function(params, spec, lam, mu, steps=None):
    """Scale-free surrogate lambda^(3/2) v1'(0)/v1(0) - (g + sigma mu).

    v1(0) > 0 for mu >= 0, so this has the sign and the zeros of W(0; lambda, mu)
    but does not overflow for large mu.
    """
    _, a, v, w, _ = _forward(params, spec, lam, mu, steps)
    return lam**1.5 * (w[-1] / a[-1] ** 3) / v[-1] - (params.g + params.sigma * mu)


# ---------------------------------------------------------------------------
# lambda_0, condition (d2), mu(lambda), n
# ---------------------------------------------------------------------------

def _inverse_cube_speed(spec, lam, p):
    return speed_profile(spec, lam, p) ** -3


def inverse_cube_integral(spec, lam):
    """int_{p0}^0 a^-3 dp."""
    check_lambda(spec, lam)
    return float(quadrature.cumulative(partial(_inverse_cube_speed, spec, lam), spec.breakpoints, [0.0])[0])


def _lambda_floor(spec):
    return 2.0 * gamma_max(spec)


def _approach_floor(spec, f, hi, sign):
    """Walk from ``hi`` towards 2 max Gamma until f changes to ``sign``; return the point."""
    floor = _lambda_floor(spec)
    gap = hi - floor
    for _ in range(200):
        gap *= 0.5
        lam = floor + gap
        if gap <= 1e-10 * max(1.0, abs(floor)) * 2:
            break
        if np.sign(f(lam)) == sign:
            return lam
    raise RootBracketError("no sign change found above 2*max(Gamma)")


def _grow(f, lo, sign, factor=2.0, limit=200):
    hi = max(lo * factor, lo + 1.0)
    for _ in range(limit):
        if np.sign(f(hi)) == sign:
            return hi
        hi = hi * factor
    raise RootBracketError("no sign change found for large lambda")


def lambda0(params, spec):
    """Unique root of 1/g = int_{p0}^0 (lambda - 2 Gamma)^(-3/2) dp."""
    if params.g == 0:
        raise NotApplicableError("lambda_0 requires g > 0 (pure capillary regime)")

    def f(lam):
        return 1.0 / params.g - inverse_cube_integral(spec, lam)

    floor = _lambda_floor(spec)
    start = floor + max(1.0, abs(floor))
    hi = start if f(start) > 0 else _grow(f, start, 1.0)
    lo = _approach_floor(spec, f, hi, -1.0)
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def d2_integral(params, spec, lam=None):
    """int_{p0}^0 a (int_{p0}^p a^-3)^2 dp at lambda (default lambda_0)."""
    lam = lambda0(params, spec) if lam is None else lam
    inner = partial(_inverse_cube_speed, spec, lam)

    def outer(p):
        return speed_profile(spec, lam, p) * quadrature.cumulative(inner, spec.breakpoints, p) ** 2

    b = spec.breakpoints
    return float(np.sum(quadrature.integrate(outer, b[:-1], b[1:], rtol=1e-13)))


def check_d2(params, spec):
    """True when mu(lambda_0) = 0, which makes n = 1."""
    return d2_integral(params, spec) < params.sigma / params.g**2


def mu_of_lambda(params, spec, lam, steps=None, mu_lo=MU_LO):
    """The positive root mu(lambda) of W(0; lambda, .) by doubling bracket + Brent."""
    f = partial(_mu_function, params, spec, lam, steps)
    lo = mu_lo
    if not f(lo) > 0:
        raise RootBracketError(f"W(0; {lam}, .) is not positive near mu=0; is lambda <= lambda_0?")
    hi = 2.0 * lo
    while f(hi) > 0:
        lo = hi
        hi *= 2.0
        if hi > MU_HI:
            raise RootBracketError(f"no sign change of W(0; {lam}, .) below mu=2^60")
    return brentq(f, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


def _mu_function(params, spec, lam, steps, mu):
    return dispersion_function(params, spec, lam, mu, steps)


def mu_at_lambda0(params, spec):
    if check_d2(params, spec):
        return 0.0
    return mu_of_lambda(params, spec, lambda0(params, spec), mu_lo=1e-6)


def period_divisor_n(params, spec):
    """Smallest n >= 1 with n^2 > mu(lambda_0)."""
    if params.g == 0:
        raise NotApplicableError("n is not defined without gravity; pass n explicitly")
    mu0 = mu_at_lambda0(params, spec)
    n = int(math.floor(math.sqrt(mu0))) + 1
    while (n - 1) >= 1 and (n - 1) ** 2 > mu0:
        n -= 1
    while n * n <= mu0:
        n += 1
    return n


# ---------------------------------------------------------------------------
# bifurcation points and the kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelMode:
    """w*(q, p) = v1(p) cos(kn q), with v1 normalised by v1'(p0) = 1."""

    wavenumber: int
    sturm: SturmSolution

    @property
    def v1_profile(self):
        return self.sturm.v1

    def v1(self, p):
        return self.sturm.v1_interpolant()(p)

    def v1p(self, p):
        return self.sturm.v1_interpolant().derivative()(p)

    def w_star(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return self.v1(p)[None, :] * np.cos(self.wavenumber * q)[:, None]


@dataclass(frozen=True, eq=False)
class BifurcationPoint:
    k: int
    n: int
    lambda_k: float
    kernel: KernelMode
    below_lambda0: bool = False


def bifurcation_lambda(params, spec, k, n=None, steps=None):
    """lambda_k with mu(lambda_k) = (kn)^2.

    With ``n`` from :func:`period_divisor_n` the root lies in (lambda_0, inf).
    An explicitly smaller ``n`` may put the root of W(0; ., (kn)^2) below
    lambda_0; that root is returned with ``below_lambda0=True``.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    k = int(k)
    if n is None:
        n = period_divisor_n(params, spec)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    mu = float((k * n) ** 2)

    def f(lam):
        return dispersion_function(params, spec, lam, mu, steps)

    floor = _lambda_floor(spec)
    below = False
    if params.g > 0:
        lam0 = lambda0(params, spec)
        if f(lam0) < 0:
            lo, hi = lam0, _grow(f, lam0, 1.0)
        else:
            below = True
            hi = lam0
            try:
                lo = _approach_floor(spec, f, hi, -1.0)
            except RootBracketError as exc:
                raise RootBracketError(f"(kn)^2={mu:g} <= mu(lambda_0) and no root below lambda_0") from exc
    else:
        start = floor + max(1.0, abs(floor))
        hi = start if f(start) > 0 else _grow(f, start, 1.0)
        lo = _approach_floor(spec, f, hi, -1.0)
    lam_k = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    sturm = solve_v1(params, spec, lam_k, mu, steps)
    return BifurcationPoint(k=k, n=n, lambda_k=lam_k, kernel=KernelMode(k * n, sturm), below_lambda0=below)


def _simpson_weights(nodes, spec):
    """Composite Simpson weights on a breakpoint-aligned grid with even steps per piece."""
    w = np.zeros(nodes.size)
    b = spec.breakpoints
    idx = np.searchsorted(nodes, b)
    for i0, i1 in zip(idx[:-1], idx[1:]):
        m = i1 - i0
        h = (nodes[i1] - nodes[i0]) / m
        local = np.ones(m + 1)
        local[1:-1:2] = 4.0
        local[2:-1:2] = 2.0
        w[i0: i1 + 1] += local * h / 3.0
    return w


def transversality_integral(params, spec, bp, resolution=1, nq=None):
    """Tensor quadrature of  H_p w*_q^2 / 2 + 3 w*_p^2 / (2 H_p)  over the strip.

    The integrand is a sum of squares, so the value is positive for any
    non-trivial kernel.
    """
    kn = bp.kernel.wavenumber
    mu = float(kn**2)
    steps = max(DEFAULT_STEPS, bp.kernel.sturm.grid_p.size) * resolution
    sol = solve_v1(params, spec, bp.lambda_k, mu, steps=steps)
    p = sol.grid_p
    Hp = 1.0 / sol.a3 ** (1.0 / 3.0)
    nq = (8 * kn if nq is None else nq) * resolution
    q = 2.0 * np.pi * np.arange(nq) / nq
    cos = np.cos(kn * q)[:, None]
    sin = np.sin(kn * q)[:, None]
    wq = -kn * sol.v1[None, :] * sin
    wp = sol.v1p[None, :] * cos
    integrand = Hp * wq**2 / 2.0 + 3.0 * wp**2 / (2.0 * Hp)
    return float((2.0 * np.pi / nq) * np.sum(integrand @ _simpson_weights(p, spec)))
