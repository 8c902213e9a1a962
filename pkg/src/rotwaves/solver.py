"""Newton corrector and pseudo-arclength continuation of bifurcating branches.

Unknowns are the cosine coefficients of ht = h - H(.; lambda) at p-nodes
1..Np-1 (the bed row is eliminated) together with lambda.  The head is tied
to lambda, Q = Q(lambda).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .dispersion import transversality_integral
from .errors import CorrectorFailure, InvalidStateError, LinearSolveError, ParameterRangeError
from .grid import TensorGrid, discretization
from .operators import WaveState, reference, residual_modes

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "LinearConstraint",
    "BranchPoint",
    "Branch",
    "Termination",
    "Jacobian",
    "kernel_coefficients",
    "amplitude",
    "assemble_system",
    "jacobian",
    "newton_correct",
    "continue_branch",
]

_BATCH = 48


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 25
    ds_init: float = 1e-3
    ds_min: float = 1e-6
    ds_max: float = 1e-1
    growth: float = 2.0
    fast_iters: int = 4
    max_halvings: int = 6
    max_steps: int = 20
    jacobian: str = "complex"

    def __post_init__(self):
        for name in ("tol", "ds_init", "ds_min", "ds_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.ds_min <= self.ds_init <= self.ds_max:
            raise ValueError("need ds_min <= ds_init <= ds_max")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")
        if self.jacobian not in ("complex", "fd"):
            raise ValueError("jacobian must be 'complex' or 'fd'")


class Termination(str, Enum):
    MAX_STEPS = "MaxSteps"
    STEP_UNDERFLOW = "StepUnderflow"
    PBC_VIOLATION = "PBCViolation"


@dataclass(frozen=True)
class BranchPoint:
    s: float
    state: WaveState
    newton_iters: int
    residual_norm: float


@dataclass
class Branch:
    bp: object
    points: list = field(default_factory=list)
    termination: Termination = None

    @property
    def s(self):
        return np.array([pt.s for pt in self.points])

    @property
    def lam(self):
        return np.array([pt.state.lam for pt in self.points])


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(row_c * c) + row_lam * lam = rhs`` on (perturbation coefficients, lambda)."""

    row_c: np.ndarray
    row_lam: float
    rhs: float

    def value(self, c, lam):
        return float(np.sum(self.row_c * c) + self.row_lam * lam - self.rhs)


@dataclass(frozen=True)
class Jacobian:
    """dF/dc as a sparse matrix on flattened (node, mode) unknowns, and dF/dlambda."""

    dc: sp.csc_matrix
    dlam: np.ndarray


# -- helpers ---------------------------------------------------------------------

def _context(state, params, spec):
    disc = discretization(state.grid, spec, state.kn)
    ref = reference(disc, params, state.lam)
    ht = state.coeffs.copy()
    ht[:, 0] -= ref.H_node
    return disc, ref, ht


def _with_bed(disc, c):
    """Prepend the bed row (zero) to unknown coefficients (..., Nu, M)."""
    zero = np.zeros(c.shape[:-2] + (1, c.shape[-1]), dtype=c.dtype)
    return np.concatenate([zero, c], axis=-2)


def _scale(lam):
    return max(1.0, abs(lam))


def _make_state(disc, params, lam, c, k, n):
    ref = reference(disc, params, lam)
    coeffs = _with_bed(disc, c)
    coeffs[:, 0] += ref.H_node
    coeffs[0] = 0.0
    return WaveState(lam=float(lam), coeffs=coeffs, k=k, n=n, Q=ref.Q, grid=disc.grid)


def kernel_coefficients(disc, bp):
    """Discrete w* = v1(p) cos(kn q) as coefficients at all p-nodes."""
    w = np.zeros((disc.nodes.size, disc.n_modes))
    w[:, 1] = bp.kernel.v1(disc.nodes)
    w[0, 1] = 0.0
    return w


def _inner(disc, a, b):
    """Tensor quadrature of a*b over the strip for coefficient arrays (Np, M)."""
    norms = np.where(disc.modes == 0, 2.0 * np.pi, np.pi)
    return float(disc.weights @ ((a * b) @ norms))


def amplitude(state, spec, w_star, params=None):
    """s = <h - H, w*> / <w*, w*> with the tensor-quadrature inner product."""
    from .params import PhysicalParams

    params = params or PhysicalParams(g=0.0, sigma=1.0, p0=spec.p0)
    disc, _, ht = _context(state, params, spec)
    return _inner(disc, ht, w_star) / _inner(disc, w_star, w_star)


def assemble_system(state, params, spec):
    """Flattened residual over (interior nodes, surface) x retained modes."""
    disc, ref, ht = _context(state, params, spec)
    return residual_modes(disc, ref, ht, params.g, params.sigma, ref.Q - state.Q).ravel()


# -- Jacobian ---------------------------------------------------------------------

def _colouring(coupling):
    """Greedy column colouring: columns of one colour never share a row."""
    n = coupling.shape[1]
    colours = -np.ones(n, dtype=int)
    used_rows = []
    for col in range(n):
        rows = coupling[:, col]
        for c, mask in enumerate(used_rows):
            if not np.any(mask & rows):
                colours[col] = c
                mask |= rows
                break
        else:
            colours[col] = len(used_rows)
            used_rows.append(rows.copy())
    return colours


def _structure(disc):
    if not hasattr(disc, "_jac_structure"):
        colours = _colouring(disc.coupling)
        rows, cols = np.nonzero(disc.coupling)
        disc._jac_structure = (colours, rows, cols)
    return disc._jac_structure


def _owners(disc):
    """owner[colour, r]: the unique unknown node of that colour coupled to row r."""
    colours, rows, cols = _structure(disc)
    owner = -np.ones((colours.max() + 1, disc.coupling.shape[0]), dtype=int)
    owner[colours[cols], rows] = cols
    return owner


def _dc_columns(disc, ref, c, g, sigma, method):
    """Directional derivatives for every (colour, mode) seed, shape (seeds, Nu, M)."""
    colours, _, _ = _structure(disc)
    ncol = colours.max() + 1
    M = disc.n_modes
    seeds = [(col, m) for col in range(ncol) for m in range(M)]
    out = np.empty((len(seeds),) + c.shape)
    if method == "fd":
        base = residual_modes(disc, ref, _with_bed(disc, c), g, sigma)
        step = np.sqrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(c))
        owner = _owners(disc)
    for start in range(0, len(seeds), _BATCH):
        chunk = seeds[start: start + _BATCH]
        E = np.zeros((len(chunk),) + c.shape)
        for i, (col, m) in enumerate(chunk):
            E[i, colours == col, m] = 1.0
        if method == "complex":
            eps = 1e-30
            R = residual_modes(disc, ref, _with_bed(disc, c + 1j * eps * E), g, sigma)
            out[start: start + len(chunk)] = R.imag / eps
        else:
            R = residual_modes(disc, ref, _with_bed(disc, c + step * E), g, sigma)
            for i, (col, m) in enumerate(chunk):
                own = owner[col]
                row_step = np.where(own >= 0, step[np.maximum(own, 0), m], 1.0)
                out[start + i] = (R[i] - base) / row_step[:, None]
    return out


def _dlam_column(disc, ref, c, g, sigma, method):
    ht = _with_bed(disc, c)
    if method == "complex":
        eps = 1e-30
        R = residual_modes(disc, ref.stepped(eps), ht.astype(complex), g, sigma)
        return R.imag.ravel() / eps
    d = np.sqrt(np.finfo(float).eps) * max(1.0, ref.lam)
    hi = reference(disc, _params_of(g, sigma, disc), ref.lam + d)
    return (residual_modes(disc, hi, ht, g, sigma) - residual_modes(disc, ref, ht, g, sigma)).ravel() / d


def _params_of(g, sigma, disc):
    from .params import PhysicalParams

    return PhysicalParams(g=g, sigma=sigma, p0=disc.spec.p0)


def _jacobian(disc, ref, c, g, sigma, method="complex"):
    colours, rows, cols = _structure(disc)
    M = disc.n_modes
    D = _dc_columns(disc, ref, c, g, sigma, method)
    # D[colour*M + m, r, m'] = dF[r, m'] / dc[col, m] for the unique coupled col
    seed = colours[cols][:, None, None] * M + np.arange(M)[None, :, None]
    vals = D[seed, rows[:, None, None], np.arange(M)[None, None, :]]
    I = (rows[:, None, None] * M + np.arange(M)[None, None, :]) + 0 * seed
    J = (cols[:, None, None] * M + np.arange(M)[None, :, None]) + 0 * I
    n = c.size
    dc = sp.csc_matrix((vals.ravel(), (I.ravel(), J.ravel())), shape=(n, n))
    dc.eliminate_zeros()
    return Jacobian(dc=dc, dlam=_dlam_column(disc, ref, c, g, sigma, method))


def jacobian(state, params, spec, method="complex"):
    """Jacobian of :func:`assemble_system` with respect to the unknowns."""
    disc, ref, ht = _context(state, params, spec)
    return _jacobian(disc, ref, ht[1:], params.g, params.sigma, method)


# -- Newton ------------------------------------------------------------------------

def _residual(disc, params, lam, c):
    ref = reference(disc, params, lam)
    return residual_modes(disc, ref, _with_bed(disc, c), params.g, params.sigma)


def _solve_bordered(jac, constraint, rhs_F, rhs_N):
    n = jac.dc.shape[0]
    A = sp.bmat([[jac.dc, sp.csc_matrix(jac.dlam[:, None])],
                 [sp.csc_matrix(constraint.row_c.ravel()[None, :]), sp.csc_matrix([[constraint.row_lam]])]],
                format="csc")
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise LinearSolveError(f"singular bordered Jacobian: {exc}") from exc
    sol = lu.solve(np.concatenate([rhs_F, [rhs_N]]))
    if not np.all(np.isfinite(sol)):
        raise LinearSolveError("non-finite Newton update")
    return sol[:n], sol[n]


def _correct(disc, params, lam, c, constraint, config):
    """Chord-Newton with backtracking; returns (lam, c, iterations, residual)."""
    g, sigma = params.g, params.sigma
    try:
        R = _residual(disc, params, lam, c)
    except ParameterRangeError as exc:
        raise CorrectorFailure(str(exc)) from exc
    norm = np.max(np.abs(R))
    target = config.tol * _scale(lam)
    jac = None
    it = 0
    while True:
        cval = constraint.value(c, lam)
        if norm <= target and abs(cval) <= config.tol * max(1.0, abs(constraint.rhs)):
            return lam, c, it, float(norm)
        if it >= config.max_iter:
            raise CorrectorFailure(f"no convergence in {config.max_iter} iterations (residual {norm:.2e})")
        if jac is None:
            jac = _jacobian(disc, reference(disc, params, lam), c, g, sigma, config.jacobian)
        dc, dlam = _solve_bordered(jac, constraint, -R.ravel(), -cval)
        dc = dc.reshape(c.shape)
        it += 1
        step = 1.0
        for _ in range(8):
            try:
                lam_new, c_new = lam + step * dlam, c + step * dc
                R_new = _residual(disc, params, lam_new, c_new)
                new_norm = np.max(np.abs(R_new))
                if new_norm < norm or new_norm <= target:
                    break
            except (InvalidStateError, ParameterRangeError):
                new_norm = np.inf
            step *= 0.5
        else:
            if not np.isfinite(new_norm):
                raise InvalidStateError("Newton iterate left the admissible set (h_p <= 0)")
            raise CorrectorFailure(f"line search failed (residual {norm:.2e})")
        # refresh the chord when contraction is poor
        if new_norm > 0.25 * norm or step < 1.0:
            jac = None
        lam, c, R, norm = lam_new, c_new, R_new, new_norm


def newton_correct(guess, params, spec, constraint, config=None, w_star=None):
    """Correct ``guess`` onto the solution set intersected with ``constraint``."""
    config = config or SolverConfig()
    disc, ref, ht = _context(guess, params, spec)
    if np.any(np.abs(ht[0]) > 0):
        raise InvalidStateError("h must vanish on the bed", node=(0, 0))
    hp = disc.apply_p(disc.Dnode, guess.h[None])[0]
    if not np.min(hp) > 0:
        j, i = np.unravel_index(np.argmin(hp), hp.shape)
        raise InvalidStateError(f"guess violates h_p > 0 at p-node {j}, q-index {i}", node=(int(i), int(j)))
    lam, c, its, res = _correct(disc, params, guess.lam, ht[1:], constraint, config)
    state = _make_state(disc, params, lam, c, guess.k, guess.n)
    s = amplitude(state, spec, w_star, params) if w_star is not None else float("nan")
    return BranchPoint(s=s, state=state, newton_iters=its, residual_norm=res)


def amplitude_constraint(disc, w_star, s):
    """Linear constraint pinning the amplitude coordinate to ``s``."""
    norms = np.where(disc.modes == 0, 2.0 * np.pi, np.pi)
    row = (disc.weights[:, None] * w_star * norms[None, :])[1:] / _inner(disc, w_star, w_star)
    return LinearConstraint(row_c=row, row_lam=0.0, rhs=float(s))


# -- continuation --------------------------------------------------------------

def _metric(disc, w_star):
    """Weights making <x, y> = <c_x, c_y> / <w*, w*> + lam_x lam_y."""
    norms = np.where(disc.modes == 0, 2.0 * np.pi, np.pi)
    return (disc.weights[:, None] * norms[None, :])[1:] / _inner(disc, w_star, w_star)


def continue_branch(bp, params, spec, config=None, grid=None, callback=None):
    """Trace the branch bifurcating at ``bp`` by pseudo-arclength continuation."""
    config = config or SolverConfig()
    grid = grid or TensorGrid()
    T = transversality_integral(params, spec, bp)
    if not T > 0:
        raise ParameterRangeError(f"transversality integral {T:.3e} is not positive")
    disc = discretization(grid, spec, bp.k * bp.n)
    w_star = kernel_coefficients(disc, bp)
    W = _metric(disc, w_star)

    lam_prev, c_prev = bp.lambda_k, np.zeros_like(w_star[1:])
    origin = _make_state(disc, params, lam_prev, c_prev, bp.k, bp.n)
    branch = Branch(bp=bp, points=[BranchPoint(0.0, origin, 0, 0.0)])
    tangent_c, tangent_lam = w_star[1:], 0.0
    ds = config.ds_init

    while len(branch.points) - 1 < config.max_steps:
        halvings = 0
        while True:
            lam_pred = lam_prev + ds * tangent_lam
            c_pred = c_prev + ds * tangent_c
            row_c = W * tangent_c
            constraint = LinearConstraint(row_c=row_c, row_lam=tangent_lam,
                                          rhs=float(np.sum(row_c * c_prev) + tangent_lam * lam_prev + ds))
            try:
                lam_new, c_new, its, res = _correct(disc, params, lam_pred, c_pred, constraint, config)
                state = _make_state(disc, params, lam_new, c_new, bp.k, bp.n)
                s_new = amplitude(state, spec, w_star, params)
                if not s_new > branch.points[-1].s:
                    raise CorrectorFailure("amplitude did not increase")
                break
            except InvalidStateError as exc:
                log.info("PBC violated near s=%.4g: %s", branch.points[-1].s, exc)
                branch.termination = Termination.PBC_VIOLATION
                return branch
            except (CorrectorFailure, LinearSolveError) as exc:
                halvings += 1
                ds *= 0.5
                log.debug("corrector failed (%s); ds -> %.3g", exc, ds)
                if halvings > config.max_halvings or ds < config.ds_min:
                    branch.termination = Termination.STEP_UNDERFLOW
                    return branch
        point = BranchPoint(s=s_new, state=state, newton_iters=its, residual_norm=res)
        branch.points.append(point)
        if callback is not None:
            callback(point)
        dl, dcv = lam_new - lam_prev, c_new - c_prev
        length = np.sqrt(np.sum(W * dcv * dcv) + dl * dl)
        tangent_c, tangent_lam = dcv / length, dl / length
        lam_prev, c_prev = lam_new, c_new
        if its <= config.fast_iters and halvings == 0:
            ds = min(ds * config.growth, config.ds_max)
    branch.termination = Termination.MAX_STEPS
    return branch
