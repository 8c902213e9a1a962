"""Physical quantities reconstructed from a converged state, and diagnostics.

With x = q and y = h(q, p) - d, the relative velocity is u - c = -1/h_p and
v = -h_q/h_p.  The Bernoulli constant is fixed on the free surface, where the
pressure is P0 - sigma * curvature, and the pressure elsewhere follows from
E = ((u - c)^2 + v^2)/2 + g h + P + Gamma(p).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError
from .grid import discretization
from .operators import reference
from .params import gamma_antiderivative, gamma_eval

__all__ = [
    "SurfaceProfile",
    "FlowFields",
    "DecayFit",
    "surface_profile",
    "streamline",
    "velocity_pressure",
    "euler_residual",
    "analyticity_diagnostic",
    "count_extrema",
    "evenness_defect",
]


@dataclass(frozen=True)
class SurfaceProfile:
    q: np.ndarray
    eta: np.ndarray
    depth: float
    crest: float
    trough: float

    @property
    def height(self):
        return float(self.eta.max() - self.eta.min())


@dataclass(frozen=True)
class FlowFields:
    """Fields on the (p-node, q-node) grid; ``x``/``y`` give physical positions."""

    x: np.ndarray
    y: np.ndarray
    u_rel: np.ndarray
    v: np.ndarray
    P: np.ndarray
    psi: np.ndarray
    omega: np.ndarray
    E: float
    surface_E: np.ndarray

    @property
    def bernoulli_spread(self):
        """Relative spread of E evaluated along the free surface."""
        return float(np.ptp(self.surface_E) / max(abs(self.E), np.finfo(float).tiny))


def _derivatives(state, params, spec):
    """h, h_q, h_qq, h_p on the grid (perturbation form for h_p)."""
    disc = discretization(state.grid, spec, state.kn)
    ref = reference(disc, params, state.lam)
    ht = state.coeffs.copy()
    ht[:, 0] -= ref.H_node
    h = state.coeffs @ disc.cos
    hq = state.coeffs @ disc.dcos
    hqq = state.coeffs @ disc.ddcos
    hp = ref.Hp_node[:, None] + disc.Dnode @ (ht @ disc.cos)
    return disc, ref, h, hq, hqq, hp


def _fine_surface(state, nfine):
    q = 2.0 * np.pi * (np.arange(nfine) + 0.5) / nfine
    m = state.modes[:, None]
    top = state.coeffs[-1]
    return q, top @ np.cos(m * q), top @ (-m * np.sin(m * q))


def surface_profile(state, params, spec):
    """eta(q) = h(q, 0) - d with d = H(0; lambda)."""
    disc = discretization(state.grid, spec, state.kn)
    d = float(reference(disc, params, state.lam).H_node[-1])
    eta = state.coeffs[-1] @ disc.cos - d
    # crest and trough from a fine resampling of the cosine series
    qf, ef, _ = _fine_surface(state, 16 * state.grid.nq)
    return SurfaceProfile(q=disc.q, eta=eta, depth=d, crest=float(qf[np.argmax(ef)]),
                          trough=float(qf[np.argmin(ef)]))


def count_extrema(state, nfine=None):
    """Sign changes of d/dq h(q, 0) over one full period [0, 2 pi)."""
    nfine = nfine or 32 * state.grid.nq
    _, eta, eta_q = _fine_surface(state, nfine)
    scale = max(np.abs(eta_q).max(), np.finfo(float).tiny)
    signs = np.sign(np.where(np.abs(eta_q) < 1e-13 * scale, 0.0, eta_q))
    signs = signs[signs != 0]
    if signs.size == 0:
        return 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


def evenness_defect(state):
    """max |h(q) - h(-q)| over the grid; zero up to rounding for cosine states."""
    h = state.h
    mirrored = np.concatenate([h[:, :1], h[:, :0:-1]], axis=1)
    return float(np.abs(h - mirrored).max())


def streamline(state, params, spec, p):
    """y(q) = h(q, p) - d.  Returns (y, interpolated) where the flag marks off-grid p."""
    disc = discretization(state.grid, spec, state.kn)
    d = float(reference(disc, params, state.lam).H_node[-1])
    hit = np.flatnonzero(np.isclose(disc.nodes, p, rtol=0, atol=1e-14))
    if hit.size:
        row = state.coeffs[hit[0]]
        interpolated = False
    else:
        if not disc.nodes[0] <= p <= 0.0:
            raise ValueError(f"p={p} outside [{disc.nodes[0]}, 0]")
        row = disc.interpolation_matrix(p)[0] @ state.coeffs
        interpolated = True
    return row @ disc.cos - d, interpolated


def velocity_pressure(state, params, spec):
    disc, ref, h, hq, hqq, hp = _derivatives(state, params, spec)
    if not np.min(hp) > 0:
        j, i = np.unravel_index(np.argmin(hp), hp.shape)
        raise InvalidStateError(f"h_p <= 0 at p-node {j}", node=(int(i), int(j)))
    d = float(ref.H_node[-1])
    u_rel = -1.0 / hp
    v = -hq / hp
    Gam = gamma_antiderivative(spec, disc.nodes)[:, None]
    kinetic = 0.5 * (u_rel**2 + v**2)
    curvature = hqq[-1] / (1.0 + hq[-1] ** 2) ** 1.5
    surface_E = kinetic[-1] + params.g * h[-1] + params.P0 - params.sigma * curvature
    E = float(np.mean(surface_E))
    P = E - kinetic - params.g * h - Gam
    P[-1] = params.P0 - params.sigma * curvature
    psi = np.broadcast_to(-disc.nodes[:, None], h.shape).copy()
    omega = np.broadcast_to(np.asarray(gamma_eval(spec, disc.nodes))[:, None], h.shape).copy()
    x = np.broadcast_to(disc.q[None, :], h.shape).copy()
    return FlowFields(x=x, y=h - d, u_rel=u_rel, v=v, P=P, psi=psi, omega=omega, E=E, surface_E=surface_E)


def euler_residual(state, params, spec):
    """Relative residual of the steady Euler equations at element-interior nodes.

    Derivatives are mapped with f_x = f_q - f_p h_q / h_p and f_y = f_p / h_p;
    nodes on vorticity breakpoints and element boundaries are skipped since
    the velocity gradient jumps there.
    """
    disc, ref, h, hq, hqq, hp = _derivatives(state, params, spec)
    fields = velocity_pressure(state, params, spec)
    U, V, P = fields.u_rel, fields.v, fields.P
    Dp = disc.Dnode

    def dq(f):
        return disc.dq(f)

    def grad(f):
        fq, fp = dq(f), Dp @ f
        return fq - fp * hq / hp, fp / hp

    Ux, Uy = grad(U)
    Vx, Vy = grad(V)
    Px, Py = grad(P)
    rx = U * Ux + V * Uy + Px
    ry = U * Vx + V * Vy + Py + params.g
    edges = np.unique(np.concatenate([[e[0] for e in disc.elements], [0.0]]))
    keep = ~np.isin(disc.nodes, edges)
    scale = max(params.g, float(np.max(np.abs(U[keep] * Uy[keep]))), float(np.max(np.abs(Px))), 1.0)
    return float(max(np.abs(rx[keep]).max(), np.abs(ry[keep]).max()) / scale)


@dataclass(frozen=True)
class DecayFit:
    p: float
    rate: float
    r2: float
    modes_used: int
    saturated: bool


def analyticity_diagnostic(state, spec, floor=None, min_modes=3):
    """Exponential-decay fit of |h_m(p)| against m at every p-node above the bed.

    Modes are used while |h_m| exceeds ``floor`` (default 1e3 machine
    epsilon relative to the mean height at that node); the first mode below
    the floor ends the fitted range.  Nodes with fewer than ``min_modes``
    resolved modes are flagged saturated.
    """
    disc = discretization(state.grid, spec, state.kn)
    m = disc.modes[1:]
    out = []
    for j in range(1, disc.nodes.size):
        c = np.abs(state.coeffs[j, 1:])
        thresh = (floor if floor is not None else 1e3 * np.finfo(float).eps) * max(1.0, abs(state.coeffs[j, 0]))
        below = np.flatnonzero(c <= thresh)
        stop = below[0] if below.size else c.size
        if stop < min_modes:
            out.append(DecayFit(p=float(disc.nodes[j]), rate=np.inf, r2=np.nan, modes_used=int(stop), saturated=True))
            continue
        x, y = m[:stop], np.log(c[:stop])
        slope, icept = np.polyfit(x, y, 1)
        fit = slope * x + icept
        ss_tot = np.sum((y - y.mean()) ** 2)
        r2 = 1.0 - np.sum((y - fit) ** 2) / ss_tot if ss_tot > 0 else 1.0
        out.append(DecayFit(p=float(disc.nodes[j]), rate=float(-slope), r2=float(r2), modes_used=int(stop), saturated=False))
    return out
