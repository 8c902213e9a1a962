"""Discrete residual operators for the height-function problem.

All residuals are written relative to a laminar reference H(p; lambda): with
h = H + ht and P = H_p + ht_p the p-flux deviation is

    G = Gamma + (1 + h_q^2) / (2 P^2) - lambda / 2
      = (H_p^2 h_q^2 - ht_p (2 H_p + ht_p)) / (2 P^2 H_p^2),

which vanishes identically at the laminar state and keeps rounding
proportional to the size of the perturbation.  The surface operator is
rewritten the same way.  The code is complex-safe so that Jacobians can be
taken by complex-step differentiation.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import InvalidStateError
from .grid import TensorGrid, discretization
from .laminar import check_lambda, laminar_height
from .params import gamma_antiderivative

__all__ = [
    "WaveState",
    "Reference",
    "Bump",
    "reference",
    "laminar_state",
    "helmholtz_inverse",
    "interior_residual",
    "boundary_residual",
    "bernoulli_recovery",
    "weak_form_check",
    "random_bumps",
    "evaluate_residuals",
]


@dataclass(frozen=True, eq=False)
class WaveState:
    """A point (lambda, h) of the discrete problem.

    ``coeffs[j, i]`` is the coefficient of cos(m_i q) in h(q, p_j), with
    m_i = 0, kn, 2kn, ... up to the grid's mode cutoff.  Row 0 (p = p0) is
    identically zero.
    """

    lam: float
    coeffs: np.ndarray
    k: int
    n: int
    Q: float
    grid: TensorGrid

    @property
    def kn(self):
        return self.k * self.n

    @property
    def modes(self):
        return np.arange(0, self.grid.cutoff + 1, self.kn, dtype=float)

    @property
    def q(self):
        return 2.0 * np.pi * np.arange(self.grid.nq) / self.grid.nq

    @property
    def h(self):
        """Samples h[j, i] = h(q_i, p_j) on the tensor grid."""
        return self.coeffs @ np.cos(self.modes[:, None] * self.q[None, :])

    def with_lambda(self, lam, Q):
        return replace(self, lam=float(lam), Q=float(Q))


@dataclass(frozen=True, eq=False)
class Reference:
    """Laminar data at the nodes and flux points of one discretisation."""

    lam: float
    Q: float
    H_node: np.ndarray
    Hp_node: np.ndarray
    Hp_flux: np.ndarray
    dHp_node: np.ndarray = field(repr=False)
    dHp_flux: np.ndarray = field(repr=False)
    dQ: float = 0.0

    @property
    def Hp_top(self):
        return self.Hp_node[-1]

    def stepped(self, eps):
        """Complex-step copy: lambda -> lambda + i eps."""
        return replace(self, Hp_node=self.Hp_node + 1j * eps * self.dHp_node,
                       Hp_flux=self.Hp_flux + 1j * eps * self.dHp_flux)


def _hp(spec, lam, p):
    return 1.0 / np.sqrt(lam - 2.0 * gamma_antiderivative(spec, p))


@lru_cache(maxsize=64)
def _reference(disc, params, lam):
    spec = disc.spec
    check_lambda(spec, lam)
    Hp_node = _hp(spec, lam, disc.nodes)
    Hp_flux = _hp(spec, lam, disc.flux_points)
    H_node = laminar_height(params, spec, lam, disc.nodes)
    # dQ/dlambda = 1 + 2 g dH(0)/dlambda, dH_p/dlambda = -H_p^3 / 2
    dQ = 1.0 - params.g * float(disc.weights @ Hp_node**3)
    return Reference(lam=float(lam), Q=float(lam + 2.0 * params.g * H_node[-1]), H_node=H_node,
                     Hp_node=Hp_node, Hp_flux=Hp_flux, dHp_node=-0.5 * Hp_node**3,
                     dHp_flux=-0.5 * Hp_flux**3, dQ=dQ)


def reference(disc, params, lam):
    return _reference(disc, params, float(lam))


def laminar_state(params, spec, lam, grid, k=1, n=1):
    """The trivial solution h = H(.; lambda) with Q = Q(lambda)."""
    disc = discretization(grid, spec, k * n)
    ref = reference(disc, params, lam)
    coeffs = np.zeros((disc.nodes.size, disc.n_modes))
    coeffs[:, 0] = ref.H_node
    return WaveState(lam=float(lam), coeffs=coeffs, k=k, n=n, Q=ref.Q, grid=grid)


def helmholtz_inverse(f):
    """Solve u - u_qq = f for periodic samples ``f`` along the last axis."""
    f = np.asarray(f, dtype=float)
    nq = f.shape[-1]
    k = np.fft.rfftfreq(nq, 1.0 / nq)
    return np.fft.irfft(np.fft.rfft(f, axis=-1) / (1.0 + k**2), n=nq, axis=-1)


# -- core kernels (complex-safe, batched over leading axes) --------------------

def _flux_deviation(Hp, hq, hp):
    P = Hp + hp
    return (Hp**2 * hq**2 - hp * (2.0 * Hp + hp)) / (2.0 * P**2 * Hp**2), P


def _check_pbc(disc, P, where):
    low = np.min(P.real)
    if not low > 0:
        idx = np.unravel_index(np.argmin(P.real), P.shape)
        point = idx[-2]
        raise InvalidStateError(
            f"h_p <= 0 ({low:.3e}) at {where} point {point}, q-index {idx[-1]}",
            node=(int(idx[-1]), int(point)),
        )


def _fields(disc, ht_coeffs):
    """Perturbation samples and q-derivatives from coefficients (..., Np, M)."""
    return disc.synth(ht_coeffs, disc.cos), disc.synth(ht_coeffs, disc.dcos)


def _interior(disc, ref, ht, htq):
    hq_f = disc.apply_p(disc.Iflux, htq)
    hp_f = disc.apply_p(disc.Dflux, ht)
    G, P_f = _flux_deviation(ref.Hp_flux[:, None], hq_f, hp_f)
    _check_pbc(disc, P_f, "flux")
    div = disc.apply_p(disc.Ddiv, G)
    hp_n = disc.apply_p(disc.Dnode[1:-1], ht)
    P_n = ref.Hp_node[1:-1, None] + hp_n
    qterm = disc.dq(htq[..., 1:-1, :] / P_n) * disc.collocated[:, None]
    return qterm - div


def _surface_bracket(disc, ref, ht, htq, g, sigma, delta):
    """Return (K, ht0, hq0, P0) with K = (1 + h_q^2)/h_p^2 + 2 g h - Q at p = 0."""
    ht0 = ht[..., -1, :]
    hq0 = htq[..., -1, :]
    hp0 = np.tensordot(ht, disc.dtop, axes=([-2], [0])) if not np.iscomplexobj(ht) else (
        np.tensordot(ht.real, disc.dtop, axes=([-2], [0])) + 1j * np.tensordot(ht.imag, disc.dtop, axes=([-2], [0])))
    Hp = ref.Hp_top
    G, P0 = _flux_deviation(Hp, hq0, hp0)
    _check_pbc(disc, P0, "surface")
    K = 2.0 * G + 2.0 * g * ht0 + delta
    return K, ht0, hq0, P0


def _boundary_modes(disc, ref, ht, htq, g, sigma, delta):
    K, ht0, hq0, _ = _surface_bracket(disc, ref, ht, htq, g, sigma, delta)
    s = 1.0 + hq0**2
    B = K * s * np.sqrt(s) / (2.0 * sigma)
    return disc.to_modes(ht0) + disc.helmholtz * disc.to_modes(B - ht0)


def residual_modes(disc, ref, ht_coeffs, g, sigma, delta=0.0):
    """Stacked modal residual (..., Np-1, M): interior rows then the surface row.

    ``ht_coeffs`` holds perturbation coefficients at all Np nodes; ``delta``
    is Q(lambda) - Q.
    """
    ht, htq = _fields(disc, ht_coeffs)
    interior = disc.to_modes(_interior(disc, ref, ht, htq))
    top = _boundary_modes(disc, ref, ht, htq, g, sigma, delta)
    return np.concatenate([interior, top[..., None, :]], axis=-2)


# -- public, state-level operators ---------------------------------------------

def _setup(state, spec, params=None):
    disc = discretization(state.grid, spec, state.kn)
    if state.coeffs.shape != (disc.nodes.size, disc.n_modes):
        raise ValueError(f"coefficient shape {state.coeffs.shape} does not match grid "
                         f"({disc.nodes.size}, {disc.n_modes})")
    if params is None:
        from .params import PhysicalParams

        params = PhysicalParams(g=0.0, sigma=1.0, p0=spec.p0)
    ref = reference(disc, params, state.lam)
    ht_coeffs = state.coeffs.copy()
    ht_coeffs[:, 0] -= ref.H_node
    return disc, ref, ht_coeffs


def interior_residual(state, spec):
    """Conservative interior residual on nodes 1..Np-2, shape (Np-2, nq).

    At Chebyshev element interfaces the row holds the jump of the p-flux
    instead of a collocated divergence.
    """
    disc, ref, ht_coeffs = _setup(state, spec)
    ht, htq = _fields(disc, ht_coeffs)
    return _interior(disc, ref, ht, htq)


def boundary_residual(state, params, spec):
    """tr h + (1 - d_qq)^{-1} tr[B - h] on the q-grid."""
    disc, ref, ht_coeffs = _setup(state, spec, params)
    ht, htq = _fields(disc, ht_coeffs)
    delta = ref.Q - state.Q
    K, ht0, hq0, _ = _surface_bracket(disc, ref, ht, htq, params.g, params.sigma, delta)
    s = 1.0 + hq0**2
    B = K * s**1.5 / (2.0 * params.sigma)
    return ht0 + helmholtz_inverse(B - ht0)


def bernoulli_recovery(state, params, spec):
    """Pointwise curvature form of the surface condition on the q-grid:

    1 + h_q^2 + (2 g h - Q) h_p^2 - 2 sigma h_p^2 h_qq / (1 + h_q^2)^{3/2}.
    """
    disc, ref, ht_coeffs = _setup(state, spec, params)
    ht, htq = _fields(disc, ht_coeffs)
    delta = ref.Q - state.Q
    K, _, hq0, P0 = _surface_bracket(disc, ref, ht, htq, params.g, params.sigma, delta)
    hqq0 = disc.synth(ht_coeffs[-1], disc.ddcos)
    s = 1.0 + hq0**2
    return P0**2 * (K - 2.0 * params.sigma * hqq0 / s**1.5)


def evaluate_residuals(state, params, spec):
    """Max-norms of the modal interior and surface residuals."""
    disc, ref, ht_coeffs = _setup(state, spec, params)
    R = residual_modes(disc, ref, ht_coeffs, params.g, params.sigma, ref.Q - state.Q)
    return float(np.max(np.abs(R[:-1]), initial=0.0)), float(np.max(np.abs(R[-1])))


# -- weak form -----------------------------------------------------------------

def _bump(x):
    out = np.zeros_like(x)
    dout = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    e = np.exp(-1.0 / (1.0 - xi**2))
    out[inside] = e
    dout[inside] = e * (-2.0 * xi / (1.0 - xi**2) ** 2)
    return out, dout


@dataclass(frozen=True)
class Bump:
    """Smooth tensor bump centred at (qc, pc) with half-widths (rq, rp)."""

    qc: float
    pc: float
    rq: float
    rp: float
    amplitude: float = 1.0

    def __call__(self, q, p):
        dq = np.angle(np.exp(1j * (np.asarray(q) - self.qc)))
        bq, dbq = _bump(dq / self.rq)
        bp, dbp = _bump((np.asarray(p) - self.pc) / self.rp)
        phi = self.amplitude * bq * bp
        return phi, self.amplitude * dbq * bp / self.rq, self.amplitude * bq * dbp / self.rp

    def c1_norm(self):
        """max(sup|phi|, sup|phi_q|, sup|phi_p|)."""
        x = np.linspace(-1, 1, 20001)
        b, db = _bump(x)
        top, slope = b.max(), np.abs(db).max()
        return abs(self.amplitude) * top * max(top, slope / self.rq, slope / self.rp)


def random_bumps(p0, count, rng):
    """Bumps with support strictly inside the strip S x (p0, 0)."""
    out = []
    for _ in range(count):
        rp = rng.uniform(0.1, 0.35) * abs(p0)
        pc = rng.uniform(p0 + 1.05 * rp, -1.05 * rp)
        out.append(Bump(qc=rng.uniform(0, 2 * np.pi), pc=pc, rq=rng.uniform(0.4, 1.5), rp=rp,
                        amplitude=rng.uniform(0.5, 2.0)))
    return out


def _panels(lo, hi, breaks, width, order=20):
    """Composite Gauss-Legendre on [lo, hi], split at ``breaks``, panels <= ``width``."""
    x, w = np.polynomial.legendre.leggauss(order)
    cuts = np.unique(np.concatenate([[lo, hi], [b for b in breaks if lo < b < hi]]))
    pts, wts = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        count = max(1, int(np.ceil((b - a) / width)))
        edges = np.linspace(a, b, count + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            pts.append(0.5 * (e0 + e1) + 0.5 * (e1 - e0) * x)
            wts.append(0.5 * (e1 - e0) * w)
    return np.concatenate(pts), np.concatenate(wts)


def weak_form_check(state, spec, test_functions, panels=24):
    """Integrals of (h_q/h_p) phi_q - (Gamma + (1 + h_q^2)/(2 h_p^2)) phi_p.

    The constant lambda/2 part of the p-flux integrates to zero against
    phi_p, so the deviation G is integrated instead.  Each test function is
    integrated over its own support with composite Gauss-Legendre panels,
    split at element boundaries in p.
    """
    disc, ref, ht_coeffs = _setup(state, spec)
    edges = [e[0] for e in disc.elements]
    m = disc.modes[:, None]
    values = []
    for phi in test_functions:
        p, wp = _panels(max(phi.pc - phi.rp, disc.nodes[0]), min(phi.pc + phi.rp, 0.0), edges,
                        2.0 * phi.rp / panels)
        q, wq = _panels(phi.qc - phi.rq, phi.qc + phi.rq, [], 2.0 * phi.rq / panels)
        V, Dv = disc.interpolation_matrix(p, derivative=True)
        Hp = _hp(spec, state.lam, p)
        ht_p = (Dv @ ht_coeffs) @ np.cos(m * q)
        ht_q = (V @ ht_coeffs) @ (-m * np.sin(m * q))
        G, P = _flux_deviation(Hp[:, None], ht_q, ht_p)
        _check_pbc(disc, P, "quadrature")
        _, phi_q, phi_p = phi(q[None, :], p[:, None])
        integrand = (ht_q / P) * phi_q - G * phi_p
        values.append(float(wp @ integrand @ wq))
    return values
