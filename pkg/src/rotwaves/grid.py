"""Tensor grids: uniform cosine collocation in q, breakpoint-aligned nodes in p.

Two p-discretisations share one interface:

``chebyshev``
    Chebyshev-Lobatto spectral elements.  Vorticity breakpoints are element
    boundaries, fluxes are collocated at element nodes and flux continuity is
    imposed at element interfaces.  Spectrally accurate on each layer.
``fd2``
    Second-order finite volumes: fluxes at half-nodes, differenced at nodes,
    one-sided three-point stencils at p = 0.

Everything downstream sees only the sparse matrices assembled here.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = ["TensorGrid", "Discretization", "discretization", "chebyshev_lobatto", "clenshaw_curtis"]

SCHEMES = ("chebyshev", "fd2")


@dataclass(frozen=True)
class TensorGrid:
    """``nq`` uniform nodes on [0, 2 pi), ``n_p`` nodes on [p0, 0].

    ``mode_cutoff`` is the largest cosine wavenumber kept (default nq // 3);
    ``element_nodes`` caps the nodes per Chebyshev element.
    """

    nq: int = 64
    n_p: int = 41
    mode_cutoff: int = None
    scheme: str = "chebyshev"
    element_nodes: int = 9

    def __post_init__(self):
        if self.nq < 4 or self.nq % 2:
            raise ValueError(f"nq must be even and >= 4, got {self.nq}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.n_p < 3:
            raise ValueError("n_p must be at least 3")
        if self.element_nodes < 3:
            raise ValueError("element_nodes must be at least 3")
        if self.mode_cutoff is not None and not 0 < self.mode_cutoff < self.nq // 2:
            raise ValueError("mode_cutoff must lie in (0, nq/2)")

    @property
    def cutoff(self):
        return self.nq // 3 if self.mode_cutoff is None else self.mode_cutoff

    def refined(self, factor=2):
        cutoff = None if self.mode_cutoff is None else self.mode_cutoff * factor
        return TensorGrid(self.nq * factor, (self.n_p - 1) * factor + 1, cutoff, self.scheme, self.element_nodes)

    def to_dict(self):
        return {"nq": self.nq, "n_p": self.n_p, "mode_cutoff": self.mode_cutoff,
                "scheme": self.scheme, "element_nodes": self.element_nodes}


def chebyshev_lobatto(a, b, degree):
    """Chebyshev-Lobatto nodes on [a, b] in increasing order."""
    t = np.cos(np.pi * np.arange(degree + 1) / degree)[::-1]
    x = 0.5 * (a + b) + 0.5 * (b - a) * t
    x[0], x[-1] = a, b
    return x


def _cheb_diff(x):
    """Barycentric differentiation matrix for Chebyshev-Lobatto nodes ``x``."""
    n = x.size - 1
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def clenshaw_curtis(a, b, degree):
    """Clenshaw-Curtis weights matching :func:`chebyshev_lobatto` nodes."""
    n = degree
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    inner = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(n * theta[inner]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / n
    return w * 0.5 * (b - a)


def _split(total, lengths, minimum):
    """Distribute ``total`` intervals over pieces proportionally to ``lengths``."""
    lengths = np.asarray(lengths, dtype=float)
    share = np.maximum(minimum, np.floor(total * lengths / lengths.sum()).astype(int))
    while share.sum() < total:
        deficit = total * lengths / lengths.sum() - share
        share[np.argmax(deficit)] += 1
    while share.sum() > total and np.any(share > minimum):
        surplus = share - total * lengths / lengths.sum()
        surplus[share <= minimum] = -np.inf
        share[np.argmax(surplus)] -= 1
    return share


class Discretization:
    """q-collocation data plus sparse p-operators for one (grid, vorticity, kn).

    Attributes used by the operators (``Np`` nodes, ``Nf`` flux points,
    ``Nu = Np - 1`` unknown nodes):

    nodes, flux_points
    Dflux, Iflux : (Nf, Np)   derivative / value at flux points
    Ddiv         : (Np-2, Nf) divergence rows for nodes 1..Np-2
    collocated   : (Np-2,)    rows where the q-flux term applies
    Dnode        : (Np, Np)   derivative at nodes
    dtop         : (Np,)      derivative at p = 0
    weights      : (Np,)      quadrature in p
    coupling     : (Nu, Nu)   equation node vs unknown node dependence
    """

    def __init__(self, grid, spec, kn):
        self.grid = grid
        self.spec = spec
        self.kn = int(kn)
        if grid.nq < 4 * self.kn:
            raise ValueError(f"nq={grid.nq} too small for wavenumber {self.kn} (need nq >= 4 kn)")
        self._build_q()
        if grid.scheme == "chebyshev":
            self._build_chebyshev()
        else:
            self._build_fd2()
        self._build_coupling()

    # -- q direction --------------------------------------------------------
    def _build_q(self):
        nq = self.grid.nq
        self.q = 2.0 * np.pi * np.arange(nq) / nq
        self.modes = np.arange(0, self.grid.cutoff + 1, self.kn, dtype=float)
        if self.modes.size < 2:
            raise ValueError("mode cutoff below the active wavenumber")
        m = self.modes[:, None]
        self.cos = np.cos(m * self.q[None, :])
        self.dcos = -m * np.sin(m * self.q[None, :])
        self.ddcos = -(m**2) * self.cos
        scale = np.where(self.modes == 0, 1.0, 2.0) / nq
        self.project = (self.cos * scale[:, None]).T
        self.helmholtz = 1.0 / (1.0 + self.modes**2)
        k = np.fft.rfftfreq(nq, 1.0 / nq)
        k[-1] = 0.0
        self._ik = 1j * k

    @property
    def n_modes(self):
        return self.modes.size

    # -- p direction: spectral elements -------------------------------------
    def _build_chebyshev(self):
        spec, grid = self.spec, self.grid
        layers = spec.layers
        lengths = np.diff(layers)
        per_layer = _split(grid.n_p - 1, lengths, 2)
        elements = []
        max_deg = grid.element_nodes - 1
        for i, deg in enumerate(per_layer):
            count = int(np.ceil(deg / max_deg))
            degs = _split(deg, np.ones(count), 2)
            edges = np.linspace(layers[i], layers[i + 1], count + 1)
            elements += [(edges[j], edges[j + 1], int(degs[j])) for j in range(count)]
        self.elements = elements

        nodes = [layers[0]]
        starts = []
        for a, b, deg in elements:
            starts.append(len(nodes) - 1)
            nodes.extend(chebyshev_lobatto(a, b, deg)[1:])
        nodes = np.array(nodes)
        nodes[-1] = 0.0
        Np = nodes.size
        self.nodes = nodes

        flux_pts, Drows, Dcols, Dvals, Irows, Icols = [], [], [], [], [], []
        weights = np.zeros(Np)
        Dnode = np.zeros((Np, Np))
        counts = np.zeros(Np)
        ends = []
        offset = 0
        for (a, b, deg), s in zip(elements, starts):
            x = nodes[s: s + deg + 1]
            D = _cheb_diff(x)
            idx = np.arange(s, s + deg + 1)
            rr, cc = np.meshgrid(np.arange(deg + 1), np.arange(deg + 1), indexing="ij")
            Drows.append((offset + rr).ravel())
            Dcols.append(idx[cc].ravel())
            Dvals.append(D.ravel())
            Irows.append(offset + np.arange(deg + 1))
            Icols.append(idx)
            flux_pts.append(x)
            weights[idx] += clenshaw_curtis(a, b, deg)
            Dnode[np.ix_(idx, idx)] += D
            counts[idx] += 1
            ends.append((offset, offset + deg))
            offset += deg + 1
        Nf = offset
        self.flux_points = np.concatenate(flux_pts)
        self.Dflux = sp.csr_matrix((np.concatenate(Dvals), (np.concatenate(Drows), np.concatenate(Dcols))), shape=(Nf, Np))
        self.Iflux = sp.csr_matrix((np.ones(Nf), (np.concatenate(Irows), np.concatenate(Icols))), shape=(Nf, Np))
        self.Dnode = sp.csr_matrix(Dnode / counts[:, None])
        self.dtop = self.Dnode[[Np - 1]].toarray().ravel()
        self.weights = weights

        # divergence rows for nodes 1..Np-2: collocation inside elements,
        # flux continuity (left minus right) at element interfaces
        rows, cols, vals = [], [], []
        collocated = np.ones(Np - 2, dtype=bool)
        for e, ((a, b, deg), s) in enumerate(zip(elements, starts)):
            f0, _ = ends[e]
            D = _cheb_diff(nodes[s: s + deg + 1])
            for local in range(1, deg):
                r = s + local - 1
                rows += [r] * (deg + 1)
                cols += list(f0 + np.arange(deg + 1))
                vals += list(D[local])
            if e + 1 < len(elements):
                r = s + deg - 1
                scale = 1.0 / min(b - a, elements[e + 1][1] - elements[e + 1][0])
                rows += [r, r]
                cols += [ends[e][1], ends[e + 1][0]]
                vals += [scale, -scale]
                collocated[r] = False
        self.Ddiv = sp.csr_matrix((vals, (rows, cols)), shape=(Np - 2, Nf))
        self.collocated = collocated

    # -- p direction: second-order finite volumes ---------------------------
    def _build_fd2(self):
        spec, grid = self.spec, self.grid
        layers = spec.layers
        lengths = np.diff(layers)
        per_layer = _split(grid.n_p - 1, lengths, 1)
        nodes = np.concatenate([np.linspace(layers[i], layers[i + 1], per_layer[i] + 1)[:-1]
                                for i in range(lengths.size)] + [[0.0]])
        Np = nodes.size
        self.nodes = nodes
        self.elements = [(layers[i], layers[i + 1], int(per_layer[i])) for i in range(lengths.size)]
        dx = np.diff(nodes)
        Nf = Np - 1
        self.flux_points = nodes[:-1] + 0.5 * dx
        f = np.arange(Nf)
        self.Dflux = sp.csr_matrix((np.concatenate([-1 / dx, 1 / dx]), (np.concatenate([f, f]), np.concatenate([f, f + 1]))), shape=(Nf, Np))
        self.Iflux = sp.csr_matrix((np.full(2 * Nf, 0.5), (np.concatenate([f, f]), np.concatenate([f, f + 1]))), shape=(Nf, Np))
        r = np.arange(Np - 2)
        vol = 0.5 * (dx[:-1] + dx[1:])
        self.Ddiv = sp.csr_matrix((np.concatenate([1 / vol, -1 / vol]), (np.concatenate([r, r]), np.concatenate([r + 1, r]))), shape=(Np - 2, Nf))
        self.collocated = np.ones(Np - 2, dtype=bool)

        D = np.zeros((Np, Np))
        for j in range(1, Np - 1):
            hm, hp = dx[j - 1], dx[j]
            D[j, j - 1] = -hp / (hm * (hm + hp))
            D[j, j] = (hp - hm) / (hm * hp)
            D[j, j + 1] = hm / (hp * (hm + hp))
        D[0, :3] = _one_sided(nodes[:3], nodes[0])
        D[-1, -3:] = _one_sided(nodes[-3:], nodes[-1])
        self.Dnode = sp.csr_matrix(D)
        self.dtop = D[-1]
        w = np.zeros(Np)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        self.weights = w

    def _build_coupling(self):
        Np = self.nodes.size
        nz = (abs(self.Ddiv) @ (abs(self.Dflux) + abs(self.Iflux))).toarray() != 0
        nz |= (abs(self.Dnode).toarray()[1:-1] != 0) & self.collocated[:, None]
        nz[np.arange(Np - 2), np.arange(1, Np - 1)] = True
        top = (self.dtop != 0)
        top[-1] = True
        full = np.vstack([nz, top[None, :]])
        self.coupling = full[:, 1:]

    # -- helpers ------------------------------------------------------------
    def apply_p(self, mat, x):
        """Apply a sparse (rows, Np) operator along the p axis of (..., Np, nq)."""
        lead = x.shape[:-2]
        npn, nq = x.shape[-2:]
        moved = np.moveaxis(x.reshape((-1, npn, nq)), 1, 0).reshape(npn, -1)
        if np.iscomplexobj(moved):
            out = mat @ moved.real + 1j * (mat @ moved.imag)
        else:
            out = mat @ moved
        out = np.moveaxis(out.reshape(mat.shape[0], -1, nq), 0, 1)
        return out.reshape(lead + (mat.shape[0], nq))

    def dq(self, f):
        """Spectral q-derivative of periodic samples along the last axis."""
        if np.iscomplexobj(f):
            return self.dq(f.real) + 1j * self.dq(f.imag)
        return np.fft.irfft(self._ik * np.fft.rfft(f, axis=-1), n=self.grid.nq, axis=-1)

    def synth(self, coeffs, basis):
        """Evaluate cosine coefficients (..., M) against a (M, nq) basis."""
        if np.iscomplexobj(coeffs):
            return coeffs.real @ basis + 1j * (coeffs.imag @ basis)
        return coeffs @ basis

    def to_modes(self, samples):
        if np.iscomplexobj(samples):
            return samples.real @ self.project + 1j * (samples.imag @ self.project)
        return samples @ self.project

    def interpolation_matrix(self, p, derivative=False):
        """Rows evaluating node data at arbitrary ``p`` (piecewise polynomial).

        With ``derivative=True`` a second matrix evaluating d/dp of the same
        piecewise interpolant is returned as well.
        """
        p = np.atleast_1d(np.asarray(p, dtype=float))
        V = np.zeros((p.size, self.nodes.size))
        D = np.zeros_like(V)
        if self.grid.scheme == "fd2":
            for i, x in enumerate(p):
                j = int(np.clip(np.searchsorted(self.nodes, x) - 1, 0, self.nodes.size - 2))
                dx = self.nodes[j + 1] - self.nodes[j]
                t = (x - self.nodes[j]) / dx
                V[i, j], V[i, j + 1] = 1 - t, t
                D[i, j], D[i, j + 1] = -1 / dx, 1 / dx
        else:
            start = 0
            for a, b, deg in self.elements:
                xs = self.nodes[start: start + deg + 1]
                inside = np.flatnonzero((p >= a) & (p <= b) & ~V.any(axis=1))
                if inside.size:
                    rows = np.array([_barycentric_row(xs, x) for x in p[inside]])
                    V[inside, start: start + deg + 1] = rows
                    D[inside, start: start + deg + 1] = rows @ _cheb_diff(xs)
                start += deg
        return (V, D) if derivative else V


def _one_sided(x, at):
    """Three-point derivative weights at ``at`` from nodes ``x``."""
    x0, x1, x2 = x
    return np.array([
        (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2)),
        (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2)),
        (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1)),
    ])


def _barycentric_row(xs, x):
    n = xs.size - 1
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = x - xs
    hit = np.flatnonzero(diff == 0)
    if hit.size:
        row = np.zeros(n + 1)
        row[hit[0]] = 1.0
        return row
    t = w / diff
    return t / t.sum()


@lru_cache(maxsize=32)
def discretization(grid, spec, kn):
    return Discretization(grid, spec, kn)
