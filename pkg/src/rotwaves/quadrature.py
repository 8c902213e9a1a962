"""Adaptive composite Gauss-Legendre quadrature, vectorised over many intervals.

Every interval handed to these routines must lie inside one smooth piece of
the integrand; callers split at vorticity breakpoints before integrating.
"""

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(8)


def _gl8(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _NODES
    return half * (f(x) @ _WEIGHTS)


def integrate(f, lo, hi, rtol=1e-14, max_depth=60):
    """Integrate the vectorised function ``f`` over each interval ``[lo_i, hi_i]``.

    Each interval is bisected until an 8-point Gauss-Legendre rule and its
    two-panel refinement agree to ``rtol`` (relative to the integral of |f|).
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    shape = lo.shape
    lo = lo.ravel()
    hi = hi.ravel()
    out = np.zeros(lo.size)
    if lo.size == 0:
        return out.reshape(shape)

    owner = np.flatnonzero(hi != lo)
    a, b = lo[owner], hi[owner]
    coarse = _gl8(f, a, b)
    ref = np.abs(_gl8(lambda x: np.abs(f(x)), a, b))
    span = np.abs(b - a)
    tiny = np.finfo(float).tiny

    for depth in range(max_depth):
        if owner.size == 0:
            break
        m = 0.5 * (a + b)
        left = _gl8(f, a, m)
        right = _gl8(f, m, b)
        fine = left + right
        local_ref = np.maximum(np.abs(fine), ref[owner] * np.abs(b - a) / span[owner])
        done = np.abs(fine - coarse) <= rtol * local_ref + tiny
        if depth == max_depth - 1:
            done[:] = True
        np.add.at(out, owner[done], fine[done])
        keep = ~done
        owner = np.concatenate([owner[keep], owner[keep]])
        a, b = np.concatenate([a[keep], m[keep]]), np.concatenate([m[keep], b[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    return out.reshape(shape)


def cumulative(f, breakpoints, points, rtol=1e-14):
    """Return ``int_{breakpoints[0]}^{x} f`` for every ``x`` in ``points``.

    Integration intervals are split at ``breakpoints`` so that ``f`` only has
    to be smooth between consecutive breakpoints.
    """
    points = np.asarray(points, dtype=float)
    start = float(breakpoints[0])
    knots = np.unique(np.concatenate([np.asarray(breakpoints, dtype=float), points.ravel()]))
    knots = knots[knots >= start]
    pieces = integrate(f, knots[:-1], knots[1:], rtol=rtol)
    running = np.concatenate([[0.0], np.cumsum(pieces)])
    idx = np.searchsorted(knots, points)
    return running[idx]
