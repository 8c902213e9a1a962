"""Kernel residual |J w*| under p-refinement for both p-discretisations.

Shows spectral-element h-refinement down to the rounding floor and the
second-order behaviour of the finite-volume scheme.
"""

import argparse

import numpy as np

from rotwaves.dispersion import bifurcation_lambda
from rotwaves.grid import TensorGrid, discretization
from rotwaves.operators import laminar_state
from rotwaves.params import PhysicalParams, VorticitySpec
from rotwaves.solver import jacobian, kernel_coefficients


def kernel_residual(params, spec, grid):
    bp = bifurcation_lambda(params, spec, 1, n=1)
    disc = discretization(grid, spec, 1)
    w = kernel_coefficients(disc, bp)
    J = jacobian(laminar_state(params, spec, bp.lambda_k, grid), params, spec).dc
    return float(np.abs(J @ w[1:].ravel()).max())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nq", type=int, default=32)
    ap.add_argument("--levels", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    args = ap.parse_args()
    params = PhysicalParams(g=9.81, sigma=0.074, p0=-1.0)
    spec = VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0])
    schemes = [("chebyshev p=6", dict(scheme="chebyshev", element_nodes=7)),
               ("chebyshev p=8", dict(scheme="chebyshev", element_nodes=9)),
               ("fd2", dict(scheme="fd2"))]
    print(f"{'Np':>6}" + "".join(f"{name:>16}" for name, _ in schemes))
    for n_p in args.levels:
        row = [kernel_residual(params, spec, TensorGrid(nq=args.nq, n_p=n_p, **kw)) for _, kw in schemes]
        print(f"{n_p:>6}" + "".join(f"{v:>16.3e}" for v in row))


if __name__ == "__main__":
    main()
