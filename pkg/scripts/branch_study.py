"""Continue a branch and tabulate amplitude, lambda, wave height and diagnostics.

    python scripts/branch_study.py --profile two-layer --steps 40 --out branch.csv
"""

import argparse
import time

import numpy as np

from rotwaves.dispersion import bifurcation_lambda
from rotwaves.fields import analyticity_diagnostic, count_extrema, surface_profile, velocity_pressure
from rotwaves.grid import TensorGrid
from rotwaves.params import PhysicalParams, VorticitySpec
from rotwaves.snapshot import write_csv
from rotwaves.solver import SolverConfig, continue_branch
from rotwaves.verify import min_hp

PROFILES = {
    "irrotational": VorticitySpec.constant(-1.0, 0.0),
    "two-layer": VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", choices=sorted(PROFILES), default="two-layer")
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--nq", type=int, default=64)
    ap.add_argument("--np", dest="n_p", type=int, default=41)
    ap.add_argument("--sigma", type=float, default=0.074)
    ap.add_argument("--out", default=None, help="optional CSV output")
    args = ap.parse_args()

    params = PhysicalParams(g=9.81, sigma=args.sigma, p0=-1.0)
    spec = PROFILES[args.profile]
    bp = bifurcation_lambda(params, spec, args.k, n=1)
    print(f"lambda_{args.k} = {bp.lambda_k:.12g}")
    t0 = time.perf_counter()
    branch = continue_branch(bp, params, spec, SolverConfig(max_steps=args.steps),
                             TensorGrid(nq=args.nq, n_p=args.n_p))
    print(f"{len(branch.points) - 1} steps in {time.perf_counter() - t0:.2f} s, "
          f"termination: {branch.termination.value}")

    rows = []
    print(f"{'s':>10} {'lambda':>16} {'height':>10} {'min h_p':>9} {'extrema':>7} {'E spread':>9} {'decay':>8}")
    for pt in branch.points[1:]:
        st = pt.state
        fits = [f for f in analyticity_diagnostic(st, spec) if not f.saturated]
        decay = min((f.rate for f in fits), default=np.inf)
        row = (pt.s, st.lam, surface_profile(st, params, spec).height, min_hp(st, params, spec)[0],
               count_extrema(st), velocity_pressure(st, params, spec).bernoulli_spread, decay)
        rows.append(row)
        print(f"{row[0]:>10.3e} {row[1]:>16.10g} {row[2]:>10.4g} {row[3]:>9.4f} {row[4]:>7d} "
              f"{row[5]:>9.1e} {row[6]:>8.3f}")
    if args.out:
        write_csv(args.out, ["s", "lambda", "height", "min_hp", "extrema", "bernoulli_spread", "decay_rate"], rows)


if __name__ == "__main__":
    main()
