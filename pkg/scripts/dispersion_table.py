"""Bifurcation points lambda_k and transversality integrals for a few vorticity profiles.

    python scripts/dispersion_table.py --sigma 0.074 --kmax 5
"""

import argparse

from rotwaves.dispersion import bifurcation_lambda, lambda0, period_divisor_n, transversality_integral
from rotwaves.params import PhysicalParams, VorticitySpec

PROFILES = {
    "irrotational": VorticitySpec.constant(-1.0, 0.0),
    "two-layer": VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0]),
    "three-layer": VorticitySpec.piecewise([-1.0, -0.7, -0.3, 0.0], [-1.0, 3.0, 0.5]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=9.81)
    ap.add_argument("--sigma", type=float, default=0.074)
    ap.add_argument("--kmax", type=int, default=3)
    args = ap.parse_args()
    params = PhysicalParams(g=args.g, sigma=args.sigma, p0=-1.0)
    for name, spec in PROFILES.items():
        header = f"{name}:"
        if args.g > 0:
            header += f" lambda_0 = {lambda0(params, spec):.10g}, n = {period_divisor_n(params, spec)}"
        print(header)
        print(f"  {'k':>3} {'lambda_k':>18} {'T':>12}")
        for k in range(1, args.kmax + 1):
            bp = bifurcation_lambda(params, spec, k, n=1)
            print(f"  {k:>3} {bp.lambda_k:>18.12g} {transversality_integral(params, spec, bp):>12.5g}")


if __name__ == "__main__":
    main()
