"""Command-line interface: ``rotwaves {laminar,dispersion,branch,verify}``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import load_config
from .dispersion import (bifurcation_lambda, check_d2, d2_integral, lambda0, period_divisor_n,
                         transversality_integral)
from .errors import ConfigError, NotApplicableError, RotWavesError, SnapshotError
from .fields import analyticity_diagnostic, surface_profile, velocity_pressure
from .laminar import head, laminar_height, speed_profile
from .snapshot import load_state, save_state, write_csv, write_json
from .solver import continue_branch
from .verify import verify_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("rotwaves")


def _grid_arg(text):
    try:
        nq, n_p = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NqxNp, e.g. 64x41, got {text!r}")
    return nq, n_p


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _apply_overrides(cfg, args):
    if getattr(args, "grid", None):
        nq, n_p = args.grid
        try:
            cfg = replace(cfg, grid=replace(cfg.grid, nq=nq, n_p=n_p))
        except ValueError as exc:
            raise ConfigError(f"--grid: {exc}", field="grid") from exc
    if getattr(args, "tol", None) is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, tol=args.tol))
    if getattr(args, "steps", None) is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, max_steps=args.steps))
    if getattr(args, "lambdas", None):
        cfg = replace(cfg, lambdas=tuple(args.lambdas))
    return cfg


def _outdir(cfg, args):
    out = Path(args.out or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _n_for(cfg):
    if cfg.n is not None:
        return cfg.n
    return period_divisor_n(cfg.physical, cfg.vorticity)


def cmd_laminar(cfg, args):
    out = _outdir(cfg, args)
    P, spec = cfg.physical, cfg.vorticity
    p = np.linspace(spec.p0, 0.0, args.points)
    p = np.unique(np.concatenate([p, spec.breakpoints]))
    rows, summary = [], []
    for lam in cfg.lambdas:
        try:
            H = laminar_height(P, spec, lam, p)
            a = speed_profile(spec, lam, p)
            rows += [(lam, pi, Hi, ai) for pi, Hi, ai in zip(p, H, a)]
            summary.append({"lambda": lam, "Q": head(P, spec, lam), "depth": float(H[-1]), "error": None})
        except RotWavesError as exc:
            summary.append({"lambda": lam, "Q": None, "depth": None, "error": str(exc)})
    write_csv(out / "laminar.csv", ["lambda", "p", "H", "a"], rows)
    write_json(out / "laminar.json", {"laminar": summary})
    print(f"wrote {out / 'laminar.csv'} ({len(summary)} lambda values)")
    return EXIT_OK


def cmd_dispersion(cfg, args):
    out = _outdir(cfg, args)
    P, spec = cfg.physical, cfg.vorticity
    report = {}
    try:
        report["lambda0"] = lambda0(P, spec)
    except NotApplicableError as exc:
        report["lambda0"] = f"not applicable: {exc}"
    report["d2_integral"] = d2_integral(P, spec) if P.g > 0 else None
    try:
        report["d2"] = check_d2(P, spec)
    except NotApplicableError as exc:
        report["d2"] = f"not applicable: {exc}"
    try:
        report["n_theory"] = period_divisor_n(P, spec)
    except NotApplicableError as exc:
        report["n_theory"] = f"not applicable: {exc}"
    n = cfg.n if cfg.n is not None else report["n_theory"]
    if not isinstance(n, int):
        n = 1
    report["n"] = n
    ks = args.k_list or list(cfg.k)
    table = []
    for k in ks:
        bp = bifurcation_lambda(P, spec, k, n=n, steps=cfg.dispersion_steps)
        table.append({"k": k, "lambda_k": bp.lambda_k, "below_lambda0": bp.below_lambda0,
                      "transversality": transversality_integral(P, spec, bp)})
    report["bifurcations"] = table
    write_json(out / "dispersion.json", report)
    write_csv(out / "dispersion.csv", ["k", "lambda_k", "transversality"],
              [(r["k"], r["lambda_k"], r["transversality"]) for r in table])
    for r in table:
        print(f"k={r['k']}: lambda_k={r['lambda_k']:.15g}  T={r['transversality']:.6g}")
    return EXIT_OK


def cmd_branch(cfg, args):
    out = _outdir(cfg, args)
    P, spec = cfg.physical, cfg.vorticity
    k = args.k
    n = cfg.n if cfg.n is not None else (1 if P.g == 0 else _n_for(cfg))
    bp = bifurcation_lambda(P, spec, k, n=n, steps=cfg.dispersion_steps)
    stride = cfg.output.snapshot_stride
    records = []

    def emit(point):
        i = len(records) + 1
        surf = surface_profile(point.state, P, spec)
        records.append({"index": i, "s": point.s, "lambda": point.state.lam, "wave_height": surf.height,
                        "residual": point.residual_norm, "newton_iters": point.newton_iters})
        log.info("step %d: s=%.4e lambda=%.12g residual=%.2e", i, point.s, point.state.lam, point.residual_norm)
        if stride and i % stride == 0:
            _snapshot(out, f"k{k}_step{i:04d}", point.state, P, spec, point.s)

    branch = continue_branch(bp, P, spec, cfg.solver, cfg.grid, callback=emit)
    if len(branch.points) < 2:
        print("corrector failed at the first continuation step", file=sys.stderr)
        return EXIT_NUMERIC
    last = branch.points[-1]
    _snapshot(out, f"k{k}_final", last.state, P, spec, last.s)
    write_json(out / f"branch_k{k}.json", {
        "k": k, "n": n, "lambda_k": bp.lambda_k, "termination": branch.termination.value,
        "grid": cfg.grid.to_dict(), "points": records})
    print(f"branch k={k}: {len(records)} points, termination {branch.termination.value}")
    return EXIT_OK


def _snapshot(out, stem, state, P, spec, s):
    save_state(out / f"{stem}.json", state, P, spec, s=s)
    surf = surface_profile(state, P, spec)
    write_csv(out / f"{stem}_surface.csv", ["q", "eta"], zip(surf.q, surf.eta))
    flow = velocity_pressure(state, P, spec)
    rows = zip(flow.x.ravel(), flow.y.ravel(), flow.psi.ravel(), flow.u_rel.ravel(), flow.v.ravel(), flow.P.ravel())
    write_csv(out / f"{stem}_fields.csv", ["x", "y", "psi", "u_minus_c", "v", "P"], rows)


def cmd_verify(cfg, args):
    state, P, spec = load_state(args.state)
    if cfg is not None:
        P, spec = cfg.physical, cfg.vorticity
    checks = verify_state(state, P, spec, tol=args.tol or 1e-6)
    ok = all(c.passed for c in checks)
    fits = analyticity_diagnostic(state, spec) if checks[0].passed else []
    report = {"state": str(args.state), "pass": ok, "checks": [c.to_dict() for c in checks],
              "decay_rates": [{"p": f.p, "rate": f.rate, "r2": f.r2, "saturated": f.saturated} for f in fits]}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "verify.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<20} {c.value}  {c.detail}")
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="rotwaves", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML run configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")

    p = sub.add_parser("laminar", help="tabulate H(p; lambda), a(p) and Q(lambda)")
    common(p)
    p.add_argument("--lambda", dest="lambdas", type=float, nargs="+", help="lambda values")
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_laminar)

    p = sub.add_parser("dispersion", help="lambda_0, (d2), n and bifurcation points")
    common(p)
    p.add_argument("--k", dest="k_list", type=_positive_int, nargs="+")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("branch", help="continue the k-th bifurcating branch")
    common(p)
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--steps", type=_positive_int)
    p.add_argument("--grid", type=_grid_arg, help="NqxNp, e.g. 64x41")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_branch)

    p = sub.add_parser("verify", help="run consistency checks on a state snapshot")
    common(p, config_required=False)
    p.add_argument("state", help="snapshot JSON written by 'branch'")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else None
        if cfg is not None:
            cfg = _apply_overrides(cfg, args)
        return args.func(cfg, args)
    except ConfigError as exc:
        where = f" (field {exc.field})" if exc.field else ""
        where += f" (line {exc.line})" if exc.line else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SnapshotError as exc:
        print(f"snapshot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RotWavesError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
