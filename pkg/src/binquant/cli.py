"""Command-line entry point: ``binquant {run,analyze,verify-recursion,replicate-paper}``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .analysis import analyze
from .config import load_config
from .errors import BinQuantError
from .harness import export, fit_mse_slope, run_monte_carlo
from .recursion import RecursionSpec, fit_rate, iterate
from .replication import replicate

log = logging.getLogger("binquant")

# (eta, eta2, h1) grid for verify-recursion; eta1 follows from eta.
RECURSION_GRID = [
    (eta, eta2, h1)
    for eta in (-0.2, 0.0, 0.3, 0.5, 0.8, 1.5, 3.0)
    for eta2, h1 in ((0.0, 0.5), (1.0, 0.5), (0.5, 0.8))
]


def _apply_overrides(cfg, args):
    changes = {}
    for name in ("trials", "horizon", "gamma"):
        val = getattr(args, name, None)
        if val is not None:
            changes[name] = val
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    return cfg.with_(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    res = run_monte_carlo(cfg)
    out = Path(args.out)
    stem = cfg.name
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    report = analyze(cfg) if "json" in formats else None
    for fmt in formats:
        path = export(res, fmt, out / f"{stem}.{fmt}", report=report, config=cfg)
        print(f"wrote {path}")
    if args.figures:
        truth = cfg.true_params.theta
        for path in (
            plotting.plot_estimates(res, truth, out / f"{stem}_estimates.png", p=cfg.p),
            plotting.plot_log_mse({stem: res}, out / f"{stem}_log_mse.png"),
        ):
            print(f"wrote {path}")
    K = cfg.horizon
    summary = f"final mean e^2 = {res.at(K):.6g}; mean estimate = {np.array2string(res.final_theta, precision=5)}"
    if K >= 100:
        summary += f"; slope[{K // 100}, {K}] = {fit_mse_slope(res.mean_e_sq, (K // 100, K)):.3f}"
    print(summary)
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    report = analyze(cfg, gamma=args.gamma)
    text = report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def recursion_rows(horizon: int, c: float = 1.0) -> list[dict]:
    rows = []
    for eta, eta2, h1 in RECURSION_GRID:
        eta1 = eta + eta2 * h1 / (1.0 - h1)
        if eta1 <= 0:
            continue
        spec = RecursionSpec(eta1=eta1, eta2=eta2, h1=h1, horizon=horizon, c=c)
        rows.append({"eta1": eta1, "eta2": eta2, "h1": h1, "eta": spec.eta,
                     "fitted_exponent": fit_rate(iterate(spec))})
    return rows


def cmd_verify_recursion(args) -> int:
    rows = recursion_rows(args.horizon, args.c)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eta1", "eta2", "h1", "eta", "fitted_exponent"])
    for r in rows:
        writer.writerow([repr(r[k]) for k in ("eta1", "eta2", "h1", "eta", "fitted_exponent")])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.figure:
        print(f"wrote {plotting.plot_rate_table(rows, args.figure)}", file=sys.stderr)
    return 0


def cmd_replicate(args) -> int:
    checks = replicate(args.trials, args.horizon, args.out, figures=not args.no_figures)
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name:<{width}}  {c.value:>12}  (target {c.target})")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binquant", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo run of a config; writes CSV/JSON and figures")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--out", default="results")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="print the convergence report as JSON")
    p.add_argument("config")
    p.add_argument("--gamma", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-recursion", help="fit decay exponents of the perturbed recursion")
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--c", type=float, default=1.0, help="scale of the c/k^2 forcing")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--figure", help="PNG path for the fitted-exponent plot")
    p.set_defaults(func=cmd_verify_recursion)

    p = sub.add_parser("replicate-paper", help="run both bundled studies and print a pass/fail table")
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--out", help="directory for CSV/JSON data and figures")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BinQuantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
