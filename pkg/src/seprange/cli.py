"""Command-line entry point: ``seprange <subcommand> [options]``.

Exit codes: 0 success or certified, 1 unreadable or malformed input,
2 unsupported configuration, 3 no certificate found, 4 internal
inconsistency (a lower bound above an achieved ratio).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .drivers import (RunConfig, bounds_table, confidence_report, goe_rows, instances_table,
                      product_sweep, ratio_report, sweep_angles)
from .errors import ConfigError, DataFormatError, DegenerateBody, UnsupportedDimension
from .fileio import (load_observables, load_shots, svg_heatmap, svg_path, svg_regions,
                     svg_series, write_report)

EXIT_OK, EXIT_IO, EXIT_UNSUPPORTED, EXIT_NO_CERT, EXIT_INVARIANT = 0, 1, 2, 3, 4


def _config(args) -> RunConfig:
    return RunConfig(seed=args.seed, directions=args.directions, mc_samples=args.mc_samples,
                     cert_grid=args.cert_grid, restarts=args.restarts)


def _emit(args, name, meta, data):
    path = write_report(args.out_dir, name, meta, data, args.format)
    print(f"wrote {path}")


def _svg(args, command, text):
    path = svg_path(args.out_dir, command)
    path.write_text(text)
    print(f"wrote {path}")


def run_ratio(args) -> int:
    obs = load_observables(args.observables)
    cfg = _config(args)
    report, polys = ratio_report(obs, cfg)
    r = report["ratio"]
    print(f"k={report['k']} (input {report['k_input']}); {report['reduction'] or 'no reduction'}")
    print(f"ratio estimate {r['estimate']:.6f}  bracket [{r['lower']:.6f}, {r['upper']:.6f}]  "
          f"certified directions {sum(report['certified'])}/{report['directions']}")
    _emit(args, "ratio", cfg.meta(command="ratio", observables=str(args.observables)), report)
    if polys:
        _svg(args, "ratio", svg_regions(polys, "numerical ranges", ("<A1>", "<A2>")))
    return EXIT_OK


def run_goe(args) -> int:
    cfg = _config(args)
    if args.samples < 10:
        raise ConfigError("need at least 10 samples")
    rows, stats = goe_rows(args.d, args.k, args.samples, cfg, args.stat_samples)
    for row in rows:
        print(f"d={row['d']} k={row['k']} tau={row['tau_estimate']:.4f} +- {row['stderr']:.4f}  "
              f"ratio^k={row['ratio_power_k']:.4f}")
    print(f"<lsep_min/l_min> = {stats['mean_ratio']:.4f} +- {stats['stderr']:.4f}")
    meta = cfg.meta(command="goe", d=args.d, k=list(args.k), samples=args.samples)
    _emit(args, "goe-tau", meta, rows)
    _emit(args, "goe-stats", meta, [stats])
    ks = [r["k"] for r in rows]
    _svg(args, "goe", svg_series({
        "tau (sampled)": (ks, [r["tau_estimate"] for r in rows], [r["stderr"] for r in rows], "points"),
        "<ratio>^k": (ks, [r["ratio_power_k"] for r in rows], None, "line")},
        f"GOE volume ratios, d={args.d}", ("k", "tau")))
    return EXIT_OK


def run_product_sweep(args) -> int:
    cfg = _config(args)
    rows, summary = product_sweep(args.grid, cfg, numeric=not args.analytic_only)
    print(f"min analytic ratio {summary['min_ratio']:.6f} at "
          f"({summary['argmin_theta_A']:.6f}, {summary['argmin_theta_B']:.6f})")
    if not args.analytic_only:
        print(f"max |analytic - numeric| = {summary['max_abs_diff']:.3e}; "
              f"brackets contain analytic: {summary['bracket_contains_analytic']}")
    meta = cfg.meta(command="product-sweep", grid=args.grid, **summary)
    _emit(args, "product-sweep", meta, rows)
    ts = sweep_angles(args.grid)
    grid = np.array([r["ratio_analytic"] for r in rows if r["kind"] == "grid"]).reshape(len(ts), len(ts))
    _svg(args, "product-sweep", svg_heatmap(ts, ts, grid, "volume ratio", ("theta_A", "theta_B")))
    return EXIT_OK


def run_confidence(args) -> int:
    obs = load_observables(args.observables)
    shots = load_shots(args.data, obs.k)
    cfg = _config(args)
    report = confidence_report(obs, shots, args.alpha, cfg, args.t)
    meta = cfg.meta(command="confidence", alpha=args.alpha, observables=str(args.observables),
                    data=str(args.data))
    _emit(args, "confidence", meta, report)
    cert = report["certificate"]
    if cert is None:
        print("no certificate: the confidence region meets the separable range")
        return EXIT_NO_CERT
    print(f"entanglement certified: margin {cert['margin']:.6f} along {cert['direction']}")
    return EXIT_OK


def run_bounds(args) -> int:
    rows, violations = bounds_table(tuple(args.dims), args.k)
    for r in rows:
        print(f"k={r['k']}  {r['formula']:<28} {r['bound']:.6g}  {r['instances']}")
    _emit(args, "bounds", {"command": "bounds", "dims": list(args.dims), "k": args.k}, rows)
    for v in violations:
        print(f"VIOLATION {v}", file=sys.stderr)
    return EXIT_INVARIANT if violations else EXIT_OK


def run_instances(args) -> int:
    cfg = _config(args)
    rows = instances_table(cfg)
    for r in rows:
        est = "analytic only" if r["estimate"] is None else (
            f"{r['estimate']:.5f} [{r['lower']:.5f}, {r['upper']:.5f}]")
        print(f"{r['name']:<18} k={r['k']}  expected {r['expected']:.6f}  numeric {est}")
    _emit(args, "instances", cfg.meta(command="instances"), rows)
    _, violations = bounds_table((2, 2), 4)
    bad = [r for r in rows if r["estimate"] is not None and not
           (r["lower"] - 1e-9 <= r["expected"] <= r["upper"] + 1e-9)]
    for r in bad:
        print(f"VIOLATION {r['name']}: bracket misses {r['expected']}", file=sys.stderr)
    return EXIT_INVARIANT if violations or bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--directions", type=int, default=720, help="support directions per body")
    common.add_argument("--mc-samples", type=int, default=100_000)
    common.add_argument("--grid", type=int, default=16, help="angle grid for product-sweep")
    common.add_argument("--cert-grid", type=int, default=64,
                        help="Bloch-sphere grid per axis for certified two-qubit supports")
    common.add_argument("--restarts", type=int, default=64, help="seesaw restarts")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--out-dir", default="out")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default: json for ratio/confidence/instances, else csv)")

    p = argparse.ArgumentParser(prog="seprange", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ratio", parents=[common], help="volume ratio of an observable set")
    s.add_argument("observables")
    s.set_defaults(func=run_ratio)

    s = sub.add_parser("goe", parents=[common], help="GOE average-case volume ratios")
    s.add_argument("--d", type=int, default=2, choices=(2, 3))
    s.add_argument("--k", type=int, nargs="+", default=[1, 2, 3])
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--stat-samples", type=int, default=None,
                   help="samples for the minimal-eigenvalue statistics (default: --samples)")
    s.set_defaults(func=run_goe, table=True)

    s = sub.add_parser("product-sweep", parents=[common], help="locally traceless product pair")
    s.add_argument("--analytic-only", action="store_true")
    s.set_defaults(func=run_product_sweep, table=True)

    s = sub.add_parser("confidence", parents=[common], help="certify entanglement from shot data")
    s.add_argument("observables")
    s.add_argument("data")
    s.add_argument("--t", type=float, nargs="+", default=None,
                   help="custom half widths in rescaled units (default: equal split)")
    s.set_defaults(func=run_confidence)

    s = sub.add_parser("bounds", parents=[common], help="lower bounds next to instance ratios")
    s.add_argument("--dims", type=int, nargs="+", default=[2, 2])
    s.add_argument("--k", type=int, default=4)
    s.set_defaults(func=run_bounds, table=True)

    s = sub.add_parser("instances", parents=[common], help="named extreme instances")
    s.set_defaults(func=run_instances)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if getattr(args, "table", False) else "json"
    try:
        return args.func(args)
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UnsupportedDimension, ConfigError, DegenerateBody) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
