"""Command-line entry point: experiment runs, one-off metrics, table dumps.

Exit codes: 0 success, 1 validation error (single-line diagnostic on stderr),
2 runtime failure. Stdout tables are TSV.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .linalg import DimensionSpec
from .rmt import bessel_zero_times
from .ensembles import GlobalEnsembleSpec, SpectrumSpec, sample_global_state
from .projected import build_projected_ensemble
from .designs import design_report, haar_statistics
from .weingarten import weingarten_table
from .experiments import ConfigError, load_config, run_experiment


class _ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ValidationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="projens", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True, help="experiment config file")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--seed", type=int, default=None, help="seed override (flag beats config)")
    run.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto")
    run.add_argument("--quiet", action="store_true")

    roots = sub.add_parser("bessel-roots", help="ascending times where J1(2t)/t vanishes")
    roots.add_argument("--count", type=int, required=True)

    wg = sub.add_parser("wg-table", help="dump a Weingarten table as CSV")
    wg.add_argument("--degree", type=int, required=True, help="permutation degree q")
    wg.add_argument("--dim", type=int, required=True, help="unitary group dimension N")
    wg.add_argument("--out", default=None, help="CSV file (stdout if omitted)")

    report = sub.add_parser("report", help="one-off design report for a sampled ensemble")
    report.add_argument("--ensemble", choices=["haar", "gue", "zero-trace"], default="haar")
    report.add_argument("--na", type=int, required=True)
    report.add_argument("--nb", type=int, required=True)
    report.add_argument("--k", type=int, required=True)
    report.add_argument("--t", type=float, default=1.0, help="evolution time for gue ensembles")
    report.add_argument("--seed", type=int, default=0)
    report.add_argument("--trials", type=int, default=1)
    report.add_argument("--l1", action="store_true", help="also materialize the exact trace-norm distance")

    stats = sub.add_parser("haar-stats", help="closed-form Haar outcome statistics")
    stats.add_argument("--na", type=int, required=True)
    stats.add_argument("--nb", type=int, required=True)
    stats.add_argument("--k", type=int, required=True)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    run_experiment(cfg, threads=args.threads, quiet=args.quiet)
    return 0


def _cmd_bessel_roots(args) -> int:
    if args.count < 1:
        raise _ValidationError(f"--count must be >= 1, got {args.count}")
    for t in bessel_zero_times(args.count):
        print(f"{t:.12f}")
    return 0


def _cmd_wg_table(args) -> int:
    if args.degree < 1:
        raise _ValidationError(f"--degree must be >= 1, got {args.degree}")
    if args.dim < args.degree:
        raise _ValidationError(f"--dim must be >= degree (Gram matrix is singular below), got {args.dim}")
    table = weingarten_table(args.degree, args.dim)
    lines = ["q,N,cycle_type,value"]
    for ct in sorted(table.values, reverse=True):
        label = "+".join(map(str, ct))
        lines.append(f"{args.degree},{args.dim},{label},{table.values[ct]:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    if args.na < 1 or args.nb < 0:
        raise _ValidationError("--na must be >= 1 and --nb >= 0")
    if args.k < 1:
        raise _ValidationError(f"--k must be >= 1, got {args.k}")
    if args.trials < 1:
        raise _ValidationError(f"--trials must be >= 1, got {args.trials}")
    dims = DimensionSpec(args.na, args.nb)
    if args.ensemble == "haar":
        spec = GlobalEnsembleSpec(kind="haar_state", dims=dims)
    elif args.ensemble == "gue":
        spec = GlobalEnsembleSpec(kind="gue_evolution", dims=dims, t=args.t)
    else:
        spec = GlobalEnsembleSpec(kind="structured", dims=dims,
                                  spectrum=SpectrumSpec.zero_trace_paired(dims.dim))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    rows = []
    for _ in range(args.trials):
        phi = sample_global_state(spec, rng)
        ens = build_projected_ensemble(phi, dims)
        rows.append(design_report(ens, args.k, materialize_l1=args.l1))
    print("metric\tvalue")
    f_vals = np.array([r.frame_potential for r in rows])
    print(f"f_k\t{f_vals.mean():.12g}")
    if args.trials > 1:
        print(f"f_k_stderr\t{f_vals.std(ddof=1) / np.sqrt(args.trials):.12g}")
    print(f"f_haar\t{rows[0].haar_frame_potential:.12g}")
    print(f"delta\t{np.mean([r.delta for r in rows]):.12g}")
    if args.l1:
        print(f"l1_exact\t{np.mean([r.l1_exact for r in rows]):.12g}")
    return 0


def _cmd_haar_stats(args) -> int:
    if args.na < 1 or args.nb < 0 or args.k < 1:
        raise _ValidationError("require --na >= 1, --nb >= 0, --k >= 1")
    s = haar_statistics(args.na, args.nb, args.k)
    print("statistic\tvalue")
    print(f"mu_k\t{s.mu_k:.12g}")
    print(f"overlap_moment\t{s.overlap_moment:.12g}")
    print(f"jensen_gap\t{s.jensen_gap:.12g}")
    print(f"r_k\t{s.r_k:.12g}")
    print(f"delta_gap\t{s.delta_gap:.12g}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "bessel-roots": _cmd_bessel_roots,
    "wg-table": _cmd_wg_table,
    "report": _cmd_report,
    "haar-stats": _cmd_haar_stats,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ValidationError as exc:
        print(f"projens: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.subcommand](args)
    except (_ValidationError, ConfigError, ValueError) as exc:
        print(f"projens: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failure path
        print(f"projens: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
