"""Command line entry point: ``randfeas <subcommand> ...``.

Exit codes: 0 success, 1 a verification check failed, 2 invalid config or
input data, 3 every replica (or grid cell) diverged, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..exceptions import AllDivergedError, ConfigError, DatasetError, OutputError, ParameterError
from .analysis import grid_search_primal_dual, verify_schedules
from .config import OUTPUT_DIR_ENV, load_config, resolve_output_dir
from .io import read_trace_csv, write_replica_csv, write_summary_json, write_trace_csv
from .plot import emit_plot_svg
from .reference import solve_reference, write_reference
from .runner import build_problem, run_experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_run(args):
    cfg = load_config(args.config)
    if args.per_replica:
        cfg.per_replica_csv = True
    out_dir = resolve_output_dir(cfg, args.out)
    trace = run_experiment(cfg, workers=args.workers)
    csv_path = out_dir / f"{cfg.name}.csv"
    write_trace_csv(trace, csv_path)
    if cfg.per_replica_csv:
        for r in trace.replicas:
            if not r.diverged:
                write_replica_csv(r, trace.f_star, out_dir / f"{cfg.name}_replica{r.replica:03d}.csv")
    write_summary_json(trace, out_dir / f"{cfg.name}_summary.json", {"config": cfg.raw})
    if args.plot:
        emit_plot_svg([(cfg.name, trace)], out_dir / f"{cfg.name}.svg", log_y=True)
    label = "f" if trace.gap_is_objective else "gap"
    final = f"{trace.mean_gap[-1]:.6g}" if len(trace) else "n/a"
    print(f"{csv_path}: {trace.replica_count} replica(s), final mean {label} {final}")
    if trace.diverged:
        print(f"diverged replicas excluded: {trace.diverged}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    report = verify_schedules(args.q, draws=args.draws, sum_terms=args.terms, seed=args.seed)
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {args.out}: {exc}") from None
    n_fail = sum(not e["passed"] for e in report["expectations"] + report["sum_bounds"])
    total = len(report["expectations"]) + len(report["sum_bounds"])
    print(f"schedule checks: {total - n_fail}/{total} passed")
    for e in report["expectations"] + report["sum_bounds"]:
        if not e["passed"]:
            print(f"FAILED: {json.dumps(e, sort_keys=True)}")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_grid(args):
    cfg = load_config(args.config)
    result = grid_search_primal_dual(cfg)
    _print_json(result.to_dict())
    return EXIT_OK


def cmd_plot(args):
    traces = [(Path(p).stem, read_trace_csv(p)) for p in args.csv]
    emit_plot_svg(traces, args.out, log_y=args.log_y, column=args.column)
    print(args.out)
    return EXIT_OK


def cmd_reference(args):
    cfg = load_config(args.config)
    if cfg.problem["type"] != "qcqp":
        raise ConfigError("reference-solve needs a qcqp problem", path=("problem", "type"))
    built = build_problem(cfg, use_reference=False)
    record = solve_reference(built.instance, {"seed": cfg.seed})
    out = args.out
    if out is None:
        out = resolve_output_dir(cfg) / f"{cfg.name}_reference.json"
    write_reference(out, record)
    print(f"{out}: f* = {record['f_star']:.17g} (max violation {record['max_violation']:.3g})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="randfeas",
        description="Randomized-feasibility solver experiments.",
        epilog=f"Default output directory: ${OUTPUT_DIR_ENV}, else ./randfeas-out.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write the aggregate CSV")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=None, help="replica worker processes")
    p.add_argument("--per-replica", action="store_true", help="also write one CSV per replica")
    p.add_argument("--plot", action="store_true", help="also write an SVG of the gap curve")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-schedules", help="check schedule expectations and sum bounds")
    p.add_argument("--q", type=float, nargs="+", default=[0.1, 0.5, 0.75])
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--terms", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("grid-search", help="cross-validate primal-dual stepsizes on an SVM config")
    p.add_argument("config")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("plot", help="plot trace CSVs to SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--log-y", action="store_true")
    p.add_argument("--column", default="gap", help="gap, infeas or step")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reference-solve", help="store a high-accuracy f* for a QCQP config")
    p.add_argument("config")
    p.add_argument("--out", help="reference JSON path")
    p.set_defaults(func=cmd_reference)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AllDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OutputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
