"""Command-line entry point: ``hypertime {gen-data,tune,bench,report}``.

Exit codes: 0 on success, 1 on a configuration or usage error, 2 when a run
fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds, config as cfgmod, drift
from .dataset import write_csv
from .experiment import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    compare_methods,
    format_table,
    report_emit,
    run_experiment,
)
from .lexiflow import Trace, incumbent_path
from .search_space import CONTINUOUS, SearchSpace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("hypertime")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML experiment config (default: shipped benchmark)")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="run a single seed")
    seeds.add_argument("--seeds", type=_int_list, help="comma-separated seeds")
    p.add_argument("--budget", type=int, help="evaluations per tuning run")
    p.add_argument("--strategy", choices=("cv", "holdout"))
    p.add_argument("--k", type=int, help="number of validation folds")
    p.add_argument("--kappa", help="tolerances, e.g. '1%%,0%%'")
    p.add_argument("--select", choices=("online", "posthoc"))
    p.add_argument("--final-fit", choices=("full", "train_only"))
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypertime", description="Drift-robust lexicographic hyperparameter tuning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a drift scenario as CSV plus a scenario JSON sidecar")
    g.add_argument("--scenario", default="benchmark", help="scenario JSON path or 'benchmark'")
    g.add_argument("--n-rows", type=int, help="benchmark row count")
    g.add_argument("--seed", type=int, help="override the scenario seed")
    g.add_argument("--out", type=Path, required=True, help="CSV path to write")

    t = sub.add_parser("tune", help="run one method over the configured seeds")
    _add_run_flags(t)
    t.add_argument("--variant", help="method variant, e.g. hypertime or cfo_weighted(0.05)")

    b = sub.add_parser("bench", help="compare the configured methods on one train/test split")
    _add_run_flags(b)
    b.add_argument("--variant", action="append", help="restrict to these method names (repeatable)")
    b.add_argument("--theorem", action="store_true", help="also compute the test-loss bound table")
    b.add_argument("--grid-size", type=int, default=50, help="configurations in the bound check grid")
    b.add_argument("--draws", type=int, default=200, help="resampled test periods in the bound check")
    b.add_argument("--epsilon", type=float, default=0.05)

    r = sub.add_parser("report", help="re-render a saved run directory")
    r.add_argument("run_dir", type=Path)
    r.add_argument("--out", type=Path, help="rewrite summary.csv and per_fold.csv here")
    return parser


def _load_config(args) -> cfgmod.ConfigFile:
    cf = cfgmod.load(args.config) if args.config else cfgmod.default_benchmark()
    seeds = [args.seed] if args.seed is not None else args.seeds
    kappa = cfgmod.parse_kappa(args.kappa) if args.kappa else None

    def override(c: ExperimentConfig) -> ExperimentConfig:
        folds, opt, changes = c.folds, c.optimizer, {}
        if args.strategy:
            folds = replace(folds, strategy=args.strategy)
        if args.k is not None:
            folds = replace(folds, k=args.k)
        if args.budget is not None:
            opt = replace(opt, budget=args.budget)
        if kappa is not None:
            opt = replace(opt, kappa=kappa)
        if args.select:
            opt = replace(opt, select=args.select)
        if seeds:
            changes["seeds"] = tuple(seeds)
        if args.final_fit:
            changes["final_fit"] = args.final_fit
        return replace(c, folds=folds, optimizer=opt, **changes)

    try:
        base = override(cf.base)
        return cfgmod.ConfigFile(base, cf.methods)
    except (ValueError, TypeError, ExperimentError) as exc:
        raise cfgmod.ConfigError(str(exc)) from exc


def _emit(report: ExperimentReport, out: Path | None) -> None:
    print(format_table(report))
    if out is not None:
        report_emit(report, out)
        print(f"wrote {out}")


def cmd_gen_data(args) -> int:
    try:
        if args.scenario == cfgmod.BENCHMARK:
            kwargs = {"n_rows": args.n_rows} if args.n_rows else {}
            scenario = drift.benchmark_scenario(**kwargs)
        else:
            scenario = drift.DriftScenario.load(args.scenario)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
    except (OSError, ValueError) as exc:
        raise cfgmod.ConfigError(str(exc)) from exc
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(drift.generate(scenario), args.out)
    sidecar = args.out.with_suffix(".scenario.json")
    scenario.save(sidecar)
    print(f"wrote {args.out} and {sidecar}")
    return EXIT_OK


def cmd_tune(args) -> int:
    cf = _load_config(args)
    config = cf.base
    if args.variant:
        config = cfgmod.apply_method(config, {"variant": args.variant})
    elif cf.methods:
        config = cf.method_configs()[0]
    _emit(run_experiment(config), args.out)
    return EXIT_OK


def theorem_grid(space: SearchSpace, n: int) -> list[dict]:
    """Sweep the first continuous parameter across its range; others sit at their midpoint."""
    names = [name for name, d in space.params.items() if d.kind == CONTINUOUS]
    if not names:
        raise cfgmod.ConfigError("the bound check needs a continuous parameter to sweep")
    mid = space.encode(space.midpoint())
    j = space.names.index(names[0])
    grid = []
    for u in np.linspace(0.0, 1.0, n):
        v = mid.copy()
        v[j] = u
        grid.append(space.decode(v))
    return grid


def theorem_table(config: ExperimentConfig, n_grid: int, n_draws: int, epsilon: float) -> str:
    if config.data.scenario is None:
        raise cfgmod.ConfigError("--theorem needs a synthetic scenario as the data source")
    check = bounds.theorem_check(
        config.data.scenario,
        config.learner,
        theorem_grid(config.space, n_grid),
        K=config.folds.k,
        test_fraction=config.test.fraction,
        epsilon=epsilon,
        n_draws=n_draws,
        metric=config.metric,
        seed=config.seeds[0],
    )
    row = check.as_row()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(row))
    w.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
    return buf.getvalue()


def cmd_bench(args) -> int:
    cf = _load_config(args)
    configs = cf.method_configs()
    if args.variant:
        wanted = set(args.variant)
        configs = [c for c in configs if c.label in wanted]
        missing = wanted - {c.label for c in configs}
        if missing:
            raise cfgmod.ConfigError(f"no configured methods named {sorted(missing)}")
    _emit(compare_methods(configs), args.out)
    if args.theorem:
        table = theorem_table(cf.base, args.grid_size, args.draws, args.epsilon)
        print(table, end="")
        if args.out is not None:
            (args.out / "bound.csv").write_text(table)
    return EXIT_OK


def cmd_report(args) -> int:
    path = args.run_dir / "report.json"
    try:
        report = ExperimentReport.from_dict(json.loads(path.read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise cfgmod.ConfigError(f"cannot read {path}: {exc}") from exc
    print(format_table(report))
    for trace_file in sorted((args.run_dir / "traces").glob("*.jsonl")):
        trace = Trace.from_jsonl(trace_file.read_text())
        path_ = incumbent_path(trace)
        final = path_[-1] if path_ else None
        summary = f"{final.config} {list(final.objectives)}" if final else "no incumbent"
        print(f"{trace_file.stem}: {len(trace)} evaluations, {len(path_)} incumbent updates, final {summary}")
    if args.out is not None:
        report_emit(report, args.out, formats=("csv",))
        print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {"gen-data": cmd_gen_data, "tune": cmd_tune, "bench": cmd_bench, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"hypertime: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except cfgmod.ConfigError as exc:
        print(f"hypertime: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"hypertime: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
