"""Tune, refit and score on chronological test folds; compare methods.

A *method* is a tuning variant plus the fold construction it validates on.
For each seed the pipeline plans the validation folds, tunes, refits the
chosen configuration and records its loss on every test fold. Reports carry
the mean test loss, the worst test fold loss and the number of test folds
each method wins.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import drift, learners
from .dataset import REGRESSION, TimeSeriesDataset, read_csv
from .folds import CHRONOLOGICAL, CHRONOLOGIES, CV, STRATEGIES, DEFAULT_HOLDOUT_FRACTION, holdout_split, plan_folds, splits
from .learners import LearnerSpec
from .lexiflow import LexiFlow, OptimizerParams, Trace, random_search
from .objectives import (
    LEXI_AVG_WORST,
    LEXI_WORST_AVG,
    SINGLE_AVG,
    SINGLE_WORST,
    WEIGHTED,
    FoldEvaluator,
    ObjectiveMode,
)
from .search_space import SearchSpace

log = logging.getLogger(__name__)

HYPERTIME = "hypertime"
HYPERTIME_REVERSE = "hypertime_reverse"
CFO_AVG = "cfo_avg"
CFO_WORST = "cfo_worst"
CFO_WEIGHTED = "cfo_weighted"
RANDOM_SEARCH = "random_search"
VARIANTS = (HYPERTIME, HYPERTIME_REVERSE, CFO_AVG, CFO_WORST, CFO_WEIGHTED, RANDOM_SEARCH)

_VARIANT_MODES = {
    HYPERTIME: LEXI_AVG_WORST,
    HYPERTIME_REVERSE: LEXI_WORST_AVG,
    CFO_AVG: SINGLE_AVG,
    CFO_WORST: SINGLE_WORST,
    RANDOM_SEARCH: LEXI_AVG_WORST,
}
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


class ExperimentError(RuntimeError):
    pass


def variant_mode(variant: str) -> ObjectiveMode:
    """Objective mode behind a variant name such as ``cfo_weighted(0.05)``."""
    m = re.fullmatch(r"cfo_weighted(?:\(\s*([^)]*)\s*\))?", variant.strip())
    if m:
        return ObjectiveMode(WEIGHTED, float(m.group(1)) if m.group(1) else 0.01)
    if variant not in _VARIANT_MODES:
        raise ExperimentError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return ObjectiveMode(_VARIANT_MODES[variant])


@dataclass(frozen=True)
class DataSource:
    """Exactly one of ``path`` and ``scenario``."""

    path: str | None = None
    scenario: drift.DriftScenario | None = None
    label_column: str = "label"
    task: str = REGRESSION

    def __post_init__(self) -> None:
        if (self.path is None) == (self.scenario is None):
            raise ExperimentError("data source needs exactly one of path and scenario")

    def load(self) -> TimeSeriesDataset:
        if self.scenario is not None:
            return drift.generate(self.scenario)
        return read_csv(self.path, self.label_column, self.task)


@dataclass(frozen=True)
class FoldSettings:
    k: int = 4
    strategy: str = CV
    chronology: str = CHRONOLOGICAL
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION
    boundaries: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ExperimentError(f"unknown fold strategy {self.strategy!r}")
        if self.chronology not in CHRONOLOGIES:
            raise ExperimentError(f"unknown chronology {self.chronology!r}")
        if self.k < 1:
            raise ExperimentError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class TestSettings:
    __test__ = False

    fraction: float = 0.3
    n_folds: int = 4
    path: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction < 1.0:
            raise ExperimentError(f"test fraction must lie in (0, 1), got {self.fraction}")
        if self.n_folds < 1:
            raise ExperimentError("n_folds must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSource
    learner: LearnerSpec
    space: SearchSpace
    folds: FoldSettings = FoldSettings()
    optimizer: OptimizerParams = OptimizerParams()
    variant: str = HYPERTIME
    name: str | None = None
    metric: str = "mse"
    test: TestSettings = TestSettings()
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    final_fit: str = "full"

    def __post_init__(self) -> None:
        variant_mode(self.variant)
        if self.final_fit not in ("full", "train_only"):
            raise ExperimentError(f"final_fit must be 'full' or 'train_only', got {self.final_fit!r}")
        if self.metric not in learners.METRICS:
            raise ExperimentError(f"unknown metric {self.metric!r}")
        if not self.seeds:
            raise ExperimentError("at least one seed is required")
        self.learner.check_tunables(self.space.names)

    @property
    def label(self) -> str:
        return self.name or self.variant

    def load_splits(self) -> tuple[TimeSeriesDataset, list[TimeSeriesDataset]]:
        dataset = self.data.load()
        if self.test.path is not None:
            test = read_csv(self.test.path, self.data.label_column, self.data.task)
            if test.timestamps.min() <= dataset.timestamps.max():
                raise ExperimentError("test data must start after the training data ends")
            # give test rows their own provenance ids
            test = replace(test, row_ids=np.arange(len(test)) + int(dataset.row_ids.max()) + 1)
            idx = np.array_split(np.arange(len(test)), self.test.n_folds)
            if any(len(i) == 0 for i in idx):
                raise ExperimentError("too few test rows for the requested test folds")
            return dataset, [test.subset(i) for i in idx]
        return drift.split_train_test(dataset, self.test.fraction, self.test.n_folds)


@dataclass
class SeedResult:
    seed: int
    config: dict
    objectives: tuple[float, ...]
    test_losses: list[float]
    trace: Trace
    n_evaluations: int

    @property
    def test_average(self) -> float:
        return float(np.mean(self.test_losses))

    @property
    def test_worst(self) -> float:
        return float(np.max(self.test_losses))


@dataclass
class MethodResult:
    name: str
    variant: str
    chronology: str
    seeds: list[SeedResult] = field(default_factory=list)
    wins: int = 0

    def _stat(self, values: list[float]) -> tuple[float, float]:
        arr = np.array(values)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return float(arr.mean()), std

    @property
    def test_average(self) -> float:
        return self._stat([s.test_average for s in self.seeds])[0]

    @property
    def test_average_std(self) -> float:
        return self._stat([s.test_average for s in self.seeds])[1]

    @property
    def test_worst(self) -> float:
        return self._stat([s.test_worst for s in self.seeds])[0]

    @property
    def test_worst_std(self) -> float:
        return self._stat([s.test_worst for s in self.seeds])[1]

    @property
    def fold_losses(self) -> np.ndarray:
        """Seeds x test folds."""
        return np.array([s.test_losses for s in self.seeds])

    @property
    def fold_mean(self) -> np.ndarray:
        return self.fold_losses.mean(axis=0)

    @property
    def fold_std(self) -> np.ndarray:
        fl = self.fold_losses
        return fl.std(axis=0, ddof=1) if fl.shape[0] > 1 else np.zeros(fl.shape[1])


@dataclass
class ExperimentReport:
    methods: list[MethodResult]
    n_test_folds: int

    def method(self, name: str) -> MethodResult:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_test_folds": self.n_test_folds,
            "methods": [
                {
                    "name": m.name,
                    "variant": m.variant,
                    "chronology": m.chronology,
                    "test_average": m.test_average,
                    "test_average_std": m.test_average_std,
                    "test_worst": m.test_worst,
                    "test_worst_std": m.test_worst_std,
                    "wins": m.wins,
                    "fold_mean": m.fold_mean.tolist(),
                    "fold_std": m.fold_std.tolist(),
                    "seeds": [
                        {
                            "seed": s.seed,
                            "config": s.config,
                            "objectives": list(s.objectives),
                            "test_losses": s.test_losses,
                            "n_evaluations": s.n_evaluations,
                        }
                        for s in m.seeds
                    ],
                }
                for m in self.methods
            ],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentReport":
        methods = []
        for md in d["methods"]:
            seeds = [
                SeedResult(s["seed"], s["config"], tuple(s["objectives"]), list(s["test_losses"]),
                           Trace(), s["n_evaluations"])
                for s in md["seeds"]
            ]
            methods.append(MethodResult(md["name"], md["variant"], md["chronology"], seeds, md["wins"]))
        return cls(methods, d["n_test_folds"])


def winning_counts(fold_means: Sequence[Sequence[float]]) -> list[int]:
    """Per method, the number of folds where it attains the (tie-inclusive) minimum."""
    arr = np.asarray(fold_means, dtype=float)
    best = arr.min(axis=0)
    return [int(np.count_nonzero(row == best)) for row in arr]


# -- pipeline ---------------------------------------------------------------


def _fit_final(config: ExperimentConfig, train: TimeSeriesDataset, plan, chosen: dict):
    spec, task = config.learner, train.task
    if config.final_fit == "full":
        model = learners.train(spec, chosen, train.features, train.labels, task)
        return model.predict
    if plan.strategy != CV:
        idx = holdout_split(plan).train_indices
        model = learners.train(spec, chosen, train.features[idx], train.labels[idx], task)
        return model.predict
    # cv without refit: average the fold models
    models = [
        learners.train(spec, chosen, train.features[s.train_indices], train.labels[s.train_indices], task)
        for s in splits(plan)
    ]
    return lambda X: np.mean([m.predict(X) for m in models], axis=0)


def run_seed(
    config: ExperimentConfig,
    train: TimeSeriesDataset,
    tests: list[TimeSeriesDataset],
    seed: int,
) -> SeedResult:
    stage = "folds"
    try:
        fs = config.folds
        plan = plan_folds(train, fs.k, fs.strategy, fs.holdout_fraction, fs.chronology,
                          seed=seed, boundaries=fs.boundaries)
        stage = "tuning"
        evaluator = FoldEvaluator(train, plan, config.learner, config.metric)
        params = replace(config.optimizer, mode=variant_mode(config.variant), seed=seed)
        if config.variant == RANDOM_SEARCH:
            chosen, vector, trace = random_search(config.space, evaluator, params)
        else:
            chosen, vector, trace = LexiFlow(config.space, evaluator, params).run()
        stage = "leakage check"
        check_no_leakage(evaluator.rows_seen, train, tests)
        stage = "final fit"
        predict = _fit_final(config, train, plan, chosen)
        stage = "test scoring"
        losses = [learners.score(predict(t.features), t.labels, config.metric) for t in tests]
    except Exception as exc:
        raise ExperimentError(f"{config.label}: seed {seed}, stage {stage}: {exc}") from exc
    log.info("%s seed=%d config=%s test=%s", config.label, seed, chosen, losses)
    return SeedResult(seed, chosen, tuple(vector), losses, trace, len(trace))


def _run_method(config: ExperimentConfig, train, tests) -> MethodResult:
    result = MethodResult(config.label, config.variant, config.folds.chronology)
    for seed in config.seeds:
        result.seeds.append(run_seed(config, train, tests, seed))
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run one method over all seeds."""
    train, tests = config.load_splits()
    report = ExperimentReport([_run_method(config, train, tests)], len(tests))
    _assign_wins(report)
    return report


def compare_methods(configs: Sequence[ExperimentConfig]) -> ExperimentReport:
    """Run several methods on one shared train/test split and count fold wins."""
    if not configs:
        raise ExperimentError("no methods to compare")
    names = [c.label for c in configs]
    if len(set(names)) != len(names):
        raise ExperimentError(f"method names must be unique: {names}")
    seeds = {tuple(c.seeds) for c in configs}
    if len(seeds) != 1:
        raise ExperimentError("all methods must share the same seeds")
    shared = None
    methods = []
    for config in configs:
        train, tests = config.load_splits()
        key = (_fingerprint(train), tuple(_fingerprint(t) for t in tests))
        if shared is None:
            shared = key
        elif key != shared:
            raise ExperimentError(f"{config.label}: train/test split differs from the other methods")
        methods.append(_run_method(config, train, tests))
    report = ExperimentReport(methods, len(tests))
    _assign_wins(report)
    return report


def check_no_leakage(rows_seen: set, train: TimeSeriesDataset, tests: Sequence[TimeSeriesDataset]) -> None:
    """Tuning may only touch training rows."""
    stray = rows_seen - set(train.row_ids.tolist())
    test_ids = set().union(*(t.row_ids.tolist() for t in tests))
    if stray or rows_seen & test_ids:
        raise ExperimentError(f"tuning read {len(stray | (rows_seen & test_ids))} rows outside the training data")


def _fingerprint(ds: TimeSeriesDataset) -> tuple:
    return (len(ds), ds.row_ids.tobytes(), ds.labels.tobytes(), ds.features.tobytes())


def _assign_wins(report: ExperimentReport) -> None:
    counts = winning_counts([m.fold_mean for m in report.methods])
    for m, c in zip(report.methods, counts):
        m.wins = c


# -- output -----------------------------------------------------------------


def _f(x: float) -> str:
    return repr(float(x))


def summary_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "test_average", "test_worst", "test_average_std", "test_worst_std", "wn"])
    for m in report.methods:
        w.writerow([m.name, _f(m.test_average), _f(m.test_worst),
                    _f(m.test_average_std), _f(m.test_worst_std), m.wins])
    return buf.getvalue()


def per_fold_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "fold", "mean_loss", "std"])
    for m in report.methods:
        for k, (mu, sd) in enumerate(zip(m.fold_mean, m.fold_std), start=1):
            w.writerow([m.name, k, _f(mu), _f(sd)])
    return buf.getvalue()


def report_emit(report: ExperimentReport, out_dir: str | Path, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write ``summary.csv``, ``per_fold.csv``, ``report.json`` and per-seed traces."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            for name, text in (("summary.csv", summary_csv(report)), ("per_fold.csv", per_fold_csv(report))):
                (out / name).write_text(text)
                written.append(out / name)
        if "json" in formats:
            path = out / "report.json"
            path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
            written.append(path)
        traces = out / "traces"
        for m in report.methods:
            for s in m.seeds:
                if not len(s.trace):
                    continue
                traces.mkdir(exist_ok=True)
                path = traces / f"{_safe(m.name)}_seed{s.seed}.jsonl"
                path.write_text(s.trace.to_jsonl())
                written.append(path)
    except OSError as exc:
        raise ExperimentError(f"cannot write report to {out}: {exc}") from exc
    return written


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def format_table(report: ExperimentReport) -> str:
    rows = [("method", "test_average", "test_worst", "WN")]
    for m in report.methods:
        rows.append((
            m.name,
            f"{m.test_average:.5f} ({m.test_average_std:.5f})",
            f"{m.test_worst:.5f} ({m.test_worst_std:.5f})",
            str(m.wins),
        ))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)

