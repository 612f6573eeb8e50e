"""TOML experiment configuration.

Grammar (every table optional unless noted)::

    name = "my-run"                     # label for single-method runs

    [data]                              # required; exactly one source
    scenario = "benchmark"              # or a path to a scenario JSON file
    csv = "train.csv"                   # CSV with a ``timestamp`` column
    label_column = "label"
    task = "regression"                 # or "binary_classification"
    n_rows = 4000                       # benchmark only
    seed = 2024                         # benchmark only

    [learner]                           # required
    family = "ridge"                    # ridge | knn | boosted_stumps
    [learner.fixed]                     # values held fixed during tuning
    standardize = true

    [[space]]                           # required; one table per tunable
    name = "alpha"
    kind = "continuous"                 # continuous | integer | categorical
    lower = 1e-3
    upper = 1e5
    log_scale = true

    [folds]
    k = 4
    strategy = "cv"                     # cv | holdout
    chronology = "chronological"        # chronological | shuffled
    holdout_fraction = 0.3
    boundaries = [0, 700, 1400, 2100, 2800]  # optional: K + 1 timestamps

    [optimizer]
    budget = 150
    kappa = ["1%", "0%"]                # percentages or plain fractions
    delta_init = 0.25
    delta_lower = 0.0009765625
    select = "online"                   # online | posthoc

    [experiment]
    variant = "hypertime"
    metric = "mse"                      # mse | rmse | zero_one
    seeds = [0, 1, 2, 3, 4]
    final_fit = "full"                  # full | train_only

    [test]
    fraction = 0.3
    n_folds = 4
    path = "test.csv"                   # optional explicit test data

    [[methods]]                         # bench only; one table per method
    variant = "cfo_avg"
    name = "cfo_avg_shuffled"           # optional
    chronology = "shuffled"             # optional per-method override

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import drift
from .experiment import DataSource, ExperimentConfig, ExperimentError, FoldSettings, TestSettings
from .learners import LearnerSpec
from .lexiflow import OptimizerParams
from .search_space import SearchSpace

BENCHMARK = "benchmark"
_SECTIONS = {"name", "data", "learner", "space", "folds", "optimizer", "experiment", "test", "methods"}


class ConfigError(ValueError):
    pass


def parse_kappa(values: Sequence[Any] | str) -> tuple[float, ...]:
    """``["1%", "0%"]``, ``"1%,0%"`` or ``[0.01, 0]`` -> fractions."""
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    out = []
    for v in values:
        if isinstance(v, bool):
            raise ConfigError(f"bad kappa entry {v!r}")
        if isinstance(v, (int, float)):
            out.append(float(v))
            continue
        text = str(v).strip()
        try:
            out.append(float(text[:-1]) / 100.0 if text.endswith("%") else float(text))
        except ValueError:
            raise ConfigError(f"bad kappa entry {v!r}") from None
    if not out or any(k < 0 for k in out):
        raise ConfigError(f"kappa must be a non-empty list of non-negative tolerances, got {values!r}")
    return tuple(out)


@dataclass
class ConfigFile:
    """A parsed config: the base experiment plus any ``[[methods]]`` overrides."""

    base: ExperimentConfig
    methods: list[dict[str, Any]] = field(default_factory=list)

    def method_configs(self) -> list[ExperimentConfig]:
        if not self.methods:
            return [self.base]
        return [apply_method(self.base, m) for m in self.methods]


def apply_method(base: ExperimentConfig, method: Mapping[str, Any]) -> ExperimentConfig:
    unknown = set(method) - {"variant", "name", "chronology", "strategy"}
    if unknown:
        raise ConfigError(f"unknown keys in [[methods]]: {sorted(unknown)}")
    if "variant" not in method:
        raise ConfigError("each [[methods]] entry needs a variant")
    folds = base.folds
    for key in ("chronology", "strategy"):
        if key in method:
            folds = replace(folds, **{key: method[key]})
    return _build(replace, base, variant=method["variant"], name=method.get("name"), folds=folds)


def _build(factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError, ExperimentError) as exc:
        raise ConfigError(str(exc)) from exc


def _table(doc: Mapping[str, Any], key: str, allowed: set[str], required: bool = False) -> dict[str, Any]:
    if key not in doc:
        if required:
            raise ConfigError(f"missing [{key}] section")
        return {}
    tbl = doc[key]
    if not isinstance(tbl, dict):
        raise ConfigError(f"[{key}] must be a table")
    unknown = set(tbl) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
    return dict(tbl)


def _data_source(tbl: dict[str, Any], root: Path) -> DataSource:
    has_scenario, has_csv = "scenario" in tbl, "csv" in tbl
    if has_scenario == has_csv:
        raise ConfigError("[data] needs exactly one of 'scenario' and 'csv'")
    label = tbl.get("label_column", "label")
    task = tbl.get("task", "regression")
    if has_csv:
        return _build(DataSource, path=str(root / tbl["csv"]), label_column=label, task=task)
    if tbl["scenario"] == BENCHMARK:
        kwargs = {k: int(tbl[k]) for k in ("n_rows", "seed") if k in tbl}
        scenario = _build(drift.benchmark_scenario, **kwargs)
    else:
        try:
            scenario = drift.DriftScenario.load(root / tbl["scenario"])
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return _build(DataSource, scenario=scenario, label_column=label, task=scenario.task)


def from_dict(doc: Mapping[str, Any], root: str | Path = ".") -> ConfigFile:
    root = Path(root)
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    data = _table(doc, "data", {"scenario", "csv", "label_column", "task", "n_rows", "seed"}, required=True)
    learner = _table(doc, "learner", {"family", "fixed"}, required=True)
    folds = _table(doc, "folds", {f.name for f in dataclasses.fields(FoldSettings)})
    opt = _table(doc, "optimizer", {"budget", "kappa", "delta_init", "delta_lower", "delta_restart_step", "select"})
    exp = _table(doc, "experiment", {"variant", "metric", "seeds", "final_fit", "name"})
    test = _table(doc, "test", {"fraction", "n_folds", "path"})
    space = doc.get("space")
    if not space or not isinstance(space, list):
        raise ConfigError("at least one [[space]] entry is required")
    methods = doc.get("methods", [])
    if not isinstance(methods, list):
        raise ConfigError("[[methods]] must be an array of tables")

    if "family" not in learner:
        raise ConfigError("[learner] needs a family")
    if "kappa" in opt:
        opt["kappa"] = parse_kappa(opt["kappa"])
    if "boundaries" in folds:
        folds["boundaries"] = tuple(float(b) for b in folds["boundaries"])
    if "path" in test:
        test["path"] = str(root / test["path"])
    if "seeds" in exp:
        exp["seeds"] = tuple(int(s) for s in exp["seeds"])

    base = _build(
        ExperimentConfig,
        data=_data_source(data, root),
        learner=_build(LearnerSpec, learner["family"], learner.get("fixed", {})),
        space=_build(SearchSpace.from_entries, space),
        folds=_build(FoldSettings, **folds),
        optimizer=_build(OptimizerParams, **opt),
        name=exp.pop("name", doc.get("name")),
        test=_build(TestSettings, **test),
        **exp,
    )
    cf = ConfigFile(base, [dict(m) for m in methods])
    cf.method_configs()  # validate every method up front
    return cf


def loads(text: str, root: str | Path = ".") -> ConfigFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return from_dict(doc, root)


def load(path: str | Path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text, path.parent)


def default_benchmark_text() -> str:
    return resources.files("hypertime").joinpath("data/benchmark.toml").read_text()


def default_benchmark() -> ConfigFile:
    return loads(default_benchmark_text())
