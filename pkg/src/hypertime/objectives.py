"""Per-fold validation losses and their aggregation into objective vectors."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import learners
from .dataset import TimeSeriesDataset
from .folds import CV, FoldPlan, splits
from .learners import LearnerSpec

LEXI_AVG_WORST = "lexi_avg_then_worst"
LEXI_WORST_AVG = "lexi_worst_then_avg"
SINGLE_AVG = "single_avg"
SINGLE_WORST = "single_worst"
WEIGHTED = "weighted"
MODES = (LEXI_AVG_WORST, LEXI_WORST_AVG, SINGLE_AVG, SINGLE_WORST, WEIGHTED)
DEFAULT_WORST_WEIGHT = 0.01


class ObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveMode:
    """How fold losses become an objective vector.

    ``weight`` is the share given to the worst fold in ``weighted`` mode; the
    average gets ``1 - weight``.
    """

    kind: str
    weight: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in MODES:
            raise ObjectiveError(f"unknown objective mode {self.kind!r}")
        if self.kind == WEIGHTED:
            if self.weight is None or not 0.0 <= self.weight <= 1.0:
                raise ObjectiveError(f"weighted mode needs weight in [0, 1], got {self.weight}")
        elif self.weight is not None:
            raise ObjectiveError(f"{self.kind} takes no weight")

    @property
    def n_objectives(self) -> int:
        return 2 if self.kind in (LEXI_AVG_WORST, LEXI_WORST_AVG) else 1

    @classmethod
    def parse(cls, text: str) -> "ObjectiveMode":
        """Parse ``"lexi_avg_then_worst"`` or ``"weighted(0.05)"`` style names."""
        text = text.strip()
        m = re.fullmatch(r"weighted(?:\(\s*([^)]*)\s*\))?", text)
        if m:
            return cls(WEIGHTED, float(m.group(1)) if m.group(1) else DEFAULT_WORST_WEIGHT)
        return cls(text)

    def __str__(self) -> str:
        return f"{WEIGHTED}({self.weight!r})" if self.kind == WEIGHTED else self.kind


def check_fold_losses(fold_losses: Sequence[float]) -> np.ndarray:
    values = np.asarray(fold_losses, dtype=float).ravel()
    if values.size == 0:
        raise ObjectiveError("no fold losses to aggregate")
    if not np.all(np.isfinite(values)):
        raise ObjectiveError(f"non-finite fold loss in {values.tolist()}")
    if np.any(values < 0):
        raise ObjectiveError(f"negative fold loss in {values.tolist()}")
    return values


def aggregate(fold_losses: Sequence[float], mode: ObjectiveMode) -> tuple[float, ...]:
    values = check_fold_losses(fold_losses)
    avg = float(np.mean(values))
    worst = float(np.max(values))
    if mode.kind == LEXI_AVG_WORST:
        return (avg, worst)
    if mode.kind == LEXI_WORST_AVG:
        return (worst, avg)
    if mode.kind == SINGLE_AVG:
        return (avg,)
    if mode.kind == SINGLE_WORST:
        return (worst,)
    return ((1.0 - mode.weight) * avg + mode.weight * worst,)


@dataclass
class FoldEvaluator:
    """Callable mapping a configuration to its ``K`` validation losses.

    The splits are computed once. ``n_fits`` and ``n_scores`` count training
    runs and loss evaluations; ``rows_seen`` collects the provenance ids of
    every row that was read.
    """

    dataset: TimeSeriesDataset
    plan: FoldPlan
    learner: LearnerSpec
    metric: str = "mse"
    n_fits: int = 0
    n_scores: int = 0
    rows_seen: set = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.plan.n_rows != len(self.dataset):
            raise ObjectiveError(
                f"fold plan covers {self.plan.n_rows} rows, dataset has {len(self.dataset)}"
            )
        if self.metric not in learners.METRICS:
            raise ObjectiveError(f"unknown metric {self.metric!r}")
        self._splits = splits(self.plan)

    def __call__(self, config: Mapping[str, Any]) -> np.ndarray:
        ds = self.dataset
        out = []
        for split in self._splits:
            model = learners.train(
                self.learner, config, ds.features[split.train_indices],
                ds.labels[split.train_indices], ds.task,
            )
            self.n_fits += 1
            self.rows_seen.update(ds.row_ids[split.train_indices].tolist())
            for val in split.val_indices:
                out.append(learners.loss(model, ds.features[val], ds.labels[val], self.metric))
                self.n_scores += 1
                self.rows_seen.update(ds.row_ids[val].tolist())
        losses = np.array(out)
        if not np.all(np.isfinite(losses)):
            raise ObjectiveError(f"non-finite validation loss for {dict(config)}: {out}")
        return losses


def evaluate_config(
    config: Mapping[str, Any],
    dataset: TimeSeriesDataset,
    plan: FoldPlan,
    learner: LearnerSpec,
    metric: str = "mse",
) -> np.ndarray:
    """Fold losses of ``config``: ``K`` fits under cv, a single fit under holdout."""
    return FoldEvaluator(dataset, plan, learner, metric)(config)


def expected_fits(plan: FoldPlan) -> int:
    return plan.K if plan.strategy == CV else 1

