"""Chronological validation folds.

The training data are cut into ``K`` consecutive segments of (almost) equal
row count. Under cross-validation each segment in turn is held out and a model
is trained on the rest. Under holdout a single model is trained on everything
except the chronological tail of every segment, and the ``K`` tails are the
validation sets.

``chronology="shuffled"`` permutes the rows with a seeded generator before
segmenting, which reproduces the conventional random-fold construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import TimeSeriesDataset

CV = "cv"
HOLDOUT = "holdout"
STRATEGIES = (CV, HOLDOUT)
CHRONOLOGICAL = "chronological"
SHUFFLED = "shuffled"
CHRONOLOGIES = (CHRONOLOGICAL, SHUFFLED)
DEFAULT_HOLDOUT_FRACTION = 0.3


class FoldError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Segmentation of a dataset into ``K`` validation segments.

    ``segments[k]`` lists row positions in segment order: chronological for
    chronological plans, permutation order for shuffled ones. ``boundaries``
    holds ``t_0 < ... < t_K`` for chronological plans and is ``None`` when
    the rows were shuffled.
    """

    strategy: str
    K: int
    segments: tuple[np.ndarray, ...]
    n_rows: int
    boundaries: tuple[float, ...] | None = None
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION
    chronology: str = CHRONOLOGICAL

    def holdout_tail(self, k: int) -> np.ndarray:
        seg = self.segments[k - 1]
        n_val = math.ceil(self.holdout_fraction * len(seg))
        return seg[len(seg) - n_val:]


@dataclass(frozen=True, eq=False)
class FoldSplit:
    train_indices: np.ndarray
    val_indices: tuple[np.ndarray, ...]


def plan_folds(
    dataset: TimeSeriesDataset,
    K: int,
    strategy: str = CV,
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION,
    chronology: str = CHRONOLOGICAL,
    seed: int = 0,
    boundaries: Sequence[float] | None = None,
) -> FoldPlan:
    """Split ``dataset`` into ``K`` segments.

    With explicit ``boundaries`` (``K + 1`` strictly increasing timestamps)
    segment ``k`` holds the rows with ``t_{k-1} <= t < t_k``; otherwise the
    segments have equal row counts, earlier segments taking the remainder.
    """
    if strategy not in STRATEGIES:
        raise FoldError(f"unknown strategy {strategy!r}")
    if chronology not in CHRONOLOGIES:
        raise FoldError(f"unknown chronology {chronology!r}")
    if K < 2:
        raise FoldError(f"K must be at least 2, got {K}")
    n = len(dataset)
    if n < 2 * K:
        raise FoldError(f"need at least {2 * K} rows for K={K}, got {n}")
    if strategy == HOLDOUT and not 0.0 < holdout_fraction < 1.0:
        raise FoldError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")

    ts = dataset.timestamps
    if boundaries is not None:
        if chronology != CHRONOLOGICAL:
            raise FoldError("explicit boundaries only apply to chronological plans")
        b = [float(v) for v in boundaries]
        if len(b) != K + 1 or any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise FoldError(f"need {K + 1} strictly increasing boundaries, got {b}")
        if ts[0] < b[0] or ts[-1] >= b[-1]:
            raise FoldError("boundaries do not cover every row")
        segments = tuple(
            np.flatnonzero((ts >= lo) & (ts < hi)) for lo, hi in zip(b, b[1:])
        )
        bounds: tuple[float, ...] | None = tuple(b)
    else:
        order = np.arange(n)
        if chronology == SHUFFLED:
            order = np.random.default_rng(seed).permutation(n)
        segments = tuple(np.array_split(order, K))
        bounds = None
        if chronology == CHRONOLOGICAL:
            starts = [float(ts[s[0]]) for s in segments]
            bounds = (*starts, float(np.nextafter(ts[-1], np.inf)))

    for k, seg in enumerate(segments, start=1):
        if len(seg) < 2:
            raise FoldError(f"segment {k} has {len(seg)} rows; need at least 2")
        if strategy == HOLDOUT and math.ceil(holdout_fraction * len(seg)) >= len(seg):
            raise FoldError(f"segment {k}: holdout tail would cover the whole segment")
    for seg in segments:
        seg.setflags(write=False)
    return FoldPlan(
        strategy=strategy,
        K=K,
        segments=segments,
        n_rows=n,
        boundaries=bounds,
        holdout_fraction=holdout_fraction,
        chronology=chronology,
    )


def cv_split(plan: FoldPlan, k: int) -> FoldSplit:
    """Validation = segment ``k`` (1-based), training = every other row."""
    if plan.strategy != CV:
        raise FoldError("cv_split needs a cv plan")
    if not 1 <= k <= plan.K:
        raise FoldError(f"fold index {k} outside 1..{plan.K}")
    val = np.sort(plan.segments[k - 1])
    mask = np.ones(plan.n_rows, dtype=bool)
    mask[val] = False
    return FoldSplit(np.flatnonzero(mask), (val,))


def holdout_split(plan: FoldPlan) -> FoldSplit:
    """Validation sets are the segment tails; training is everything else."""
    if plan.strategy != HOLDOUT:
        raise FoldError("holdout_split needs a holdout plan")
    vals = []
    mask = np.ones(plan.n_rows, dtype=bool)
    for k in range(1, plan.K + 1):
        tail = plan.holdout_tail(k)
        if len(tail) >= len(plan.segments[k - 1]):
            raise FoldError(f"segment {k}: validation tail covers the whole segment")
        mask[tail] = False
        vals.append(np.sort(tail))
    return FoldSplit(np.flatnonzero(mask), tuple(vals))


def splits(plan: FoldPlan) -> list[FoldSplit]:
    """All train/validation splits a configuration evaluation needs."""
    if plan.strategy == CV:
        return [cv_split(plan, k) for k in range(1, plan.K + 1)]
    return [holdout_split(plan)]
