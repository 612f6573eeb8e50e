"""Lexicographic comparison of objective vectors.

Two families of relations live here. The plain relation compares vectors
priority by priority and lets a later objective matter only on exact ties.
The targeted relation additionally treats two values at a level as tied when
both are at or below that level's target ``z``; targets come from the
evaluated history, each one a relative tolerance ``kappa`` above the best
value among the points that survived the previous levels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence, TypeVar

Vector = Sequence[float]
T = TypeVar("T")


class LexicoError(ValueError):
    pass


class Ordering(enum.IntEnum):
    BETTER = -1
    EQUAL = 0
    WORSE = 1

    def flipped(self) -> "Ordering":
        return Ordering(-int(self))


def _check_lengths(*vectors: Vector) -> int:
    lengths = {len(v) for v in vectors}
    if len(lengths) != 1:
        raise LexicoError(f"vector lengths differ: {sorted(lengths)}")
    (n,) = lengths
    if n == 0:
        raise LexicoError("empty objective vector")
    return n


def lexi_compare(a: Vector, b: Vector) -> Ordering:
    """Plain lexicographic order: the first differing level decides."""
    _check_lengths(a, b)
    for x, y in zip(a, b):
        if x < y:
            return Ordering.BETTER
        if x > y:
            return Ordering.WORSE
    return Ordering.EQUAL


def lexi_better(a: Vector, b: Vector) -> bool:
    return lexi_compare(a, b) is Ordering.BETTER


def compute_targets(vectors: Sequence[Vector], kappa: Sequence[float]) -> tuple[float, ...]:
    """Targets ``z`` from the evaluated history.

    Level ``i`` takes the minimum of objective ``i`` over the entries that
    survived levels ``1..i-1``, scales it by ``1 + kappa[i]``, and keeps only
    the entries at or below the result for the next level.
    """
    if not vectors:
        raise LexicoError("cannot compute targets from an empty history")
    n = _check_lengths(*vectors)
    if len(kappa) != n:
        raise LexicoError(f"kappa has {len(kappa)} entries for {n} objectives")
    survivors = list(vectors)
    targets = []
    for i, tol in enumerate(kappa):
        best = min(v[i] for v in survivors)
        z = best * (1.0 + tol)
        targets.append(z)
        survivors = [v for v in survivors if v[i] <= z]
    return tuple(targets)


def targeted_compare(a: Vector, b: Vector, targets: Vector) -> Ordering:
    """Targeted lexicographic order.

    A level ties when the values are equal or both are within the target;
    the first level that does not tie decides in favour of the smaller value.
    """
    _check_lengths(a, b, targets)
    for x, y, z in zip(a, b, targets):
        if x == y or (x <= z and y <= z):
            continue
        return Ordering.BETTER if x < y else Ordering.WORSE
    return Ordering.EQUAL


def tier_filter(vectors: Sequence[Vector], kappa: Sequence[float]) -> list[int]:
    """Indices surviving every tolerance tier over a finite point set."""
    if not vectors:
        raise LexicoError("empty point set")
    n = _check_lengths(*vectors)
    if len(kappa) != n:
        raise LexicoError(f"kappa has {len(kappa)} entries for {n} objectives")
    keep = list(range(len(vectors)))
    for i, tol in enumerate(kappa):
        best = min(vectors[j][i] for j in keep)
        keep = [j for j in keep if vectors[j][i] <= best * (1.0 + tol)]
    return keep


def lexi_optimal_indices(vectors: Sequence[Vector], kappa: Sequence[float]) -> list[int]:
    """Positions of the lexi-optimal points.

    Within the final tier the points minimizing the last objective win; among
    those, only the lexicographically smallest vectors are kept, so no
    returned point is plainly worse than another.
    """
    tier = tier_filter(vectors, kappa)
    last = min(vectors[j][-1] for j in tier)
    best = [j for j in tier if vectors[j][-1] == last]
    smallest = min(tuple(vectors[j]) for j in best)
    return [j for j in best if tuple(vectors[j]) == smallest]


def lexi_optimal_set(points: Sequence[tuple[T, Vector]], kappa: Sequence[float]) -> list[T]:
    """Lexi-optimal configurations among ``(config, vector)`` pairs, in input order."""
    if not points:
        raise LexicoError("empty point set")
    idx = lexi_optimal_indices([v for _, v in points], kappa)
    return [points[j][0] for j in idx]


@dataclass
class History:
    """Append-only archive of evaluated configurations and their vectors."""

    entries: list[tuple[Any, tuple[float, ...]]] = field(default_factory=list)

    def append(self, config: Any, vector: Vector) -> None:
        vector = tuple(float(v) for v in vector)
        if self.entries and len(vector) != len(self.entries[0][1]):
            raise LexicoError("history vectors must share one length")
        self.entries.append((config, vector))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def vectors(self) -> list[tuple[float, ...]]:
        return [v for _, v in self.entries]

    def targets(self, kappa: Sequence[float]) -> tuple[float, ...]:
        return compute_targets(self.vectors, kappa)


def freeze(config: dict) -> Hashable:
    return tuple(sorted(config.items()))
