"""Randomized direct search under targeted lexicographic comparison.

From the current point the search probes ``+delta * u`` and, if that fails,
``-delta * u`` for a random unit direction ``u`` in the encoded unit cube. A
probe is accepted when it beats the current point under the targeted
relation, or ties with it there and wins on the plain relation. After
``2^(d-1)`` consecutive failures the step shrinks by
``sqrt((t' + 1) / (t + 1))`` where ``t'`` is the last successful iteration;
once it falls below ``delta_lower`` the search restarts from a Gaussian jump
around the initial point.

Running with a single-objective mode gives the plain direct-search baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .lexico import (
    History,
    Ordering,
    lexi_better,
    lexi_compare,
    lexi_optimal_indices,
    targeted_compare,
)
from .objectives import ObjectiveMode, aggregate
from .search_space import Configuration, SearchSpace, sample_unit_sphere

Evaluator = Callable[[Configuration], Sequence[float]]

ACCEPTED_PLUS = "accepted_plus"
ACCEPTED_MINUS = "accepted_minus"
REJECTED = "rejected"
RESTART = "restart"
INCUMBENT_UPDATE = "incumbent_update"
EVENTS = (ACCEPTED_PLUS, ACCEPTED_MINUS, REJECTED, RESTART, INCUMBENT_UPDATE)

RESTART_SIGMA = 0.25


class OptimizerError(ValueError):
    pass


class EvaluationError(RuntimeError):
    """An evaluator call failed; ``config`` is the offending configuration."""

    def __init__(self, config: Configuration, cause: BaseException):
        super().__init__(f"evaluation failed for {config}: {cause}")
        self.config = config
        self.cause = cause


@dataclass(frozen=True)
class OptimizerParams:
    """Search settings.

    ``mode=None`` means the evaluator already returns the objective vector;
    otherwise it returns fold losses that ``mode`` aggregates.
    ``delta_restart_step`` defaults to ``0.1 * delta_init``.
    """

    budget: int = 100
    kappa: tuple[float, ...] = (0.01, 0.0)
    mode: ObjectiveMode | None = None
    seed: int = 0
    delta_init: float = 0.25
    delta_lower: float = 2.0**-10
    delta_restart_step: float | None = None
    select: str = "online"

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise OptimizerError(f"budget must be at least 1, got {self.budget}")
        if not self.delta_init > 0:
            raise OptimizerError("delta_init must be positive")
        if not 0 < self.delta_lower < self.delta_init:
            raise OptimizerError("delta_lower must lie in (0, delta_init)")
        if any(not k >= 0 for k in self.kappa):
            raise OptimizerError(f"kappa must be non-negative, got {self.kappa}")
        if self.select not in ("online", "posthoc"):
            raise OptimizerError(f"select must be 'online' or 'posthoc', got {self.select!r}")
        object.__setattr__(self, "kappa", tuple(float(k) for k in self.kappa))
        if self.delta_restart_step is None:
            object.__setattr__(self, "delta_restart_step", 0.1 * self.delta_init)

    def kappa_for(self, n_objectives: int) -> tuple[float, ...]:
        if len(self.kappa) < n_objectives:
            raise OptimizerError(
                f"kappa has {len(self.kappa)} entries for {n_objectives} objectives"
            )
        return self.kappa[:n_objectives]


@dataclass
class TraceEntry:
    iteration: int
    config: Configuration
    fold_losses: list[float] | None
    objectives: tuple[float, ...]
    event: str
    promoted: bool
    delta: float
    targets: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "iteration": self.iteration,
                "config": self.config,
                "fold_losses": self.fold_losses,
                "objectives": list(self.objectives),
                "event": self.event,
                "promoted": self.promoted,
                "delta": self.delta,
                "targets": list(self.targets),
            },
            sort_keys=True,
        )


@dataclass
class Trace:
    entries: list[TraceEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        entries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            entries.append(
                TraceEntry(
                    d["iteration"], d["config"], d["fold_losses"], tuple(d["objectives"]),
                    d["event"], d["promoted"], d["delta"], tuple(d["targets"]),
                )
            )
        return cls(entries)


def passes_update(candidate: Sequence[float], reference: Sequence[float], targets: Sequence[float]) -> bool:
    """Targeted win, or a targeted tie broken by the plain relation."""
    order = targeted_compare(candidate, reference, targets)
    return order is Ordering.BETTER or (order is Ordering.EQUAL and lexi_better(candidate, reference))


def update_procedure(
    candidate: Sequence[float],
    current: Sequence[float],
    incumbent: Sequence[float],
    targets: Sequence[float],
) -> tuple[bool, bool]:
    """Return ``(accept, promote_incumbent)`` for a probe."""
    accept = passes_update(candidate, current, targets)
    return accept, accept and passes_update(candidate, incumbent, targets)


@dataclass
class OptimizerState:
    current: Configuration
    current_objectives: tuple[float, ...]
    incumbent: Configuration
    incumbent_objectives: tuple[float, ...]
    delta: float
    targets: tuple[float, ...]
    t: int = 0
    t_prime: int = 0
    s: int = 0
    r: int = 0
    history: History = field(default_factory=History)
    trace: Trace = field(default_factory=Trace)
    n_evals: int = 0


class LexiFlow:
    """Stateful search driver; :func:`run` is the usual entry point."""

    def __init__(
        self,
        space: SearchSpace,
        evaluator: Evaluator,
        params: OptimizerParams,
        initial: Configuration | None = None,
    ):
        self.space = space
        self.evaluator = evaluator
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.initial = dict(initial) if initial is not None else space.midpoint()
        space.validate(self.initial)
        self.origin = space.encode(self.initial)
        self.kappa: tuple[float, ...] | None = None
        self.state: OptimizerState | None = None

    # -- evaluation bookkeeping ------------------------------------------------

    def _evaluate(self, config: Configuration) -> tuple[list[float] | None, tuple[float, ...]]:
        try:
            raw = self.evaluator(config)
            if self.params.mode is None:
                fold_losses = None
                vector = tuple(float(v) for v in raw)
            else:
                fold_losses = [float(v) for v in raw]
                vector = aggregate(fold_losses, self.params.mode)
        except Exception as exc:
            raise EvaluationError(dict(config), exc) from exc
        if not vector or not all(math.isfinite(v) for v in vector):
            raise EvaluationError(dict(config), OptimizerError(f"bad objective vector {vector}"))
        return fold_losses, vector

    def _record(self, config, fold_losses, vector) -> None:
        st = self.state
        st.history.append(config, vector)
        st.targets = st.history.targets(self.kappa)
        st.n_evals += 1

    def _trace(self, config, fold_losses, vector, event, promoted) -> None:
        st = self.state
        st.trace.entries.append(
            TraceEntry(st.n_evals - 1, dict(config), fold_losses, vector, event,
                       promoted, st.delta, st.targets)
        )

    @property
    def budget_left(self) -> int:
        return self.params.budget - (self.state.n_evals if self.state else 0)

    # -- search ----------------------------------------------------------------

    def start(self) -> OptimizerState:
        fold_losses, vector = self._evaluate(self.initial)
        self.kappa = self.params.kappa_for(len(vector))
        self.state = OptimizerState(
            current=dict(self.initial),
            current_objectives=vector,
            incumbent=dict(self.initial),
            incumbent_objectives=vector,
            delta=self.params.delta_init,
            targets=vector,
        )
        self._record(self.initial, fold_losses, vector)
        self._trace(self.initial, fold_losses, vector, INCUMBENT_UPDATE, True)
        return self.state

    def _probe(self, config: Configuration, event: str) -> bool:
        st = self.state
        fold_losses, vector = self._evaluate(config)
        self._record(config, fold_losses, vector)
        accept, promote = update_procedure(
            vector, st.current_objectives, st.incumbent_objectives, st.targets
        )
        if accept:
            st.current, st.current_objectives = dict(config), vector
            st.t_prime = st.t
            st.s = 0
            if promote:
                st.incumbent, st.incumbent_objectives = dict(config), vector
        self._trace(config, fold_losses, vector, event if accept else REJECTED, promote)
        return accept

    def _restart(self) -> None:
        st = self.state
        p = self.params
        st.r += 1
        st.delta = p.delta_init + st.r * p.delta_restart_step
        jump = self.origin + RESTART_SIGMA * self.rng.standard_normal(self.space.dimension)
        config = self.space.decode(np.clip(jump, 0.0, 1.0))
        if self.budget_left <= 0:
            return
        fold_losses, vector = self._evaluate(config)
        self._record(config, fold_losses, vector)
        # a restart moves unconditionally; it may still displace the incumbent
        promote = passes_update(vector, st.incumbent_objectives, st.targets)
        if promote:
            st.incumbent, st.incumbent_objectives = dict(config), vector
        st.current, st.current_objectives = config, vector
        self._trace(config, fold_losses, vector, RESTART, promote)

    def step(self) -> OptimizerState:
        """One iteration: up to two probes, then step-size bookkeeping."""
        st = self.state
        if st is None:
            raise OptimizerError("call start() before step()")
        if self.budget_left <= 0:
            raise OptimizerError("evaluation budget exhausted")
        u = sample_unit_sphere(self.space.dimension, self.rng)
        moved = self._probe(self.space.perturb(st.current, u, st.delta), ACCEPTED_PLUS)
        if not moved and self.budget_left > 0:
            moved = self._probe(self.space.perturb(st.current, -u, st.delta), ACCEPTED_MINUS)
        if not moved:
            st.s += 1
        if st.s >= 2 ** (self.space.dimension - 1):
            st.s = 0
            st.delta *= math.sqrt((st.t_prime + 1) / (st.t + 1))
        if st.delta < self.params.delta_lower:
            self._restart()
        st.t += 1
        return st

    def run(self) -> tuple[Configuration, tuple[float, ...], Trace]:
        self.start()
        while self.budget_left > 0:
            self.step()
        return self.result()

    def result(self) -> tuple[Configuration, tuple[float, ...], Trace]:
        st = self.state
        if self.params.select == "posthoc":
            vectors = st.history.vectors
            j = lexi_optimal_indices(vectors, self.kappa)[0]
            config, vector = st.history.entries[j]
            return dict(config), vector, st.trace
        return dict(st.incumbent), st.incumbent_objectives, st.trace


def run(
    space: SearchSpace,
    evaluator: Evaluator,
    params: OptimizerParams,
    initial: Configuration | None = None,
) -> tuple[Configuration, tuple[float, ...], Trace]:
    """Search until the budget is spent; return the incumbent, its vector and the trace."""
    return LexiFlow(space, evaluator, params, initial).run()


def random_search(
    space: SearchSpace, evaluator: Evaluator, params: OptimizerParams
) -> tuple[Configuration, tuple[float, ...], Trace]:
    """Uniform sampling baseline; the plainly smallest vector wins (earliest on ties)."""
    rng = np.random.default_rng(params.seed)
    opt = LexiFlow(space, evaluator, params, initial=space.midpoint())
    trace = Trace()
    best: tuple[Configuration, tuple[float, ...]] | None = None
    for i in range(params.budget):
        config = space.sample_uniform(rng)
        fold_losses, vector = opt._evaluate(config)
        promoted = best is None or lexi_compare(vector, best[1]) is Ordering.BETTER
        if promoted:
            best = (config, vector)
        trace.entries.append(
            TraceEntry(i, dict(config), fold_losses, vector,
                       INCUMBENT_UPDATE if promoted else REJECTED, promoted, 0.0, ())
        )
    return dict(best[0]), best[1], trace


def incumbent_path(trace: Iterable[TraceEntry]) -> list[TraceEntry]:
    return [e for e in trace if e.promoted]
