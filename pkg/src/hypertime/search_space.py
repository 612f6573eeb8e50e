"""Hyperparameter domains and the unit-cube encoding used by direct search.

Every configuration maps to a point in ``[0, 1]^d``. Continuous and integer
parameters are mapped affinely (on the natural log of the value when
``log_scale`` is set); a categorical choice with index ``i`` out of ``m``
sits at the bucket midpoint ``(i + 0.5) / m``. Decoding clamps to the cube
first, so any step taken by the optimizer lands back inside the space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"
KINDS = (CONTINUOUS, INTEGER, CATEGORICAL)

Configuration = dict[str, Any]


class SearchSpaceError(ValueError):
    """Raised for invalid domains, configurations or encoded points."""


@dataclass(frozen=True)
class ParamDomain:
    """Domain of a single hyperparameter.

    Examples:
        >>> ParamDomain(CONTINUOUS, lower=1e-3, upper=1e3, log_scale=True)
        >>> ParamDomain(INTEGER, lower=1, upper=3)
        >>> ParamDomain(CATEGORICAL, choices=("euclidean", "manhattan"))
    """

    kind: str
    lower: float | None = None
    upper: float | None = None
    log_scale: bool = False
    choices: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SearchSpaceError(f"unknown parameter kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            object.__setattr__(self, "choices", tuple(str(c) for c in self.choices))
            if not self.choices:
                raise SearchSpaceError("categorical domain needs at least one choice")
            if len(set(self.choices)) != len(self.choices):
                raise SearchSpaceError(f"duplicate choices in {self.choices}")
            if self.log_scale:
                raise SearchSpaceError("log_scale is not valid for categorical domains")
            return
        if self.lower is None or self.upper is None:
            raise SearchSpaceError(f"{self.kind} domain needs lower and upper bounds")
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SearchSpaceError("bounds must be finite")
        if self.kind == INTEGER:
            if not (lo.is_integer() and hi.is_integer()):
                raise SearchSpaceError("integer domain needs integral bounds")
            # a single-valued integer domain is allowed (it decodes to a constant)
            if lo > hi:
                raise SearchSpaceError(f"lower ({lo}) must not exceed upper ({hi})")
        elif lo >= hi:
            raise SearchSpaceError(f"lower ({lo}) must be less than upper ({hi})")
        if self.log_scale and lo <= 0:
            raise SearchSpaceError("log_scale requires a positive lower bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def degenerate(self) -> bool:
        return self.kind == INTEGER and self.lower == self.upper

    def _warp(self, value: float) -> float:
        return math.log(value) if self.log_scale else float(value)

    def _unwarp(self, value: float) -> float:
        return math.exp(value) if self.log_scale else value

    def contains(self, value: Any) -> bool:
        if self.kind == CATEGORICAL:
            return isinstance(value, str) and value in self.choices
        if isinstance(value, (bool, np.bool_)):
            return False
        if self.kind == INTEGER:
            if isinstance(value, (int, np.integer)):
                v = int(value)
            else:
                return False
            return self.lower <= v <= self.upper
        if not isinstance(value, (int, float, np.integer, np.floating)):
            return False
        v = float(value)
        return math.isfinite(v) and self.lower <= v <= self.upper

    def encode(self, value: Any) -> float:
        if not self.contains(value):
            raise SearchSpaceError(f"value {value!r} outside domain {self}")
        if self.kind == CATEGORICAL:
            return (self.choices.index(value) + 0.5) / len(self.choices)
        if self.degenerate:
            return 0.5
        lo, hi = self._warp(self.lower), self._warp(self.upper)
        u = (self._warp(value) - lo) / (hi - lo)
        return min(1.0, max(0.0, u))

    def decode(self, u: float) -> Any:
        u = min(1.0, max(0.0, float(u)))
        if self.kind == CATEGORICAL:
            m = len(self.choices)
            return self.choices[min(m - 1, max(0, math.floor(u * m)))]
        lo, hi = self._warp(self.lower), self._warp(self.upper)
        raw = self._unwarp(lo + u * (hi - lo))
        if self.kind == INTEGER:
            # round half up, then guard against exp() drifting past a bound
            return int(min(self.upper, max(self.lower, math.floor(raw + 0.5))))
        return min(self.upper, max(self.lower, raw))

    def sample(self, rng: np.random.Generator) -> Any:
        if self.kind == CATEGORICAL:
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == INTEGER and not self.log_scale:
            return int(rng.integers(int(self.lower), int(self.upper) + 1))
        lo, hi = self._warp(self.lower), self._warp(self.upper)
        raw = self._unwarp(rng.uniform(lo, hi))
        if self.kind == INTEGER:
            return int(min(self.upper, max(self.lower, math.floor(raw + 0.5))))
        return min(self.upper, max(self.lower, raw))

    def to_dict(self) -> dict[str, Any]:
        if self.kind == CATEGORICAL:
            return {"kind": self.kind, "choices": list(self.choices)}
        out: dict[str, Any] = {"kind": self.kind, "lower": self.lower, "upper": self.upper}
        if self.log_scale:
            out["log_scale"] = True
        return out

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any]) -> "ParamDomain":
        kind = spec.get("kind")
        if kind == CATEGORICAL:
            return cls(kind, choices=tuple(spec.get("choices", ())))
        return cls(
            kind,
            lower=spec.get("lower"),
            upper=spec.get("upper"),
            log_scale=bool(spec.get("log_scale", False)),
        )


@dataclass(frozen=True)
class SearchSpace:
    """Ordered collection of named hyperparameter domains."""

    params: Mapping[str, ParamDomain] = field(default_factory=dict)

    def __post_init__(self) -> None:
        params = dict(self.params)
        if not params:
            raise SearchSpaceError("search space needs at least one parameter")
        for name, dom in params.items():
            if not isinstance(dom, ParamDomain):
                raise SearchSpaceError(f"{name}: expected ParamDomain, got {type(dom).__name__}")
        object.__setattr__(self, "params", params)

    @classmethod
    def from_entries(cls, entries: Iterable[Mapping[str, Any]]) -> "SearchSpace":
        """Build from config-file entries, each carrying a ``name`` key."""
        params: dict[str, ParamDomain] = {}
        for entry in entries:
            name = entry.get("name")
            if not name:
                raise SearchSpaceError(f"search space entry without a name: {dict(entry)}")
            if name in params:
                raise SearchSpaceError(f"duplicate parameter name {name!r}")
            params[name] = ParamDomain.from_dict(entry)
        return cls(params)

    def to_entries(self) -> list[dict[str, Any]]:
        return [{"name": n, **d.to_dict()} for n, d in self.params.items()]

    @property
    def names(self) -> list[str]:
        return list(self.params)

    @property
    def dimension(self) -> int:
        return len(self.params)

    def validate(self, config: Mapping[str, Any]) -> None:
        if set(config) != set(self.params):
            missing = sorted(set(self.params) - set(config))
            extra = sorted(set(config) - set(self.params))
            raise SearchSpaceError(f"config keys mismatch: missing={missing} extra={extra}")
        for name, dom in self.params.items():
            if not dom.contains(config[name]):
                raise SearchSpaceError(f"{name}={config[name]!r} outside domain {dom}")

    def sample_uniform(self, rng: np.random.Generator) -> Configuration:
        return {name: dom.sample(rng) for name, dom in self.params.items()}

    def encode(self, config: Mapping[str, Any]) -> np.ndarray:
        self.validate(config)
        return np.array([dom.encode(config[n]) for n, dom in self.params.items()], dtype=float)

    def decode(self, point: Iterable[float]) -> Configuration:
        point = np.asarray(point, dtype=float).ravel()
        if point.shape[0] != self.dimension:
            raise SearchSpaceError(
                f"point has {point.shape[0]} components, space has {self.dimension}"
            )
        return {name: dom.decode(u) for (name, dom), u in zip(self.params.items(), point)}

    def midpoint(self) -> Configuration:
        """Configuration at the centre of the unit cube."""
        return self.decode(np.full(self.dimension, 0.5))

    def perturb(
        self, config: Mapping[str, Any], direction: np.ndarray, step: float
    ) -> Configuration:
        """Move ``step`` along ``direction`` in encoded space and decode."""
        if not step > 0:
            raise SearchSpaceError(f"step must be positive, got {step}")
        direction = np.asarray(direction, dtype=float).ravel()
        if direction.shape[0] != self.dimension:
            raise SearchSpaceError(
                f"direction has {direction.shape[0]} components, space has {self.dimension}"
            )
        return self.decode(self.encode(config) + step * direction)


def sample_unit_sphere(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on the unit sphere in ``R^d`` (normalized Gaussian)."""
    if d < 1:
        raise SearchSpaceError(f"dimension must be at least 1, got {d}")
    while True:
        g = rng.standard_normal(d)
        norm = float(np.linalg.norm(g))
        if norm > 0.0:
            return g / norm


def clamp_unit(point: np.ndarray) -> np.ndarray:
    return np.clip(point, 0.0, 1.0)
