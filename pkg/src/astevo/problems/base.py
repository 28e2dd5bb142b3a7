from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from ..hdsl import Ast, validate
from ..interp import ExecLimits


class InvalidHeuristic(ValueError):
    """A heuristic that failed validation reached an evaluator."""

    def __init__(self, report) -> None:
        self.report = report
        super().__init__("invalid heuristic:\n" + report.summary())


class TooLarge(ValueError):
    """Instance too big for an exhaustive oracle."""


@dataclass(frozen=True)
class FeatureSchema:
    schema_id: str
    feature_names: tuple[str, ...]
    direction: str  # "min" or "max": which score wins

    @property
    def arity(self) -> int:
        return len(self.feature_names)

    def describe(self) -> str:
        pick = "lowest" if self.direction == "min" else "highest"
        return f"fn score({', '.join(self.feature_names)}) -> number; the candidate with the {pick} score is chosen"


TSP_NEXT = FeatureSchema(
    "TspNext",
    ("d_cur", "d_start", "d_mean_unvis", "d_min_unvis", "d_max_unvis", "frac_remaining"),
    "min",
)
OBP_BIN = FeatureSchema(
    "ObpBin",
    ("item_size", "remaining_cap", "residual_after", "bin_utilization"),
    "max",
)


def content_hash(payload: object) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    objective: float
    runtime_errors: int

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "objective": self.objective, "runtime_errors": self.runtime_errors}


@dataclass(frozen=True)
class EvalReport:
    per_instance: tuple[InstanceResult, ...]

    @property
    def mean_objective(self) -> float:
        return math.fsum(r.objective for r in self.per_instance) / len(self.per_instance)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.per_instance]

    def to_dict(self) -> dict:
        return {
            "per_instance": [r.to_dict() for r in self.per_instance],
            "mean_objective": self.mean_objective,
        }


class Problem(Protocol):
    name: str
    schema: FeatureSchema

    def evaluate(self, ast: Ast, inst, limits: ExecLimits) -> InstanceResult: ...

    def penalty(self, inst) -> float: ...


def require_valid(ast: Ast, schema: FeatureSchema) -> None:
    report = validate(ast, schema.arity)
    if not report.is_valid:
        raise InvalidHeuristic(report)


def evaluate_suite(problem: Problem, ast: Ast, suite: Sequence, limits: ExecLimits = ExecLimits()) -> EvalReport:
    """Score ``ast`` on every instance; the mean is the heuristic's fitness."""
    if not suite:
        raise ValueError("empty instance suite")
    require_valid(ast, problem.schema)
    return EvalReport(tuple(problem.evaluate(ast, inst, limits) for inst in suite))
