from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..code import HeuristicCode
from ..interp import ExecLimits
from ..problems.base import EvalReport


class ConfigError(ValueError):
    """Inconsistent run settings."""


class Framework(str, enum.Enum):
    EOH_I = "eoh-i"
    REEVO_I = "reevo-i"
    EOHS_I = "eohs-i"
    EOH = "eoh"


# (pop_size, iterations) per framework; reevo-i is bounded by its budget instead
DEFAULTS = {
    Framework.EOH_I: (5, 10),
    Framework.REEVO_I: (5, 0),
    Framework.EOHS_I: (10, 50),
    Framework.EOH: (5, 10),
}
DEFAULT_BUDGET = 400
DEFAULT_II_REPETITIONS = 2
DEFAULT_REFLECTION_CAP = 2000


@dataclass(frozen=True)
class RunConfig:
    framework: Framework = Framework.EOH_I
    problem: str = "tsp"
    pop_size: int = 5
    iterations: int = 10
    ii_repetitions: int = DEFAULT_II_REPETITIONS
    seed: int = 0
    provider: str = "mock"
    limits: ExecLimits = ExecLimits()
    suite: str = "train"
    suite_seed: int = 0
    test_suites: tuple[str, ...] = ()
    set_size: int = 0
    budget: int = DEFAULT_BUDGET
    reflection_cap: int = DEFAULT_REFLECTION_CAP

    @classmethod
    def for_framework(cls, framework: Framework | str, **overrides) -> "RunConfig":
        """Config with the framework's default population and iteration count."""
        fw = Framework(framework)
        pop, iters = DEFAULTS[fw]
        base = {"framework": fw, "pop_size": pop, "iterations": iters}
        if fw is Framework.EOHS_I:
            base["set_size"] = 3
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def check(self) -> None:
        if self.problem not in ("tsp", "obp"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.pop_size < 1:
            raise ConfigError("population size must be at least 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.ii_repetitions < 0:
            raise ConfigError("II repetitions must be non-negative")
        if self.framework is Framework.EOHS_I:
            if self.set_size < 1:
                raise ConfigError("eohs-i needs a set size of at least 1")
            if self.set_size > self.pop_size:
                raise ConfigError(f"set size {self.set_size} exceeds population capacity {self.pop_size}")
        elif self.set_size:
            raise ConfigError("set size only applies to eohs-i")
        if self.framework is Framework.REEVO_I and self.budget < 1:
            raise ConfigError("reevo-i needs a positive heuristic budget")
        if self.reflection_cap < 1:
            raise ConfigError("reflection cap must be positive")
        if self.provider not in ("mock", "remote"):
            raise ConfigError(f"provider must be mock or remote, got {self.provider!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["framework"] = self.framework.value
        d["test_suites"] = list(self.test_suites)
        return d


@dataclass
class Individual:
    code: HeuristicCode
    fitness: Optional[float] = None
    eval_report: Optional[EvalReport] = None
    repaired_twin: Optional[str] = None
    generation_born: int = 0
    tokens_spent: int = 0
    operator: str = "seed"
    serial: int = 0  # insertion order; lower is older

    @property
    def fingerprint(self) -> str:
        return self.code.fingerprint

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def rank_key(self) -> tuple[float, int]:
        assert self.fitness is not None
        return (self.fitness, self.serial)

    def log_entry(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "valid": self.code.is_valid,
            "fitness": self.fitness,
            "lineage": [l.to_dict() for l in self.code.lineage],
            "operator": self.operator,
            "repaired_twin": self.repaired_twin,
            "generation_born": self.generation_born,
            "tokens_spent": self.tokens_spent,
        }


@dataclass
class Population:
    members: list[Individual]
    capacity: int
    seed: int = 0

    def best(self) -> Individual:
        return min(self.members, key=Individual.rank_key)

    def fingerprints(self) -> list[str]:
        return [m.fingerprint for m in self.members]


@dataclass
class TokenLedger:
    """Token and heuristic counts, broken down by generation, path and purpose.

    ``path`` is ``ast`` for the destroy-and-repair pipeline and ``baseline`` for
    prompt-only semantic operators.
    """

    total_in: int = 0
    total_out: int = 0
    heuristics_generated: int = 0
    per_generation: dict[int, dict[str, dict[str, int]]] = field(default_factory=dict)
    prompts: dict[str, list[int]] = field(default_factory=dict)

    def record(self, gen: int, path: str, purpose: str, tokens_in: int, tokens_out: int) -> None:
        self.total_in += tokens_in
        self.total_out += tokens_out
        row = self.per_generation.setdefault(gen, {}).setdefault(f"{path}/{purpose}", {"in": 0, "out": 0, "calls": 0})
        row["in"] += tokens_in
        row["out"] += tokens_out
        row["calls"] += 1
        self.prompts.setdefault(f"{path}/{purpose}", []).append(tokens_in)

    def count_heuristic(self, n: int = 1) -> None:
        self.heuristics_generated += n

    @property
    def total(self) -> int:
        return self.total_in + self.total_out

    def path_totals(self, path: str) -> dict[str, int]:
        tin = tout = 0
        for rows in self.per_generation.values():
            for key, row in rows.items():
                if key.split("/")[0] == path:
                    tin += row["in"]
                    tout += row["out"]
        return {"in": tin, "out": tout}

    def mean_prompt_tokens(self, key: str) -> float:
        """Mean prompt size of the calls recorded under ``path/purpose``."""
        xs = self.prompts.get(key, [])
        return sum(xs) / len(xs) if xs else 0.0

    def snapshot(self) -> dict:
        return {
            "total_in": self.total_in,
            "total_out": self.total_out,
            "heuristics_generated": self.heuristics_generated,
            "per_generation": {str(g): rows for g, rows in sorted(self.per_generation.items())},
        }


@dataclass
class ReflectionState:
    short_term: str = ""
    long_term: str = ""
    cap: int = DEFAULT_REFLECTION_CAP

    def set_long_term(self, text: str) -> None:
        """Store a new long-term digest, dropping its oldest lines past the cap."""
        lines = [l for l in text.splitlines() if l.strip()]
        while len(lines) > 1 and len("\n".join(lines)) > self.cap:
            lines.pop(0)
        self.long_term = "\n".join(lines)[-self.cap :]
