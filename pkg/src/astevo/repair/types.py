from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

from ..code import HeuristicCode, SourceText
from ..problems.base import FeatureSchema


class ProviderFailure(RuntimeError):
    """The repair backend could not produce a response."""


class Context(str, enum.Enum):
    PLAIN = "Plain"
    SHORT_TERM = "ShortTermReflection"
    LONG_TERM = "LongTermReflection"


class Framing(str, enum.Enum):
    REPAIR = "repair"
    NOVEL = "novel"


class ProviderKind(str, enum.Enum):
    MOCK = "Mock"
    REMOTE = "RemoteLLM"


@dataclass(frozen=True)
class RepairRequest:
    icode: HeuristicCode
    schema: FeatureSchema
    context: Context = Context.PLAIN
    reflection: str = ""
    framing: Framing = Framing.REPAIR
    want_variants: int = 1
    violations_summary: str = field(default="")

    def __post_init__(self) -> None:
        if self.want_variants < 1:
            raise ValueError("want_variants must be >= 1")
        if self.icode.is_valid:
            raise ValueError("valid code never enters repair")
        if not self.violations_summary:
            object.__setattr__(self, "violations_summary", self.icode.violations_summary())


@dataclass(frozen=True)
class SemanticRequest:
    """Prompt-only crossover or mutation over whole parent programs."""

    parents: tuple[HeuristicCode, ...]
    parent_fitness: tuple[float, ...]
    schema: FeatureSchema
    operator: str  # "crossover" or "mutation"


@dataclass(frozen=True)
class RepairResponse:
    candidates: tuple[SourceText, ...]
    tokens_in: int
    tokens_out: int
    provider: ProviderKind
    prompt: str = ""


@dataclass(frozen=True)
class Completion:
    text: str
    tokens_in: int
    tokens_out: int


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


class Provider(Protocol):
    kind: ProviderKind

    def repair(self, req: RepairRequest) -> RepairResponse: ...

    def semantic(self, req: SemanticRequest) -> RepairResponse: ...

    def reflect(self, prompt: str, fallback: str) -> Completion: ...


def first_candidate(resp: RepairResponse) -> Optional[SourceText]:
    return resp.candidates[0] if resp.candidates else None
