"""Heuristic source plus its validity, the unit a population holds."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .hdsl import HOLE, Ast, ParseFailure, ValidityReport, parse, unparse, validate


class Origin(str, enum.Enum):
    SEED = "seed"
    LLM = "llm"
    UNPARSER = "unparser"


@dataclass(frozen=True)
class SourceText:
    text: str
    origin: Origin = Origin.SEED

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("source text must be non-empty")
        if HOLE in self.text and self.origin is not Origin.UNPARSER:
            raise ValueError("only unparser output may carry the hole token")


def fingerprint(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Lineage:
    op_kind: str
    parents: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"op": self.op_kind, "parents": list(self.parents)}


@dataclass(frozen=True)
class HeuristicCode:
    source: SourceText
    ast: Optional[Ast]
    validity: Optional[ValidityReport]  # None means the text did not parse
    parse_error: Optional[str] = None
    lineage: tuple[Lineage, ...] = ()
    repaired_from: Optional[str] = None
    fingerprint: str = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fingerprint", fingerprint(self.source.text))

    @property
    def unparseable(self) -> bool:
        return self.ast is None

    @property
    def is_valid(self) -> bool:
        return self.validity is not None and self.validity.is_valid

    @property
    def text(self) -> str:
        return self.source.text

    def violations_summary(self) -> str:
        if self.validity is None:
            return f"- Unparseable: {self.parse_error}"
        return self.validity.summary()

    @classmethod
    def from_text(
        cls,
        text: str,
        origin: Origin = Origin.SEED,
        arity: Optional[int] = None,
        lineage: tuple[Lineage, ...] = (),
        repaired_from: Optional[str] = None,
    ) -> "HeuristicCode":
        if HOLE in text:
            origin = Origin.UNPARSER
        try:
            ast = parse(text)
        except ParseFailure as exc:
            return cls(SourceText(text, origin), None, None, str(exc), lineage, repaired_from)
        return cls(SourceText(text, origin), ast, validate(ast, arity), None, lineage, repaired_from)

    @classmethod
    def from_ast(cls, ast: Ast, arity: Optional[int] = None, lineage: tuple[Lineage, ...] = ()) -> "HeuristicCode":
        """Unparse ``ast`` and re-read it, so the stored tree matches the text."""
        return cls.from_text(unparse(ast), Origin.UNPARSER, arity, lineage)
