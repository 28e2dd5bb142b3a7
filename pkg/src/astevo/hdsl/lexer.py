from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .nodes import HOLE

KEYWORDS = frozenset({"fn", "let", "if", "else", "return", "and", "or", "not"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|[-+*/%<>=(){},;])
  | (?P<hole>""" + re.escape(HOLE) + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    type: str  # num, name, kw, op, hole, eof
    value: str
    offset: int


class ParseFailure(ValueError):
    """Text that cannot be tokenized or derived under the DSL grammar."""

    def __init__(self, offset: int, expected: list[str], message: str = "") -> None:
        self.offset = offset
        self.expected = list(expected)
        detail = message or "expected " + " or ".join(self.expected)
        super().__init__(f"offset {offset}: {detail}")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseFailure(pos, ["token"], f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "num":
            if not math.isfinite(float(value)):
                raise ParseFailure(pos, ["finite number"], f"literal {value} out of range")
            tokens.append(Token("num", value, pos))
        elif kind == "name":
            tokens.append(Token("kw" if value in KEYWORDS else "name", value, pos))
        elif kind == "op":
            tokens.append(Token("op", value, pos))
        elif kind == "hole":
            tokens.append(Token("hole", value, pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens
