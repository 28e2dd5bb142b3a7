"""The heuristic DSL: a single ``fn score(...)`` with lets, ifs and arithmetic."""

from .lexer import ParseFailure, tokenize
from .nodes import BUILTINS, HOLE, Ast, Kind, Node, NodeInfo, enumerate_nodes, renumber
from .parser import parse
from .unparse import unparse
from .validate import ValidityReport, Violation, ViolationKind, validate

__all__ = [
    "BUILTINS",
    "HOLE",
    "Ast",
    "Kind",
    "Node",
    "NodeInfo",
    "ParseFailure",
    "ValidityReport",
    "Violation",
    "ViolationKind",
    "enumerate_nodes",
    "parse",
    "renumber",
    "tokenize",
    "unparse",
    "validate",
]
