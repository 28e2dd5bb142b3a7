"""Syntax tree types for the heuristic DSL.

Trees are immutable. A child slot may hold ``None`` when a required child was
removed by a destruction operator; such a slot is rendered as the hole token
and reported by the validator, but it is not a node and does not count
towards ``node_count``.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

HOLE = "⟨?⟩"  # ⟨?⟩

BUILTINS: dict[str, int] = {
    "min": 2,
    "max": 2,
    "abs": 1,
    "sqrt": 1,
    "exp": 1,
    "log": 1,
    "pow": 2,
    "floor": 1,
}


class Kind(str, enum.Enum):
    PROGRAM = "Program"
    FNDEF = "FnDef"
    PARAMS = "ParamList"
    BLOCK = "Block"
    LET = "Let"
    IF = "If"
    RETURN = "Return"
    BINOP = "BinaryOp"
    UNOP = "UnaryOp"
    CALL = "Call"
    IDENT = "Identifier"
    NUMBER = "NumberLit"
    HOLE = "Hole"


EXPR_KINDS = frozenset({Kind.BINOP, Kind.UNOP, Kind.CALL, Kind.IDENT, Kind.NUMBER, Kind.HOLE})
STMT_KINDS = frozenset({Kind.LET, Kind.IF, Kind.RETURN})

Payload = Union[str, float, None]


@dataclass(frozen=True)
class Node:
    kind: Kind
    children: tuple[Optional["Node"], ...] = ()
    payload: Payload = None
    node_id: int = -1

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal, skipping empty slots."""
        stack: list[Node] = [self]
        while stack:
            node = stack.pop()
            yield node
            for child in reversed(node.children):
                if child is not None:
                    stack.append(child)

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def shape(self) -> tuple:
        """Kind/payload/child-order structure with node ids erased."""
        return (
            self.kind.value,
            self.payload,
            tuple(None if c is None else c.shape() for c in self.children),
        )


@dataclass(frozen=True)
class Ast:
    root: Node
    node_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_count", self.root.size())

    def nodes(self) -> Iterator[Node]:
        return self.root.walk()

    def find(self, node_id: int) -> Node:
        for node in self.root.walk():
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)

    def shape(self) -> tuple:
        return self.root.shape()

    def fingerprint(self) -> str:
        return hashlib.sha256(repr(self.shape()).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class NodeInfo:
    node_id: int
    kind: Kind
    depth: int
    subtree_size: int


def enumerate_nodes(ast: Ast) -> list[NodeInfo]:
    """Pre-order listing of every node with its depth and subtree size."""
    out: list[NodeInfo] = []

    def visit(node: Node, depth: int) -> int:
        slot = len(out)
        out.append(NodeInfo(node.node_id, node.kind, depth, 0))
        size = 1
        for child in node.children:
            if child is not None:
                size += visit(child, depth + 1)
        out[slot] = NodeInfo(node.node_id, node.kind, depth, size)
        return size

    visit(ast.root, 0)
    return out


def renumber(root: Node, start: int = 0) -> Node:
    """Return a copy of ``root`` with pre-order ids ``start, start+1, ...``."""
    counter = [start]

    def go(node: Node) -> Node:
        nid = counter[0]
        counter[0] += 1
        kids = tuple(None if c is None else go(c) for c in node.children)
        return Node(node.kind, kids, node.payload, nid)

    return go(root)
