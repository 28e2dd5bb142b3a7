from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .nodes import BUILTINS, Ast, Kind, Node
from .parser import BINARY_PREC


class ViolationKind(str, enum.Enum):
    UNBOUND_IDENTIFIER = "UnboundIdentifier"
    MISSING_RETURN = "MissingReturn"
    BAD_ARITY = "BadArity"
    HOLE_PRESENT = "HolePresent"
    UNKNOWN_CALL = "UnknownCall"
    EMPTY_BLOCK = "EmptyBlock"


@dataclass(frozen=True)
class Violation:
    node_id: int
    kind: ViolationKind
    message: str

    def to_dict(self) -> dict:
        return {"node_id": self.node_id, "violation_kind": self.kind.value, "message": self.message}


@dataclass(frozen=True)
class ValidityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[ViolationKind]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if not self.violations:
            return "no violations"
        return "\n".join(f"- {v.kind.value} at node {v.node_id}: {v.message}" for v in self.violations)

    def to_dict(self) -> dict:
        return {"is_valid": self.is_valid, "violations": [v.to_dict() for v in self.violations]}


class _Checker:
    def __init__(self, arity: Optional[int]) -> None:
        self.arity = arity
        self.out: list[Violation] = []

    def add(self, node_id: int, kind: ViolationKind, message: str) -> None:
        self.out.append(Violation(node_id, kind, message))

    def program(self, root: Node) -> None:
        fndefs = [c for c in root.children if c is not None and c.kind is Kind.FNDEF]
        if len(root.children) != 1 or len(fndefs) != 1:
            self.add(root.node_id, ViolationKind.BAD_ARITY, "program must contain exactly one function definition")
        for child in root.children:
            if child is not None and child.kind is Kind.FNDEF:
                self.fndef(child)
            else:
                self.stmt(child, root.node_id, set())

    def fndef(self, node: Node) -> None:
        scope: set[str] = set()
        params = node.children[0] if node.children else None
        body = node.children[1] if len(node.children) > 1 else None
        if len(node.children) != 2:
            self.add(node.node_id, ViolationKind.BAD_ARITY, "function needs a parameter list and a body")
        if params is None or params.kind is Kind.HOLE:
            self.add(node.node_id if params is None else params.node_id, ViolationKind.HOLE_PRESENT, "parameter list missing")
        elif params.kind is not Kind.PARAMS:
            self.add(params.node_id, ViolationKind.BAD_ARITY, f"{params.kind.value} in parameter-list position")
            self.any(params, node.node_id, scope)
        else:
            for p in params.children:
                if p is None or p.kind is Kind.HOLE:
                    self.add(params.node_id if p is None else p.node_id, ViolationKind.HOLE_PRESENT, "parameter missing")
                elif p.kind is not Kind.IDENT:
                    self.add(p.node_id, ViolationKind.BAD_ARITY, f"{p.kind.value} in parameter position")
                    self.any(p, params.node_id, scope)
                elif p.payload in scope:
                    self.add(p.node_id, ViolationKind.BAD_ARITY, f"duplicate parameter {p.payload}")
                else:
                    scope.add(str(p.payload))
            if self.arity is not None and len(params.children) != self.arity:
                self.add(params.node_id, ViolationKind.BAD_ARITY, f"expected {self.arity} parameters, found {len(params.children)}")
        self.block_slot(body, node.node_id, scope)
        if body is not None and body.kind is Kind.BLOCK and not all_paths_return(body):
            self.add(body.node_id, ViolationKind.MISSING_RETURN, "a control path reaches the end of the function without return")

    def block_slot(self, node: Optional[Node], parent_id: int, scope: set[str]) -> None:
        if node is None or node.kind is Kind.HOLE:
            self.add(parent_id if node is None else node.node_id, ViolationKind.HOLE_PRESENT, "block missing")
            return
        if node.kind is not Kind.BLOCK:
            self.add(node.node_id, ViolationKind.BAD_ARITY, f"{node.kind.value} in block position")
            self.stmt(node, parent_id, set(scope))
            return
        self.block(node, scope)

    def block(self, node: Node, scope: set[str]) -> None:
        if not node.children:
            self.add(node.node_id, ViolationKind.EMPTY_BLOCK, "empty block")
        inner = set(scope)
        for child in node.children:
            self.stmt(child, node.node_id, inner)

    def stmt(self, node: Optional[Node], parent_id: int, scope: set[str]) -> None:
        if node is None or node.kind is Kind.HOLE:
            self.add(parent_id if node is None else node.node_id, ViolationKind.HOLE_PRESENT, "statement missing")
            return
        k = node.kind
        if k is Kind.LET:
            self.expr(_child(node, 0), node.node_id, scope)
            scope.add(str(node.payload))
        elif k is Kind.RETURN:
            self.expr(_child(node, 0), node.node_id, scope)
        elif k is Kind.IF:
            if len(node.children) not in (2, 3):
                self.add(node.node_id, ViolationKind.BAD_ARITY, "if needs a condition and one or two branches")
            self.expr(_child(node, 0), node.node_id, scope)
            self.block_slot(_child(node, 1), node.node_id, scope)
            if len(node.children) > 2:
                self.block_slot(node.children[2], node.node_id, scope)
        else:
            self.add(node.node_id, ViolationKind.BAD_ARITY, f"{k.value} in statement position")
            self.any(node, parent_id, scope)

    def expr(self, node: Optional[Node], parent_id: int, scope: set[str]) -> None:
        if node is None or node.kind is Kind.HOLE:
            self.add(parent_id if node is None else node.node_id, ViolationKind.HOLE_PRESENT, "expression missing")
            return
        k = node.kind
        if k is Kind.NUMBER:
            return
        if k is Kind.IDENT:
            if node.payload not in scope:
                self.add(node.node_id, ViolationKind.UNBOUND_IDENTIFIER, f"{node.payload} is not bound")
            return
        if k is Kind.BINOP:
            if len(node.children) != 2 or node.payload not in BINARY_PREC:
                self.add(node.node_id, ViolationKind.BAD_ARITY, f"binary {node.payload} needs two operands")
        elif k is Kind.UNOP:
            if len(node.children) != 1 or node.payload not in ("-", "not"):
                self.add(node.node_id, ViolationKind.BAD_ARITY, f"unary {node.payload} needs one operand")
        elif k is Kind.CALL:
            name = str(node.payload)
            if name not in BUILTINS:
                self.add(node.node_id, ViolationKind.UNKNOWN_CALL, f"unknown function {name}")
            elif len(node.children) != BUILTINS[name]:
                self.add(node.node_id, ViolationKind.BAD_ARITY, f"{name} takes {BUILTINS[name]} arguments, got {len(node.children)}")
        else:
            self.add(node.node_id, ViolationKind.BAD_ARITY, f"{k.value} in expression position")
            self.any(node, parent_id, scope)
            return
        for child in node.children:
            self.expr(child, node.node_id, scope)

    def any(self, node: Node, parent_id: int, scope: set[str]) -> None:
        """Descend into a misplaced node to report what lies inside it."""
        k = node.kind
        if k is Kind.BLOCK:
            inner = set(scope)
            for child in node.children:
                self.stmt(child, node.node_id, inner)
        elif k is Kind.FNDEF:
            self.fndef(node)
        elif k is Kind.PARAMS:
            for child in node.children:
                if child is None or child.kind is Kind.HOLE:
                    self.add(node.node_id if child is None else child.node_id, ViolationKind.HOLE_PRESENT, "parameter missing")
                elif child.kind is not Kind.IDENT:
                    self.any(child, node.node_id, scope)
        elif k is Kind.PROGRAM:
            self.program(node)
        elif k in (Kind.LET, Kind.RETURN, Kind.IF):
            self.stmt(node, parent_id, set(scope))
        else:
            self.expr(node, parent_id, scope)


def _child(node: Node, i: int) -> Optional[Node]:
    return node.children[i] if i < len(node.children) else None


def all_paths_return(block: Node) -> bool:
    """True if every control path through ``block`` ends in a return."""
    for stmt in block.children:
        if stmt is None:
            continue
        if stmt.kind is Kind.RETURN:
            return True
        if stmt.kind is Kind.IF and len(stmt.children) == 3:
            then, other = stmt.children[1], stmt.children[2]
            if (
                then is not None
                and other is not None
                and then.kind is Kind.BLOCK
                and other.kind is Kind.BLOCK
                and all_paths_return(then)
                and all_paths_return(other)
            ):
                return True
    return False


def validate(ast: Ast, arity: Optional[int] = None) -> ValidityReport:
    """Report every structural violation in ``ast``.

    ``arity`` additionally requires the function to declare exactly that many
    parameters, which is how problem adapters pin a heuristic to a feature
    schema.
    """
    checker = _Checker(arity)
    root = ast.root
    if root.kind is Kind.PROGRAM:
        checker.program(root)
    else:
        checker.add(root.node_id, ViolationKind.BAD_ARITY, f"root is {root.kind.value}, not Program")
        checker.any(root, root.node_id, set())
    return ValidityReport(tuple(checker.out))
