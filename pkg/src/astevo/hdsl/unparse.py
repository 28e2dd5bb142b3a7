"""Tree to text, total over broken trees.

Empty slots and Hole nodes print as the hole token. A node sitting in a slot
that its kind cannot occupy textually is rendered in the nearest form that
re-parses: statements inside expressions and non-blocks in block slots are
wrapped in braces, and parameter lists outside a function header collapse to
the hole token. Trees produced by :func:`parse` never need these fallbacks,
so for them ``parse(unparse(t))`` reproduces ``t`` exactly.
"""

from __future__ import annotations

from typing import Optional

from .nodes import HOLE, Ast, Kind, Node
from .parser import BINARY_PREC, PREC_ATOM, PREC_NEG, PREC_NOT

_INDENT = "    "


def unparse(ast: Ast | Node) -> str:
    root = ast.root if isinstance(ast, Ast) else ast
    if root.kind is Kind.PROGRAM:
        lines: list[str] = []
        for child in root.children:
            lines.extend(_stmt(child, 0))
        return "\n".join(lines) + "\n"
    return "\n".join(_stmt(root, 0)) + "\n"


def _slot(node: Node, i: int) -> Optional[Node]:
    return node.children[i] if i < len(node.children) else None


# statements render to a list of lines at a given indent level


def _stmt(node: Optional[Node], level: int) -> list[str]:
    pad = _INDENT * level
    if node is None or node.kind is Kind.HOLE:
        return [pad + HOLE + ";"]
    k = node.kind
    if k is Kind.LET:
        return [f"{pad}let {node.payload} = {_expr(_slot(node, 0), 0, level)};"]
    if k is Kind.RETURN:
        return [f"{pad}return {_expr(_slot(node, 0), 0, level)};"]
    if k is Kind.IF:
        return _if(node, level)
    if k is Kind.FNDEF:
        head = f"{pad}fn {node.payload}{_params(_slot(node, 0))} "
        return _attach(head, _block_slot(_slot(node, 1), level))
    if k is Kind.BLOCK:
        return _attach(pad, _block(node, level))
    if k is Kind.PROGRAM:
        return _attach(pad, _block(Node(Kind.BLOCK, node.children), level))
    if k is Kind.PARAMS:
        return [pad + HOLE + ";"]
    text = _expr(node, 0, level)
    if text.startswith("{"):
        # a leading brace would start a block statement instead
        text = f"({text})"
    return [f"{pad}{text};"]


def _if(node: Node, level: int) -> list[str]:
    pad = _INDENT * level
    head = f"{pad}if {_expr(_slot(node, 0), 0, level)} "
    lines = _attach(head, _block_slot(_slot(node, 1), level))
    if len(node.children) > 2:
        lines[-1] += " else "
        tail = _block_slot(node.children[2], level)
        lines[-1] += tail[0]
        lines.extend(tail[1:])
    return lines


def _attach(prefix: str, lines: list[str]) -> list[str]:
    return [prefix + lines[0]] + lines[1:]


def _block(node: Node, level: int) -> list[str]:
    """Render a Block; the first line carries no indent (caller prefixes it)."""
    if not node.children:
        return ["{ }"]
    lines = ["{"]
    for child in node.children:
        lines.extend(_stmt(child, level + 1))
    lines.append(_INDENT * level + "}")
    return lines


def _block_slot(node: Optional[Node], level: int) -> list[str]:
    if node is None or node.kind is Kind.HOLE:
        return [HOLE]
    if node.kind is Kind.BLOCK:
        return _block(node, level)
    return _block(Node(Kind.BLOCK, (node,)), level)


def _params(node: Optional[Node]) -> str:
    if node is None or node.kind is Kind.HOLE:
        return " " + HOLE
    if node.kind is Kind.IDENT:
        return f"({node.payload})"
    if node.kind is not Kind.PARAMS:
        return " " + HOLE
    items = [str(c.payload) if c is not None and c.kind is Kind.IDENT else HOLE for c in node.children]
    return "(" + ", ".join(items) + ")"


# expressions render to a single string


def _prec(node: Optional[Node]) -> int:
    if node is None:
        return PREC_ATOM
    if node.kind is Kind.BINOP:
        return BINARY_PREC.get(str(node.payload), PREC_ATOM)
    if node.kind is Kind.UNOP:
        return PREC_NOT if node.payload == "not" else PREC_NEG
    return PREC_ATOM


def _expr(node: Optional[Node], min_prec: int, level: int) -> str:
    text = _expr_bare(node, level)
    if _prec(node) < min_prec:
        return f"({text})"
    return text


def _number(value: float) -> str:
    if value < 0 or (value == 0 and str(value).startswith("-")):
        return f"(-{abs(value)!r})"
    return repr(float(value))


def _inline_block(node: Node, level: int) -> str:
    return " ".join(line.strip() for line in _block(node, level))


def _expr_bare(node: Optional[Node], level: int) -> str:
    if node is None or node.kind is Kind.HOLE:
        return HOLE
    k = node.kind
    if k is Kind.NUMBER:
        return _number(float(node.payload))  # type: ignore[arg-type]
    if k is Kind.IDENT:
        return str(node.payload)
    if k is Kind.CALL:
        args = ", ".join(_expr(c, 0, level) for c in node.children)
        return f"{node.payload}({args})"
    if k is Kind.BINOP:
        op = str(node.payload)
        p = BINARY_PREC.get(op)
        if p is None:
            return HOLE
        left = _expr(_slot(node, 0), p, level)
        right = _expr(_slot(node, 1), p + 1, level)
        return f"{left} {op} {right}"
    if k is Kind.UNOP:
        if node.payload == "not":
            return "not " + _expr(_slot(node, 0), PREC_NOT, level)
        return "-" + _expr(_slot(node, 0), PREC_NEG, level)
    if k is Kind.BLOCK:
        return _inline_block(node, level)
    if k in (Kind.LET, Kind.RETURN, Kind.IF, Kind.FNDEF):
        return _inline_block(Node(Kind.BLOCK, (node,)), level)
    # ParamList or Program: no expression form
    return HOLE
