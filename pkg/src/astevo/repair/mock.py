"""Offline, deterministic stand-in for the repair LLM.

The rule cascade applied by :func:`mock_repair_rules`:

1. holes and empty slots become ``0.0`` in expression position and are
   dropped in statement position; fragments of the wrong kind are treated the
   same way (expressions standing as statements are dropped, statements inside
   expressions become ``0.0``). A missing function body becomes an empty
   block, and missing parameters are restored from the feature schema.
2. unbound identifiers are renamed to the in-scope name at the smallest edit
   distance (parameters first, in order, then lets; ties go to the earliest).
3. ``return 0.0`` is appended to the body if some path lacks a return.
4. text that does not parse is cut back to its longest prefix that parses
   once open brackets are closed, then rules 1-3 run on that.
5. anything still invalid becomes ``fn score(<params>) { return <first> }``.
"""

from __future__ import annotations

from typing import Optional

from ..code import HeuristicCode, Origin, SourceText
from ..hdsl import Ast, Kind, Node, ParseFailure, parse, renumber, tokenize, unparse, validate
from ..hdsl.nodes import EXPR_KINDS, STMT_KINDS
from ..hdsl.validate import all_paths_return
from ..problems.base import FeatureSchema
from ..rng import derive_seed
from .prompts import build_repair_prompt, build_semantic_prompt
from .types import (
    Completion,
    ProviderKind,
    RepairRequest,
    RepairResponse,
    SemanticRequest,
    estimate_tokens,
)

_ZERO = Node(Kind.NUMBER, (), 0.0)
_CLOSE = {"(": ")", "{": "}"}


def fallback_source(schema: FeatureSchema) -> str:
    params = ", ".join(schema.feature_names)
    return f"fn score({params}) {{\n    return {schema.feature_names[0]};\n}}\n"


def edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def salvage_prefix(text: str) -> Optional[Ast]:
    """Longest token prefix of ``text`` that parses after closing brackets."""
    try:
        tokens = tokenize(text)[:-1]
    except ParseFailure as exc:
        try:
            tokens = tokenize(text[: exc.offset])[:-1]
        except ParseFailure:
            return None
    for k in range(len(tokens), 0, -1):
        stack: list[str] = []
        balanced = True
        for tok in tokens[:k]:
            if tok.type == "op" and tok.value in _CLOSE:
                stack.append(_CLOSE[tok.value])
            elif tok.type == "op" and tok.value in (")", "}"):
                if not stack or stack[-1] != tok.value:
                    balanced = False
                    break
                stack.pop()
        if not balanced:
            continue
        end = tokens[k - 1].offset + len(tokens[k - 1].value)
        candidate = text[:end] + " " + " ".join(reversed(stack))
        try:
            return parse(candidate)
        except ParseFailure:
            continue
    return None


class _Fixer:
    """Rules 1 and 2 in one pass over the tree."""

    def __init__(self, schema: FeatureSchema) -> None:
        self.schema = schema

    def program(self, root: Node) -> Optional[Node]:
        fns = [c for c in root.children if c is not None and c.kind is Kind.FNDEF]
        if len(fns) != 1:
            return None
        return Node(Kind.PROGRAM, (self.fndef(fns[0]),))

    def fndef(self, node: Node) -> Node:
        params = node.children[0] if node.children else None
        body = node.children[1] if len(node.children) > 1 else None
        names = list(self.schema.feature_names)
        if params is not None and params.kind is Kind.PARAMS and len(params.children) == len(names):
            items = []
            for i, p in enumerate(params.children):
                if p is not None and p.kind is Kind.IDENT:
                    items.append(p)
                else:
                    items.append(Node(Kind.IDENT, (), names[i]))
            params = Node(Kind.PARAMS, tuple(items))
        elif params is None or params.kind is not Kind.PARAMS:
            params = Node(Kind.PARAMS, tuple(Node(Kind.IDENT, (), n) for n in names))
        scope = [str(p.payload) for p in params.children if p is not None and p.kind is Kind.IDENT]
        if body is None or body.kind is not Kind.BLOCK:
            body = Node(Kind.BLOCK, ())
        return Node(Kind.FNDEF, (params, self.block(body, scope, scope)), node.payload)

    def block(self, node: Node, scope: list[str], params: list[str]) -> Node:
        inner = list(scope)
        out = []
        for child in node.children:
            fixed = self.stmt(child, inner, params)
            if fixed is not None:
                out.append(fixed)
        return Node(Kind.BLOCK, tuple(out))

    def branch(self, node: Optional[Node], scope: list[str], params: list[str]) -> Node:
        if node is None or node.kind is not Kind.BLOCK:
            wrapped = () if node is None or node.kind is Kind.HOLE else (node,)
            node = Node(Kind.BLOCK, wrapped)
        return self.block(node, scope, params)

    def stmt(self, node: Optional[Node], scope: list[str], params: list[str]) -> Optional[Node]:
        if node is None or node.kind not in STMT_KINDS:
            return None
        if node.kind is Kind.LET:
            value = self.expr(_child(node, 0), scope, params)
            scope.append(str(node.payload))
            return Node(Kind.LET, (value,), node.payload)
        if node.kind is Kind.RETURN:
            return Node(Kind.RETURN, (self.expr(_child(node, 0), scope, params),))
        kids = [self.expr(_child(node, 0), scope, params), self.branch(_child(node, 1), scope, params)]
        if len(node.children) > 2 and node.children[2] is not None and node.children[2].kind is not Kind.HOLE:
            kids.append(self.branch(node.children[2], scope, params))
        return Node(Kind.IF, tuple(kids))

    def expr(self, node: Optional[Node], scope: list[str], params: list[str]) -> Node:
        if node is None or node.kind not in EXPR_KINDS or node.kind is Kind.HOLE:
            return _ZERO
        if node.kind is Kind.IDENT:
            name = str(node.payload)
            if name in scope or not scope:
                return node
            return Node(Kind.IDENT, (), self.nearest(name, scope, params))
        if node.kind is Kind.NUMBER:
            return node
        kids = tuple(self.expr(c, scope, params) for c in node.children)
        return Node(node.kind, kids, node.payload)

    @staticmethod
    def nearest(name: str, scope: list[str], params: list[str]) -> str:
        ordered = list(params) + [s for s in scope if s not in params]
        # later lets shadow earlier ones; keep each name once, first position
        seen: list[str] = []
        for s in ordered:
            if s not in seen:
                seen.append(s)
        return min(seen, key=lambda s: (edit_distance(name, s), seen.index(s)))


def _child(node: Node, i: int) -> Optional[Node]:
    return node.children[i] if i < len(node.children) else None


def _ensure_return(root: Node) -> Node:
    fn = root.children[0]
    assert fn is not None
    body = fn.children[1]
    assert body is not None
    if all_paths_return(body):
        return root
    body = Node(Kind.BLOCK, body.children + (Node(Kind.RETURN, (_ZERO,)),))
    return Node(Kind.PROGRAM, (Node(Kind.FNDEF, (fn.children[0], body), fn.payload),))


def mock_repair_rules(icode: HeuristicCode, schema: FeatureSchema) -> str:
    """Apply the rule cascade; the returned source always validates."""
    if icode.is_valid and validate(icode.ast, schema.arity).is_valid:  # type: ignore[arg-type]
        return icode.text
    ast = icode.ast if icode.ast is not None else salvage_prefix(icode.text)
    if ast is not None:
        root = _Fixer(schema).program(ast.root)
        if root is not None:
            root = _ensure_return(root)
            fixed = Ast(renumber(root))
            if validate(fixed, schema.arity).is_valid:
                return unparse(fixed)
    return fallback_source(schema)


def _blend(a: Ast, b: Ast, schema: FeatureSchema) -> Optional[Ast]:
    """Average parent ``a``'s returns with parent ``b``'s inlined return expression."""
    fn_b = b.root.children[0]
    body_b = fn_b.children[1]  # type: ignore[union-attr]
    env: dict[str, Node] = {}
    expr_b: Optional[Node] = None
    for stmt in body_b.children:  # type: ignore[union-attr]
        if stmt.kind is Kind.LET:
            env[str(stmt.payload)] = _substitute(stmt.children[0], env)
        elif stmt.kind is Kind.RETURN:
            expr_b = _substitute(stmt.children[0], env)
            break
        else:
            return None
    if expr_b is None:
        return None
    half = Node(Kind.NUMBER, (), 0.5)

    def go(node: Node) -> Node:
        if node.kind is Kind.RETURN:
            mixed = Node(
                Kind.BINOP,
                (Node(Kind.BINOP, (half, node.children[0]), "*"), Node(Kind.BINOP, (half, expr_b), "*")),
                "+",
            )
            return Node(Kind.RETURN, (mixed,))
        if node.kind in (Kind.BLOCK, Kind.IF, Kind.FNDEF, Kind.PROGRAM):
            return Node(node.kind, tuple(go(c) if c is not None else None for c in node.children), node.payload)
        return node

    # a let in parent a may shadow a feature that b's expression reads
    shadowed = {str(n.payload) for n in a.nodes() if n.kind is Kind.LET}
    if any(n.kind is Kind.IDENT and n.payload in shadowed for n in expr_b.walk()):
        return None
    return Ast(renumber(go(a.root)))


def _substitute(node: Node, env: dict[str, Node]) -> Node:
    if node.kind is Kind.IDENT and node.payload in env:
        return env[str(node.payload)]
    if not node.children:
        return node
    return Node(node.kind, tuple(_substitute(c, env) for c in node.children if c is not None), node.payload)


def _tweak(a: Ast, schema: FeatureSchema, salt: int) -> Ast:
    """Scale one numeric literal, or add a small feature term to every return."""
    numbers = [n for n in a.nodes() if n.kind is Kind.NUMBER and n.payload not in (0.0,)]
    if numbers:
        target = numbers[salt % len(numbers)].node_id

        def scale(node: Node) -> Node:
            if node.node_id == target:
                return Node(Kind.NUMBER, (), float(node.payload) * 1.5)  # type: ignore[arg-type]
            return Node(node.kind, tuple(scale(c) if c is not None else None for c in node.children), node.payload, node.node_id)

        return Ast(renumber(scale(a.root)))
    feature = schema.feature_names[salt % schema.arity]
    term = Node(Kind.BINOP, (Node(Kind.NUMBER, (), 0.1), Node(Kind.IDENT, (), feature)), "*")

    def add(node: Node) -> Node:
        if node.kind is Kind.RETURN:
            return Node(Kind.RETURN, (Node(Kind.BINOP, (node.children[0], term), "+"),))
        if node.kind in (Kind.BLOCK, Kind.IF, Kind.FNDEF, Kind.PROGRAM):
            return Node(node.kind, tuple(add(c) if c is not None else None for c in node.children), node.payload)
        return node

    return Ast(renumber(add(a.root)))


def mock_semantic(req: SemanticRequest) -> str:
    """Rule-based recombination of parent programs for the baseline operator."""
    a = req.parents[0]
    assert a.ast is not None
    salt = derive_seed(0, *(p.fingerprint for p in req.parents), req.operator)
    child: Optional[Ast] = None
    if req.operator == "crossover" and len(req.parents) > 1 and req.parents[1].ast is not None:
        child = _blend(a.ast, req.parents[1].ast, req.schema)
    if child is None:
        child = _tweak(a.ast, req.schema, salt)
    if not validate(child, req.schema.arity).is_valid:
        return a.text
    return unparse(child)


class MockProvider:
    kind = ProviderKind.MOCK

    def repair(self, req: RepairRequest) -> RepairResponse:
        prompt = build_repair_prompt(req)
        text = mock_repair_rules(req.icode, req.schema)
        return RepairResponse(
            (SourceText(text, Origin.LLM),), estimate_tokens(prompt), estimate_tokens(text), self.kind, prompt
        )

    def semantic(self, req: SemanticRequest) -> RepairResponse:
        prompt = build_semantic_prompt(req)
        text = mock_semantic(req)
        return RepairResponse(
            (SourceText(text, Origin.LLM),), estimate_tokens(prompt), estimate_tokens(text), self.kind, prompt
        )

    def reflect(self, prompt: str, fallback: str) -> Completion:
        return Completion(fallback, estimate_tokens(prompt), estimate_tokens(fallback))

