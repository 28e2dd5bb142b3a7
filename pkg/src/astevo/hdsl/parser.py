"""Recursive descent parser for the heuristic DSL.

The grammar is deliberately permissive about *where* constructs appear (an
expression may stand as a statement, a block may appear inside an
expression, the hole token may fill any slot) so that every tree the
destruction operators can build has a textual form that parses back.
Whether the result is a usable heuristic is the validator's business.
"""

from __future__ import annotations

from typing import Optional

from .lexer import ParseFailure, Token, tokenize
from .nodes import Ast, Kind, Node, renumber

# binding strength, loosest first
PREC_OR = 1
PREC_AND = 2
PREC_NOT = 3
PREC_CMP = 4
PREC_ADD = 5
PREC_MUL = 6
PREC_NEG = 7
PREC_ATOM = 8

BINARY_PREC = {
    "or": PREC_OR,
    "and": PREC_AND,
    "<": PREC_CMP,
    "<=": PREC_CMP,
    ">": PREC_CMP,
    ">=": PREC_CMP,
    "==": PREC_CMP,
    "!=": PREC_CMP,
    "+": PREC_ADD,
    "-": PREC_ADD,
    "*": PREC_MUL,
    "/": PREC_MUL,
    "%": PREC_MUL,
}


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, type_: str, value: Optional[str] = None) -> bool:
        t = self.tok
        return t.type == type_ and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, type_: str, value: Optional[str] = None) -> Token:
        if not self.at(type_, value):
            raise ParseFailure(self.tok.offset, [value or type_], f"expected {value or type_!r}, found {self.tok.value or 'end of input'!r}")
        return self.advance()

    def skip_semis(self) -> None:
        while self.at("op", ";"):
            self.advance()

    # statements

    def program(self) -> Node:
        stmts = []
        self.skip_semis()
        while not self.at("eof"):
            stmts.append(self.statement())
            self.skip_semis()
        if not stmts:
            raise ParseFailure(self.tok.offset, ["fn"], "empty program")
        return Node(Kind.PROGRAM, tuple(stmts))

    def statement(self) -> Node:
        t = self.tok
        if t.type == "kw":
            if t.value == "let":
                self.advance()
                name = self.expect("name").value
                self.expect("op", "=")
                return Node(Kind.LET, (self.expr(),), name)
            if t.value == "return":
                self.advance()
                return Node(Kind.RETURN, (self.expr(),))
            if t.value == "if":
                return self.if_stmt()
            if t.value == "fn":
                return self.fndef()
        if self.at("op", "{"):
            return self.block()
        return self.expr()

    def if_stmt(self) -> Node:
        self.expect("kw", "if")
        cond = self.expr()
        then = self.block_slot()
        if not self.at("kw", "else"):
            return Node(Kind.IF, (cond, then))
        self.advance()
        if self.at("kw", "if"):
            # `else if` is sugar for an else-block holding one if statement
            other = Node(Kind.BLOCK, (self.if_stmt(),))
        else:
            other = self.block_slot()
        return Node(Kind.IF, (cond, then, other))

    def fndef(self) -> Node:
        self.expect("kw", "fn")
        name = self.expect("name").value
        if self.at("hole"):
            self.advance()
            params = Node(Kind.HOLE)
        else:
            self.expect("op", "(")
            items = []
            if not self.at("op", ")"):
                items.append(self.param())
                while self.at("op", ","):
                    self.advance()
                    items.append(self.param())
            self.expect("op", ")")
            params = Node(Kind.PARAMS, tuple(items))
        return Node(Kind.FNDEF, (params, self.block_slot()), name)

    def param(self) -> Node:
        if self.at("hole"):
            self.advance()
            return Node(Kind.HOLE)
        if not self.at("name"):
            raise ParseFailure(self.tok.offset, ["parameter name", "⟨?⟩"])
        return Node(Kind.IDENT, (), self.advance().value)

    def block_slot(self) -> Node:
        if self.at("hole"):
            self.advance()
            return Node(Kind.HOLE)
        if not self.at("op", "{"):
            raise ParseFailure(self.tok.offset, ["{", "⟨?⟩"])
        return self.block()

    def block(self) -> Node:
        self.expect("op", "{")
        stmts = []
        self.skip_semis()
        while not self.at("op", "}"):
            if self.at("eof"):
                raise ParseFailure(self.tok.offset, ["}"])
            stmts.append(self.statement())
            self.skip_semis()
        self.advance()
        return Node(Kind.BLOCK, tuple(stmts))

    # expressions

    def expr(self, min_prec: int = PREC_OR) -> Node:
        if min_prec <= PREC_NOT and self.at("kw", "not"):
            self.advance()
            left = Node(Kind.UNOP, (self.expr(PREC_NOT),), "not")
        else:
            left = self.unary()
        while True:
            t = self.tok
            if t.type not in ("op", "kw"):
                break
            prec = BINARY_PREC.get(t.value)
            if prec is None or prec < min_prec:
                break
            self.advance()
            right = self.expr(prec + 1)
            left = Node(Kind.BINOP, (left, right), t.value)
        return left

    def unary(self) -> Node:
        if self.at("op", "-"):
            self.advance()
            return Node(Kind.UNOP, (self.unary(),), "-")
        return self.primary()

    def primary(self) -> Node:
        t = self.tok
        if t.type == "num":
            self.advance()
            return Node(Kind.NUMBER, (), float(t.value))
        if t.type == "hole":
            self.advance()
            return Node(Kind.HOLE)
        if t.type == "name":
            self.advance()
            if self.at("op", "("):
                self.advance()
                args = []
                if not self.at("op", ")"):
                    args.append(self.expr())
                    while self.at("op", ","):
                        self.advance()
                        args.append(self.expr())
                self.expect("op", ")")
                return Node(Kind.CALL, tuple(args), t.value)
            return Node(Kind.IDENT, (), t.value)
        if self.at("op", "("):
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if self.at("op", "{"):
            return self.block()
        raise ParseFailure(t.offset, ["number", "name", "(", "⟨?⟩"], f"unexpected {t.value or 'end of input'!r}")


def parse(text: str) -> Ast:
    """Parse DSL source into an :class:`Ast`; raises :class:`ParseFailure`."""
    p = _Parser(tokenize(text))
    root = p.program()
    return Ast(renumber(root))
