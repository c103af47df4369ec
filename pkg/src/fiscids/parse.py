"""Precedence-climbing parser for the infix expression grammar.

    expr    := expr ('+'|'-') expr | expr ('*'|'/') expr | '-' expr
             | expr '^' expr | '(' expr ')' | name '(' args ')' | name | number

``^`` is right associative and binds tighter than unary minus, so
``-x^2`` is ``-(x^2)`` and ``x^-2`` is allowed.  Numbers are exact:
``0.5`` parses to 1/2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import expr as E
from .errors import ExprSyntaxError, UnknownIdentifier

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_UNARY_PREC = 3


@dataclass
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        tokens.append(Token(kind, "^" if tok == "**" else tok, start))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.tokens = tokenize(text)
        self.i = 0
        self.names = set(names)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        tok = self.advance()
        if tok.text != text or tok.kind != "op":
            raise ExprSyntaxError(tok.pos, f"expected {text!r}, found {tok.text or 'end of input'!r}")

    def expression(self, min_prec: int = 0) -> E.Expr:
        lhs = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY:
                return lhs
            prec, assoc = _BINARY[tok.text]
            if prec < min_prec:
                return lhs
            self.advance()
            if tok.text == "^":
                rhs = self.expression(_UNARY_PREC)
                lhs = _power(lhs, rhs)
                continue
            rhs = self.expression(prec + 1 if assoc == "left" else prec)
            if tok.text == "+":
                lhs = E.add(lhs, rhs)
            elif tok.text == "-":
                lhs = E.sub(lhs, rhs)
            elif tok.text == "*":
                lhs = E.mul(lhs, rhs)
            else:
                lhs = E.div(lhs, rhs)

    def prefix(self) -> E.Expr:
        tok = self.advance()
        if tok.kind == "num":
            return E.Const(Fraction(tok.text))
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "op" and tok.text == "-":
            return E.neg(self.expression(_UNARY_PREC))
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if tok.kind == "end":
            raise ExprSyntaxError(tok.pos, "unexpected end of input")
        raise ExprSyntaxError(tok.pos, f"unexpected {tok.text!r}")

    def name(self, tok: Token) -> E.Expr:
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            kind = tok.text
            arity = E.SUPPORTED_FUNCTIONS.get(kind, E.OPAQUE_FUNCTIONS.get(kind))
            if arity is None:
                raise UnknownIdentifier(kind)
            self.advance()
            args = [self.expression(0)]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                args.append(self.expression(0))
            self.expect(")")
            if len(args) != arity:
                raise ExprSyntaxError(tok.pos, f"{kind} takes {arity} argument(s), got {len(args)}")
            if kind == "pow":
                return _power(*args)
            if kind in E.OPAQUE_FUNCTIONS:
                return E.Func(kind, tuple(args))
            return E.func(kind, *args)
        if tok.text in self.names:
            return E.Var(tok.text)
        if tok.text in E.NAMED_CONSTANTS:
            return E.NamedConst(tok.text)
        raise UnknownIdentifier(tok.text)


def _power(base: E.Expr, exponent: E.Expr) -> E.Expr:
    if isinstance(exponent, E.Const):
        if exponent.value.denominator == 1:
            return E.ipow(base, int(exponent.value))
        return E.func("pow", base, exponent)
    return E.func("pow", base, exponent)


def parse(text: str, variables: Sequence = ()) -> E.Expr:
    """Parse ``text`` over the declared variables (names or :class:`VarId`)."""
    names = [v.name if isinstance(v, E.VarId) else str(v) for v in variables]
    p = _Parser(text, names)
    result = p.expression(0)
    tok = p.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(tok.pos, f"unexpected {tok.text!r}")
    return result


def to_text(e: E.Expr) -> str:
    return E.to_str(e)
