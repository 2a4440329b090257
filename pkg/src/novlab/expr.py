"""Infix expressions over a truncated Novikov ring.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := "-" unary | power
    power  := atom ("^" INT)?
    atom   := INT | NAME | "1_" NAME | "inv" "(" expr ")" | "(" expr ")"

``NAME`` is a generator of the groupoid, an integer ``k`` stands for ``k``
times the sum of all identities, and ``1_p`` is the identity at ``p``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .novikov import RingElement, TruncationContext, identity_at, one, unit_inverse

_TOKEN = re.compile(
    r"\s*(?:(?P<ident1>1_[A-Za-z0-9_]+)|(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, context: TruncationContext):
        self.toks = tokenize(text)
        self.i = 0
        self.ctx = context
        self.graph = context.graph

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str) -> Token:
        t = self.take()
        if t.text != op:
            raise ParseError(f"expected {op!r}, found {t.text or 'end of input'!r}", t.pos)
        return t

    def parse(self) -> RingElement:
        if self.peek().kind == "end":
            raise ParseError("empty expression", 0)
        val = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.pos)
        return val

    def expr(self) -> RingElement:
        val = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> RingElement:
        val = self.unary()
        while self.peek().text == "*":
            self.take()
            val = val * self.unary()
        return val

    def unary(self) -> RingElement:
        if self.peek().text == "-":
            self.take()
            return -self.unary()
        return self.power()

    def power(self) -> RingElement:
        val = self.atom()
        if self.peek().text == "^":
            self.take()
            t = self.take()
            if t.kind != "int":
                raise ParseError("exponent must be a non-negative integer", t.pos)
            val = val ** int(t.text)
        return val

    def atom(self) -> RingElement:
        t = self.take()
        if t.kind == "int":
            return one(self.ctx) * int(t.text)
        if t.kind == "ident1":
            obj = t.text[2:]
            if not self.graph.has_object(obj):
                raise ParseError(f"unknown object {obj!r}", t.pos + 2)
            return identity_at(self.ctx, obj)
        if t.kind == "name":
            if t.text == "inv" and self.peek().text == "(":
                self.take()
                inner = self.expr()
                self.expect(")")
                return unit_inverse(inner)
            try:
                arrow = self.graph.generator(t.text)
            except ValidationError:
                raise ParseError(f"undefined generator {t.text!r}", t.pos) from None
            return RingElement.from_arrow(arrow, self.ctx)
        if t.text == "(":
            val = self.expr()
            self.expect(")")
            return val
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)


def evaluate(text: str, context: TruncationContext) -> RingElement:
    """Evaluate ``text`` in ``context``; results are truncated at every step."""
    return _Parser(text, context).parse()
