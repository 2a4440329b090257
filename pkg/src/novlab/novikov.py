"""Truncated Novikov ring arithmetic over a valued free groupoid.

A :class:`RingElement` is a finite integer combination of arrows whose
valuations are all strictly above ``-L``. Products are truncated eagerly, so
two elements are equal exactly when they agree modulo ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from ._accel import kernels
from .errors import (
    NotInvertibleError,
    NovikovConditionError,
    StructuralError,
    ValidationError,
)
from .groupoid import Arrow, GroupoidGraph, format_key


@dataclass(frozen=True)
class TruncationContext:
    """Truncation length ``L`` together with the groupoid it applies to."""

    L: float
    graph: GroupoidGraph

    def __post_init__(self):
        if not (isinstance(self.L, (int, float)) and math.isfinite(self.L) and self.L > 0):
            raise ValidationError(f"truncation length must be a positive real, got {self.L!r}")

    def with_length(self, L: float) -> "TruncationContext":
        return TruncationContext(L, self.graph)


class RingElement:
    """Finite representative of a Novikov series, stored already truncated."""

    __slots__ = ("context", "_terms")

    def __init__(self, context: TruncationContext, terms: Mapping | Iterable = ()):
        self.context = context
        graph = context.graph
        cutoff = -context.L
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, coeff in items:
            if isinstance(key, Arrow):
                if key.graph != graph:
                    raise StructuralError("arrow belongs to a different graph")
                key = key.key
            if isinstance(coeff, bool) or not isinstance(coeff, int):
                raise ValidationError(f"coefficients must be integers, got {coeff!r}")
            if not graph.valuation(key[2]) > cutoff:
                continue
            c = acc.get(key, 0) + coeff
            if c:
                acc[key] = c
            else:
                acc.pop(key, None)
        self._terms = acc

    @classmethod
    def _raw(cls, context: TruncationContext, terms: dict) -> "RingElement":
        obj = cls.__new__(cls)
        obj.context = context
        obj._terms = terms
        return obj

    # constructors

    @classmethod
    def zero(cls, context: TruncationContext) -> "RingElement":
        return cls._raw(context, {})

    @classmethod
    def from_arrow(cls, arrow: Arrow, context: TruncationContext, coeff: int = 1) -> "RingElement":
        return cls(context, [(arrow, coeff)])

    # views

    @property
    def terms(self) -> dict[Arrow, int]:
        g = self.context.graph
        return {Arrow(g, s, t, w): c for (s, t, w), c in self._terms.items()}

    def raw_terms(self) -> dict:
        """Terms keyed by ``(source, target, word)``; a copy."""
        return dict(self._terms)

    def coefficient(self, arrow: Arrow) -> int:
        return self._terms.get(arrow.key, 0)

    def support(self) -> list[Arrow]:
        return [a for a, _ in self.sorted_terms()]

    def sorted_terms(self) -> list[tuple[Arrow, int]]:
        """Terms ordered by valuation (highest first), then by rendered word."""
        g = self.context.graph
        rows = []
        for (s, t, w), c in self._terms.items():
            rows.append((-g.valuation(w), format_key(g, s, w), Arrow(g, s, t, w), c))
        rows.sort(key=lambda r: (r[0], r[1]))
        return [(r[2], r[3]) for r in rows]

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def is_congruence_safe(self) -> bool:
        """True when no term has positive valuation.

        Truncation commutes with products only for such elements.
        """
        g = self.context.graph
        return all(g.valuation(w) <= 0 for (_, _, w) in self._terms)

    # arithmetic

    def _check(self, other: "RingElement") -> None:
        if not isinstance(other, RingElement):
            raise StructuralError("expected a RingElement")
        if self.context != other.context:
            raise StructuralError("ring elements have different truncation contexts")

    def __add__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = one(self.context) * other
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return RingElement._raw(self.context, out)

    __radd__ = __add__

    def __neg__(self):
        return RingElement._raw(self.context, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = one(self.context) * other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            if other == 0:
                return RingElement.zero(self.context)
            return RingElement._raw(self.context, {k: c * other for k, c in self._terms.items()})
        if not isinstance(other, RingElement):
            return NotImplemented
        self._check(other)
        a = [(s, t, w, c) for (s, t, w), c in self._terms.items()]
        b = [(s, t, w, c) for (s, t, w), c in other._terms.items()]
        g = self.context.graph
        return RingElement._raw(self.context, kernels.mul_terms(a, b, g.valuation, -self.context.L))

    def __rmul__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError("ring powers need a non-negative integer exponent")
        out = one(self.context)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.context == other.context and self._terms == other._terms

    def __hash__(self):
        return hash((self.context.L, frozenset(self._terms.items())))

    # rendering and serialization

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"RingElement({render(self)!r}, L={self.context.L})"

    def to_json(self) -> dict:
        g = self.context.graph
        return {
            "L": self.context.L,
            "terms": [{"arrow": format_key(g, a.source, a.word), "coeff": c} for a, c in self.sorted_terms()],
        }

    @classmethod
    def from_json(cls, doc: Mapping, graph: GroupoidGraph, L: float | None = None) -> "RingElement":
        if not isinstance(doc, Mapping):
            raise ValidationError("ring element document must be an object")
        try:
            length = float(doc["L"]) if L is None else float(L)
            terms = doc.get("terms", [])
            ctx = TruncationContext(length, graph)
            pairs = []
            for t in terms:
                coeff = t["coeff"]
                if isinstance(coeff, bool) or not isinstance(coeff, int):
                    raise ValidationError(f"coefficient must be an integer, got {coeff!r}")
                pairs.append((graph.parse_arrow(str(t["arrow"])), coeff))
        except KeyError as exc:
            raise ValidationError(f"ring element document: missing field {exc.args[0]!r}") from None
        return cls(ctx, pairs)


def render(a: RingElement) -> str:
    """Human-readable form such as ``"1_p - g^2"`` or ``"0"``."""
    parts = []
    for arrow, c in a.sorted_terms():
        word = format_key(a.context.graph, arrow.source, arrow.word)
        mag = abs(c)
        body = word if mag == 1 else f"{mag}*{word}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts) if parts else "0"


# module-level operations


def add(a: RingElement, b: RingElement) -> RingElement:
    return a + b


def mul(a: RingElement, b: RingElement) -> RingElement:
    return a * b


def one(context: TruncationContext) -> RingElement:
    """Sum of all identity arrows."""
    return RingElement._raw(context, {(o.name, o.name, ()): 1 for o in context.graph.objects})


def identity_at(context: TruncationContext, obj: str) -> RingElement:
    return RingElement.from_arrow(context.graph.identity(obj), context)


def truncate(a: RingElement, L: float) -> RingElement:
    """Drop terms with valuation ``<= -L``; the result lives at length ``L``."""
    if L > a.context.L:
        raise ValidationError(f"cannot truncate from L={a.context.L} up to L={L}")
    ctx = a.context.with_length(L)
    g = ctx.graph
    return RingElement._raw(ctx, {k: c for k, c in a._terms.items() if g.valuation(k[2]) > -L})


def l_equal(a: RingElement, b: RingElement, L: float) -> bool:
    """``a`` and ``b`` agree on every arrow with valuation above ``-L``."""
    if a.context.graph != b.context.graph:
        raise StructuralError("ring elements belong to different graphs")
    if L > a.context.L or L > b.context.L:
        raise ValidationError("comparison length exceeds an operand's truncation length")
    g = a.context.graph
    keys = set(a._terms) | set(b._terms)
    return all(
        a._terms.get(k, 0) == b._terms.get(k, 0) for k in keys if g.valuation(k[2]) > -L
    )


def _check_negative_loop(g: Arrow) -> None:
    if not g.is_loop():
        raise ValidationError(f"{g} is not a loop")
    if not g.u_value() < 0:
        raise NovikovConditionError(f"loop {g} has non-negative valuation {g.u_value()}")


def geometric_series(g: Arrow, context: TruncationContext) -> RingElement:
    """``1 + g + g^2 + ...`` keeping exactly the powers with ``u(g^j) > -L``."""
    _check_negative_loop(g)
    graph = context.graph
    cutoff = -context.L
    out = {}
    word = ()
    while True:
        if not graph.valuation(word) > cutoff:
            break
        out[(g.source, g.source, word)] = 1
        nxt = kernels.reduce_concat(word, g.word)
        if graph.valuation(nxt) >= graph.valuation(word):
            raise NovikovConditionError("loop powers do not decrease in valuation")
        word = nxt
    return RingElement._raw(context, out)


def unit_inverse(a: RingElement) -> RingElement:
    """Neumann-series inverse of ``e + r``.

    ``e`` is a sum of identity arrows (coefficient 1) over a set ``S`` of
    objects and ``r`` is supported on arrows between objects of ``S`` with
    strictly negative valuation. The result ``b`` satisfies ``a*b == b*a == e``
    at the context's length; with ``S`` all objects, ``e`` is ``one``.
    """
    ctx = a.context
    g = ctx.graph
    base = set()
    rest = {}
    for (s, t, w), c in a._terms.items():
        if not w:
            if c != 1:
                raise NotInvertibleError(f"identity 1_{s} has coefficient {c}, expected 1")
            base.add(s)
        else:
            if not g.valuation(w) < 0:
                raise NotInvertibleError(f"term {format_key(g, s, w)} does not have negative valuation")
            rest[(s, t, w)] = c
    for s, t, _ in rest:
        if s not in base or t not in base:
            raise NotInvertibleError("negative part leaves the support of the identity part")
    e = RingElement._raw(ctx, {(p, p, ()): 1 for p in base})
    if not base:
        raise NotInvertibleError("element has no identity part")
    minus_r = RingElement._raw(ctx, {k: -c for k, c in rest.items()})
    out = e
    term = e
    while True:
        term = term * minus_r
        if not term:
            break
        out = out + term
    return out
