"""Novikov chain complexes: graded generators with ring-valued incidences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ValidationError, StructuralError
from .groupoid import GroupoidGraph
from .novikov import RingElement, TruncationContext


@dataclass(frozen=True)
class DSquaredReport:
    ok: bool
    pair: tuple[str, str] | None = None
    residue: RingElement | None = None

    def __bool__(self):
        return self.ok


class NovikovComplex:
    """Immutable complex; every edit returns a new instance."""

    def __init__(self, context: TruncationContext, incidences: Mapping | None = None):
        self.context = context
        self.graph: GroupoidGraph = context.graph
        self._inc: dict[tuple[str, str], RingElement] = {}
        for (p, q), value in (incidences or {}).items():
            self._validate(p, q, value)
            if value:
                self._inc[(p, q)] = value

    def _validate(self, p: str, q: str, value: RingElement) -> None:
        g = self.graph
        for name in (p, q):
            if not g.has_object(name):
                raise ValidationError(f"unknown generator {name!r}")
        if g.morse_index(q) != g.morse_index(p) - 1:
            raise ValidationError(
                f"incidence <{p},{q}> needs index({q}) = index({p}) - 1, "
                f"got {g.morse_index(q)} and {g.morse_index(p)}"
            )
        if not isinstance(value, RingElement):
            raise ValidationError("incidence value must be a RingElement")
        if value.context != self.context:
            raise StructuralError("incidence value has a different truncation context")
        for (s, t, w) in value.raw_terms():
            if s != p or t != q:
                raise ValidationError(f"incidence <{p},{q}> has a term from {s!r} to {t!r}")
            if not g.valuation(w) < 0:
                raise ValidationError(f"incidence <{p},{q}> has a term with non-negative valuation")

    # accessors

    def generators(self, degree: int | None = None) -> list[str]:
        names = self.graph.object_names()
        if degree is None:
            return names
        return [n for n in names if self.graph.morse_index(n) == degree]

    def get_incidence(self, p: str, q: str) -> RingElement:
        return self._inc.get((p, q), RingElement.zero(self.context))

    def incidences(self) -> dict[tuple[str, str], RingElement]:
        return dict(self._inc)

    def set_incidence(self, p: str, q: str, value: RingElement) -> "NovikovComplex":
        self._validate(p, q, value)
        inc = dict(self._inc)
        if value:
            inc[(p, q)] = value
        else:
            inc.pop((p, q), None)
        return NovikovComplex._trusted(self.context, inc)

    @classmethod
    def _trusted(cls, context, inc):
        obj = cls.__new__(cls)
        obj.context = context
        obj.graph = context.graph
        obj._inc = inc
        return obj

    def boundary_of(self, p: str) -> dict[str, RingElement]:
        """Row of ``p``: the nonzero incidences ``<p,q>`` keyed by ``q``."""
        if not self.graph.has_object(p):
            raise ValidationError(f"unknown generator {p!r}")
        return {q: v for (a, q), v in sorted(self._inc.items()) if a == p}

    def check_d_squared(self) -> DSquaredReport:
        """Check that the composite of two differentials vanishes modulo L."""
        g = self.graph
        names = self.graph.object_names()
        for p in names:
            row = self.boundary_of(p)
            if not row:
                continue
            for r in names:
                if g.morse_index(r) != g.morse_index(p) - 2:
                    continue
                total = RingElement.zero(self.context)
                for q, pq in row.items():
                    qr = self._inc.get((q, r))
                    if qr is not None:
                        total = total + pq * qr
                if total:
                    return DSquaredReport(False, (p, r), total)
        return DSquaredReport(True)

    def __eq__(self, other):
        if not isinstance(other, NovikovComplex):
            return NotImplemented
        return self.context == other.context and self._inc == other._inc

    def __hash__(self):
        return hash((self.context, frozenset(self._inc.items())))

    # serialization

    def to_json(self) -> dict:
        return {
            "context": {"L": self.context.L},
            "incidences": [
                {"p": p, "q": q, "element": v.to_json()} for (p, q), v in sorted(self._inc.items())
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping, graph: GroupoidGraph, L: float | None = None) -> "NovikovComplex":
        if not isinstance(doc, Mapping):
            raise ValidationError("complex document must be an object")
        try:
            length = float(doc["context"]["L"]) if L is None else float(L)
            ctx = TruncationContext(length, graph)
            inc = {}
            for n, entry in enumerate(doc.get("incidences", [])):
                key = (str(entry["p"]), str(entry["q"]))
                if key in inc:
                    raise ValidationError(f"incidences[{n}]: duplicate entry {key}")
                inc[key] = RingElement.from_json(entry["element"], graph, L=length)
        except KeyError as exc:
            raise ValidationError(f"complex document: missing field {exc.args[0]!r}") from None
        return cls(ctx, inc)
