"""Rewrite factors for crossing a homoclinic self-slide stratum."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .complex import NovikovComplex
from .errors import NovikovConditionError, StructuralError, ValidationError
from .groupoid import Arrow, GroupoidGraph, compose
from .novikov import (
    RingElement,
    TruncationContext,
    geometric_series,
    identity_at,
    unit_inverse,
)

CHARACTERS = ("plus", "minus")
SIGNS = ("positive", "negative")


@dataclass(frozen=True)
class CrossingEvent:
    """Crossing of the stratum attached to loop ``g``.

    ``character`` is the sign of the character value, ``crossing_sign`` the
    direction of the crossing relative to the stratum's co-orientation.
    """

    g: Arrow
    character: str
    crossing_sign: str

    def __post_init__(self):
        if self.character not in CHARACTERS:
            raise ValidationError(f"character must be one of {CHARACTERS}, got {self.character!r}")
        if self.crossing_sign not in SIGNS:
            raise ValidationError(f"crossing sign must be one of {SIGNS}, got {self.crossing_sign!r}")
        if not self.g.is_loop():
            raise ValidationError(f"{self.g} is not a loop")
        if not self.g.u_value() < 0:
            raise NovikovConditionError(f"loop {self.g} has non-negative valuation")

    @property
    def base(self) -> str:
        return self.g.source

    def flipped(self) -> "CrossingEvent":
        other = "negative" if self.crossing_sign == "positive" else "positive"
        return CrossingEvent(self.g, self.character, other)


@dataclass(frozen=True)
class SlideScript:
    events: tuple[CrossingEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        graphs = {e.g.graph for e in self.events}
        if len(graphs) > 1:
            raise StructuralError("script events come from different graphs")

    @classmethod
    def from_json(cls, doc: Mapping, graph: GroupoidGraph) -> "SlideScript":
        if not isinstance(doc, Mapping):
            raise ValidationError("script document must be an object")
        events = []
        for n, ev in enumerate(doc.get("events", [])):
            try:
                events.append(CrossingEvent(graph.parse_arrow(str(ev["g"])), ev["character"], ev["sign"]))
            except KeyError as exc:
                raise ValidationError(f"events[{n}]: missing field {exc.args[0]!r}") from None
            except ValidationError as exc:
                raise ValidationError(f"events[{n}]: {exc}") from None
        return cls(tuple(events))

    def to_json(self) -> dict:
        return {
            "events": [
                {"g": str(e.g), "character": e.character, "sign": e.crossing_sign} for e in self.events
            ]
        }


def _loop_element(g: Arrow, context: TruncationContext) -> RingElement:
    return RingElement.from_arrow(g, context)


def self_slide_factor(e: CrossingEvent, context: TruncationContext) -> RingElement:
    """Left factor applied to the row of ``e.base`` after crossing."""
    if e.g.graph != context.graph:
        raise StructuralError("event loop is not in the context's graph")
    one_p = identity_at(context, e.base)
    g = _loop_element(e.g, context)
    if e.character == "plus":
        if e.crossing_sign == "positive":
            return geometric_series(e.g, context)
        return one_p - g
    if e.crossing_sign == "positive":
        return one_p + g
    return unit_inverse(one_p + g)


def apply_self_slide(c: NovikovComplex, e: CrossingEvent) -> NovikovComplex:
    """Rows at the base get the factor on the left, columns its inverse on the right."""
    p = e.base
    if not c.graph.has_object(p):
        raise ValidationError(f"generator {p!r} is not in the complex")
    if e.g.graph != c.graph:
        raise StructuralError("event loop is not in the complex's graph")
    lam = self_slide_factor(e, c.context)
    lam_inv = unit_inverse(lam)
    out = c
    for (a, b), v in sorted(c.incidences().items()):
        if a == p:
            out = out.set_incidence(a, b, lam * v)
        elif b == p:
            out = out.set_incidence(a, b, v * lam_inv)
    return out


def doubling_factor(g: Arrow, context: TruncationContext) -> RingElement:
    """Inverse of ``1 - g^2``: the series ``1 + g^2 + g^4 + ...``."""
    if not g.is_loop():
        raise ValidationError(f"{g} is not a loop")
    if not g.u_value() < 0:
        raise NovikovConditionError(f"loop {g} has non-negative valuation")
    g2 = compose(g, g)
    return unit_inverse(identity_at(context, g.source) - RingElement.from_arrow(g2, context))


@dataclass(frozen=True)
class LoopAudit:
    ok: bool
    residual: RingElement

    def __bool__(self):
        return self.ok


def loop_consistency(script: SlideScript | Sequence[CrossingEvent], context: TruncationContext, base: str | None = None) -> LoopAudit:
    """Ordered product of the crossing factors, compared with ``1_p``.

    An empty script needs ``base`` to name ``p``; if the graph has one object
    that object is used.
    """
    events = script.events if isinstance(script, SlideScript) else tuple(script)
    bases = {e.base for e in events}
    if len(bases) > 1:
        raise ValidationError(f"script mixes base points {sorted(bases)}")
    if bases:
        p = bases.pop()
        if base is not None and base != p:
            raise ValidationError(f"script is based at {p!r}, not {base!r}")
    elif base is not None:
        p = base
    else:
        names = context.graph.object_names()
        if len(names) != 1:
            raise ValidationError("empty script on a multi-object graph needs an explicit base")
        p = names[0]
    one_p = identity_at(context, p)
    prod = one_p
    for e in events:
        prod = prod * self_slide_factor(e, context)
    return LoopAudit(prod == one_p, prod)


def doubling_script(g: Arrow) -> SlideScript:
    """Small loop around the doubling point: one minus-crossing, one plus-crossing, one for ``g^2``."""
    return SlideScript(
        (
            CrossingEvent(g, "minus", "positive"),
            CrossingEvent(g, "plus", "negative"),
            CrossingEvent(compose(g, g), "plus", "positive"),
        )
    )
