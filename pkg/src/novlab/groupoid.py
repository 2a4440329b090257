"""Free groupoids over finite directed multigraphs with a real valuation.

Words are tuples of signed integers: letter ``+(j+1)`` is generator ``j``
traversed forwards, ``-(j+1)`` is its inverse. Composition is diagrammatic,
``g.h`` means "g then h" and needs ``target(g) == source(h)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ._accel import kernels
from .errors import ParseError, StructuralError, ValidationError

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_']*)(?:\^(-?\d+))?$")


@dataclass(frozen=True)
class ObjectRecord:
    name: str
    morse_index: int


@dataclass(frozen=True)
class GeneratorRecord:
    name: str
    source: str
    target: str
    u_value: float


class GroupoidGraph:
    """Objects and generating edges of a free groupoid."""

    def __init__(self, objects: Iterable[ObjectRecord], generators: Iterable[GeneratorRecord]):
        self.objects: tuple[ObjectRecord, ...] = tuple(objects)
        self.generators: tuple[GeneratorRecord, ...] = tuple(generators)
        self._obj = {}
        for ob in self.objects:
            if not isinstance(ob.name, str) or not ob.name:
                raise ValidationError(f"object name must be a non-empty string, got {ob.name!r}")
            if ob.name in self._obj:
                raise ValidationError(f"duplicate object name {ob.name!r}")
            if isinstance(ob.morse_index, bool) or not isinstance(ob.morse_index, int) or ob.morse_index < 0:
                raise ValidationError(f"object {ob.name!r}: morse_index must be a non-negative integer")
            self._obj[ob.name] = ob
        self._gen = {}
        for j, ge in enumerate(self.generators):
            if not isinstance(ge.name, str) or not _TOKEN.match(ge.name) or ge.name.startswith("1_"):
                raise ValidationError(f"invalid generator name {ge.name!r}")
            if ge.name in self._gen:
                raise ValidationError(f"duplicate generator name {ge.name!r}")
            for end in (ge.source, ge.target):
                if end not in self._obj:
                    raise ValidationError(f"generator {ge.name!r} references unknown object {end!r}")
            if not math.isfinite(ge.u_value):
                raise ValidationError(f"generator {ge.name!r}: u_value must be finite")
            self._gen[ge.name] = j
        self._uvals = tuple(float(ge.u_value) for ge in self.generators)
        self._val_cache: dict = {}
        self._key = (
            tuple((o.name, o.morse_index) for o in self.objects),
            tuple((g.name, g.source, g.target, float(g.u_value)) for g in self.generators),
        )

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, GroupoidGraph):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"GroupoidGraph({len(self.objects)} objects, {len(self.generators)} generators)"

    # lookups

    def has_object(self, name: str) -> bool:
        return name in self._obj

    def morse_index(self, name: str) -> int:
        try:
            return self._obj[name].morse_index
        except KeyError:
            raise ValidationError(f"unknown object {name!r}") from None

    def object_names(self) -> list[str]:
        return [o.name for o in self.objects]

    def generator_index(self, name: str) -> int:
        try:
            return self._gen[name]
        except KeyError:
            raise ValidationError(f"undefined generator {name!r}") from None

    def letter_ends(self, letter: int) -> tuple[str, str]:
        ge = self.generators[abs(letter) - 1]
        return (ge.source, ge.target) if letter > 0 else (ge.target, ge.source)

    def valuation(self, word: tuple) -> float:
        """Correctly rounded signed sum of generator values along ``word``."""
        v = self._val_cache.get(word)
        if v is None:
            u = self._uvals
            v = math.fsum(u[a - 1] if a > 0 else -u[-a - 1] for a in word)
            if len(self._val_cache) < 200_000:
                self._val_cache[word] = v
        return v

    # constructors

    def identity(self, obj: str) -> "Arrow":
        if obj not in self._obj:
            raise ValidationError(f"unknown object {obj!r}")
        return Arrow(self, obj, obj, ())

    def generator(self, name: str) -> "Arrow":
        j = self.generator_index(name)
        ge = self.generators[j]
        return Arrow(self, ge.source, ge.target, (j + 1,))

    def arrow_from_word(self, word: Sequence[int], source: str | None = None) -> "Arrow":
        """Build an arrow from signed letters, reducing and checking chaining."""
        word = tuple(int(a) for a in word)
        for a in word:
            if a == 0 or abs(a) > len(self.generators):
                raise ValidationError(f"letter {a} does not name a generator")
        for a, b in zip(word, word[1:]):
            if self.letter_ends(a)[1] != self.letter_ends(b)[0]:
                raise ValidationError("consecutive letters do not chain")
        if word:
            src = self.letter_ends(word[0])[0]
            if source is not None and source != src:
                raise ValidationError(f"word starts at {src!r}, not {source!r}")
        else:
            if source is None:
                raise ValidationError("an empty word needs an explicit base object")
            src = source
        red = kernels.reduce_word(word)
        tgt = self.letter_ends(word[-1])[1] if word else src
        return Arrow(self, src, tgt, red)

    def parse_arrow(self, text: str) -> "Arrow":
        """Parse ``"e1.e2^-1"``, ``"g^3"`` or ``"1_p"``."""
        s = text.strip()
        if s.startswith("1_"):
            obj = s[2:]
            if obj not in self._obj:
                raise ParseError(f"unknown object {obj!r} in identity arrow", 2)
            return self.identity(obj)
        if not s:
            raise ParseError("empty arrow string", 0)
        letters = []
        pos = 0
        for tok in s.split("."):
            m = _TOKEN.match(tok.strip())
            if not m:
                raise ParseError(f"malformed arrow token {tok!r}", pos)
            name, exp = m.group(1), m.group(2)
            if name not in self._gen:
                raise ParseError(f"undefined generator {name!r}", pos)
            k = 1 if exp is None else int(exp)
            if k == 0:
                raise ParseError("zero exponent in arrow token", pos)
            letter = self._gen[name] + 1
            letters.extend([letter if k > 0 else -letter] * abs(k))
            pos += len(tok) + 1
        try:
            return self.arrow_from_word(letters)
        except ValidationError as exc:
            raise ParseError(str(exc), 0) from None

    # serialization

    @classmethod
    def from_json(cls, doc: Mapping) -> "GroupoidGraph":
        if not isinstance(doc, Mapping):
            raise ValidationError("groupoid document must be an object")
        try:
            objs = [ObjectRecord(str(o["name"]), o["morse_index"]) for o in doc["objects"]]
            gens = [
                GeneratorRecord(str(g["name"]), str(g["source"]), str(g["target"]), float(g["u_value"]))
                for g in doc.get("generators", [])
            ]
        except KeyError as exc:
            raise ValidationError(f"groupoid document: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"groupoid document: {exc}") from None
        return cls(objs, gens)

    def to_json(self) -> dict:
        return {
            "objects": [{"name": o.name, "morse_index": o.morse_index} for o in self.objects],
            "generators": [
                {"name": g.name, "source": g.source, "target": g.target, "u_value": g.u_value}
                for g in self.generators
            ],
        }


class Arrow:
    """Reduced word between two objects of a :class:`GroupoidGraph`."""

    __slots__ = ("graph", "source", "target", "word")

    def __init__(self, graph: GroupoidGraph, source: str, target: str, word: tuple):
        self.graph = graph
        self.source = source
        self.target = target
        self.word = word

    @property
    def key(self) -> tuple:
        return (self.source, self.target, self.word)

    def is_identity(self) -> bool:
        return not self.word

    def is_loop(self) -> bool:
        return self.source == self.target

    def u_value(self) -> float:
        return self.graph.valuation(self.word)

    def then(self, other: "Arrow") -> "Arrow | None":
        return compose(self, other)

    def inverse(self) -> "Arrow":
        return inverse(self)

    def __eq__(self, other):
        if not isinstance(other, Arrow):
            return NotImplemented
        return self.key == other.key and self.graph == other.graph

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Arrow({format_word(self)!r})"

    def __str__(self):
        return format_word(self)


def compose(g: Arrow, h: Arrow) -> Arrow | None:
    """Diagrammatic product "g then h"; ``None`` when the ends do not meet."""
    if g.graph != h.graph:
        raise StructuralError("arrows belong to different graphs")
    if g.target != h.source:
        return None
    return Arrow(g.graph, g.source, h.target, kernels.reduce_concat(g.word, h.word))


def inverse(g: Arrow) -> Arrow:
    return Arrow(g.graph, g.target, g.source, tuple(-a for a in reversed(g.word)))


def u_value(g: Arrow) -> float:
    return g.u_value()


def power(g: Arrow, k: int) -> Arrow:
    """``g^k`` for a loop ``g`` (negative ``k`` uses the inverse)."""
    if not g.is_loop():
        raise ValidationError("powers are only defined for loops")
    base = g if k >= 0 else inverse(g)
    out = g.graph.identity(g.source)
    for _ in range(abs(k)):
        out = compose(out, base)
    return out


def format_key(graph: GroupoidGraph, source: str, word: tuple) -> str:
    """Render a word, compressing runs of a repeated letter as ``name^k``."""
    if not word:
        return f"1_{source}"
    parts = []
    run_letter, run = word[0], 0
    for a in word + (0,):
        if a == run_letter:
            run += 1
            continue
        name = graph.generators[abs(run_letter) - 1].name
        k = run if run_letter > 0 else -run
        parts.append(name if k == 1 else f"{name}^{k}")
        run_letter, run = a, 1
    return ".".join(parts)


def format_word(g: Arrow) -> str:
    return format_key(g.graph, g.source, g.word)
