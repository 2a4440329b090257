"""Scenario documents for the command-line runner.

A scenario is one JSON object::

    {"groupoid": {...}, "complex": {...}, "script": {...},
     "simulator": {...}, "L": 5.0, "format": "text"}

Every part except ``groupoid`` is optional. A part given as a string is read
as a path relative to the scenario file. A script may also be written as
``{"doubling": "g"}``, which expands to the doubling loop around ``g``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .bifurcation import SlideScript, doubling_script
from .complex import NovikovComplex
from .errors import ValidationError
from .groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from .holonomy import DEFAULT_RADIUS, HolonomyFamily, make_elementary_family
from .morse_model import MorseModelConfig
from .novikov import TruncationContext

FORMATS = ("json", "csv", "text")


def default_ring_graph() -> GroupoidGraph:
    """One object ``p`` with a loop ``g`` of value ``-1``."""
    return GroupoidGraph([ObjectRecord("p", 0)], [GeneratorRecord("g", "p", "p", -1.0)])


def default_sim_graph() -> GroupoidGraph:
    """``p`` of index 2 with loop ``g`` (value -1) and ``G: p -> q`` (value -0.5)."""
    return GroupoidGraph(
        [ObjectRecord("p", 2), ObjectRecord("q", 1)],
        [GeneratorRecord("g", "p", "p", -1.0), GeneratorRecord("G", "p", "q", -0.5)],
    )


def _real(doc: Mapping, key: str, default=None) -> float:
    v = doc.get(key, default)
    if v is None:
        raise ValidationError(f"simulator: missing field {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"simulator: field {key!r} must be a finite number, got {v!r}")
    return float(v)


def _pair(doc: Mapping, key: str, default) -> tuple[float, float]:
    v = doc.get(key, default)
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValidationError(f"simulator: field {key!r} must be a pair of numbers")
    a, b = (_real({key: x}, key) for x in v)
    if not a < b:
        raise ValidationError(f"simulator: field {key!r} must be increasing")
    return a, b


@dataclass(frozen=True)
class SimulatorConfig:
    model: MorseModelConfig
    omega_phi: float
    omega_psi: float
    eta: float
    a_minus: tuple | None = None
    a_plus: tuple | None = None
    radius: float = DEFAULT_RADIUS
    s_range: tuple[float, float] = (-0.02, 0.02)
    t_range: tuple[float, float] = (-0.1, 0.1)
    grid: tuple[int, int] = (41, 41)
    s_values: tuple[float, ...] = (-0.02, -0.01, 0.01, 0.02)
    k_max: int = 2
    L: float | None = None
    b_latitude: float = 0.5
    loop: str = "g"
    gamma: str = "G"

    @classmethod
    def from_json(cls, doc: Mapping) -> "SimulatorConfig":
        if not isinstance(doc, Mapping):
            raise ValidationError("simulator document must be an object")
        model = MorseModelConfig.from_json({"n": doc.get("n", 4), "i": doc.get("i", 2), **{
            k: doc[k] for k in ("delta", "delta_star") if k in doc}})
        grid = doc.get("grid", [41, 41])
        if isinstance(grid, int) and not isinstance(grid, bool):
            grid = [grid, grid]
        if not (isinstance(grid, (list, tuple)) and len(grid) == 2 and all(isinstance(g, int) and g >= 2 for g in grid)):
            raise ValidationError("simulator: grid must be an integer >= 2 or a pair of them")
        k_max = doc.get("k_max", 2)
        if isinstance(k_max, bool) or not isinstance(k_max, int) or k_max < 1:
            raise ValidationError("simulator: k_max must be a positive integer")
        s_values = doc.get("s_values", [-0.02, -0.01, 0.01, 0.02])
        if not isinstance(s_values, (list, tuple)) or not s_values:
            raise ValidationError("simulator: s_values must be a non-empty list")
        vecs = {}
        for key in ("a_minus", "a_plus"):
            v = doc.get(key)
            if v is not None:
                if not isinstance(v, (list, tuple)) or not v:
                    raise ValidationError(f"simulator: {key} must be a list of numbers")
                vecs[key] = tuple(_real({key: x}, key) for x in v)
        if "a_minus" in vecs and len(vecs["a_minus"]) != model.i:
            raise ValidationError(f"simulator: a_minus needs {model.i} entries")
        if "a_plus" in vecs and len(vecs["a_plus"]) != model.n - model.i:
            raise ValidationError(f"simulator: a_plus needs {model.n - model.i} entries")
        return cls(
            model=model,
            omega_phi=_real(doc, "omega_phi"),
            omega_psi=_real(doc, "omega_psi"),
            eta=_real(doc, "eta", 1.0),
            a_minus=vecs.get("a_minus"),
            a_plus=vecs.get("a_plus"),
            radius=_real(doc, "radius", DEFAULT_RADIUS),
            s_range=_pair(doc, "s_range", [-0.02, 0.02]),
            t_range=_pair(doc, "t_range", [-0.1, 0.1]),
            grid=(int(grid[0]), int(grid[1])),
            s_values=tuple(_real({"s_values": x}, "s_values") for x in s_values),
            k_max=k_max,
            L=None if doc.get("L") is None else _real(doc, "L"),
            b_latitude=_real(doc, "b_latitude", 0.5),
            loop=str(doc.get("loop", "g")),
            gamma=str(doc.get("gamma", "G")),
        )

    def family(self) -> HolonomyFamily:
        return make_elementary_family(
            self.model,
            self.omega_phi,
            self.omega_psi,
            self.eta,
            a_minus=self.a_minus,
            a_plus=self.a_plus,
            radius=self.radius,
        )


@dataclass(frozen=True)
class Scenario:
    graph: GroupoidGraph
    L: float
    complex_doc: Mapping | None = None
    script_doc: Mapping | None = None
    simulator: SimulatorConfig | None = None
    format: str = "text"
    raw: Mapping = field(default_factory=dict, compare=False)

    def context(self, L: float | None = None) -> TruncationContext:
        return TruncationContext(self.L if L is None else L, self.graph)

    def complex(self, L: float | None = None) -> NovikovComplex:
        if self.complex_doc is None:
            raise ValidationError("scenario has no complex")
        return NovikovComplex.from_json(self.complex_doc, self.graph, L=self.L if L is None else L)

    def script(self) -> SlideScript:
        if self.script_doc is None:
            raise ValidationError("scenario has no slide script")
        doc = self.script_doc
        if "doubling" in doc:
            try:
                g = self.graph.parse_arrow(str(doc["doubling"]))
            except ValueError as exc:
                raise ValidationError(f"script: {exc}") from None
            return doubling_script(g)
        return SlideScript.from_json(doc, self.graph)


def _part(doc: Mapping, key: str, base: Path | None) -> Any:
    v = doc.get(key)
    if isinstance(v, str):
        path = Path(v) if base is None else base / v
        try:
            return json.loads(path.read_text())
        except OSError as exc:
            raise ValidationError(f"{key}: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{key}: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return v


def scenario_from_json(doc: Mapping, base: Path | None = None, *, default_graph: GroupoidGraph | None = None) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ValidationError("scenario must be a JSON object")
    gdoc = _part(doc, "groupoid", base)
    sdoc = _part(doc, "simulator", base)
    sim = SimulatorConfig.from_json(sdoc) if sdoc is not None else None
    if gdoc is not None:
        graph = GroupoidGraph.from_json(gdoc)
    elif default_graph is not None:
        graph = default_graph
    else:
        graph = default_sim_graph() if sim is not None else default_ring_graph()
    L = doc.get("L")
    if L is None and sim is not None:
        L = sim.L
    if L is None:
        L = 5.0
    if isinstance(L, bool) or not isinstance(L, (int, float)):
        raise ValidationError(f"scenario: L must be a number, got {L!r}")
    fmt = doc.get("format", "text")
    if fmt not in FORMATS:
        raise ValidationError(f"scenario: format must be one of {FORMATS}, got {fmt!r}")
    cdoc = _part(doc, "complex", base)
    scdoc = _part(doc, "script", base)
    if scdoc is not None and not isinstance(scdoc, Mapping):
        raise ValidationError("script document must be an object")
    return Scenario(graph, float(L), cdoc, scdoc, sim, fmt, doc)


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario {p} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return scenario_from_json(doc, p.parent)
