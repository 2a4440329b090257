import random

import pytest

from novlab.complex import NovikovComplex
from novlab.errors import StructuralError, ValidationError
from novlab.groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from novlab.novikov import RingElement, TruncationContext, render

from builders import cancellation_graph, random_cancellation_complex
from oracles import reduce_by_scanning


@pytest.fixture
def cg():
    return cancellation_graph()


@pytest.fixture
def ctx(cg):
    return TruncationContext(6.0, cg)


def edge(ctx, text, c=1):
    return RingElement.from_arrow(ctx.graph.parse_arrow(text), ctx, c)


def fixture_complex(ctx, sign=-1):
    return NovikovComplex(
        ctx,
        {
            ("p", "q1"): edge(ctx, "alpha"),
            ("q1", "r"): edge(ctx, "gamma"),
            ("p", "q2"): edge(ctx, "alpha.gamma.delta^-1", sign),
            ("q2", "r"): edge(ctx, "delta"),
        },
    )


def test_composites_reduce_to_same_word(cg):
    w1 = cg.parse_arrow("alpha").word + cg.parse_arrow("gamma").word
    w2 = cg.parse_arrow("alpha.gamma.delta^-1").word + cg.parse_arrow("delta").word
    assert reduce_by_scanning(w1) == reduce_by_scanning(w2)


def test_cancellation_fixture_passes(ctx):
    assert fixture_complex(ctx).check_d_squared().ok


def test_wrong_sign_gives_certificate(ctx):
    rep = fixture_complex(ctx, +1).check_d_squared()
    assert not rep.ok
    assert rep.pair == ("p", "r")
    assert render(rep.residue) == "2*alpha.gamma"


def test_two_degree_complex_is_fine(ctx):
    c = NovikovComplex(ctx, {("p", "q1"): edge(ctx, "alpha")})
    assert c.check_d_squared()


def test_set_then_get(ctx):
    c = NovikovComplex(ctx)
    v = edge(ctx, "g.alpha") - edge(ctx, "alpha")
    assert c.set_incidence("p", "q1", v).get_incidence("p", "q1") == v
    assert c.get_incidence("p", "q1").is_zero()


def test_grading_violation(ctx):
    with pytest.raises(ValidationError):
        NovikovComplex(ctx).set_incidence("q1", "q2", edge(ctx, "alpha"))


def test_wrong_ends_rejected(ctx):
    with pytest.raises(ValidationError):
        NovikovComplex(ctx).set_incidence("p", "q2", edge(ctx, "alpha"))


def test_non_negative_valuation_rejected(ctx):
    with pytest.raises(ValidationError):
        NovikovComplex(ctx).set_incidence("p", "q1", edge(ctx, "alpha.h^-4"))


def test_other_context_rejected(ctx, cg):
    other = TruncationContext(3.0, cg)
    with pytest.raises(StructuralError):
        NovikovComplex(ctx).set_incidence("p", "q1", edge(other, "alpha"))


def test_parallel_classes_accepted():
    graph = GroupoidGraph(
        [ObjectRecord("p", 1), ObjectRecord("q", 0)],
        [GeneratorRecord("e1", "p", "q", -1.0), GeneratorRecord("e1b", "p", "q", -1.5)],
    )
    ctx = TruncationContext(4.0, graph)
    v = edge(ctx, "e1") - edge(ctx, "e1b")
    c = NovikovComplex(ctx).set_incidence("p", "q", v)
    assert c.get_incidence("p", "q") == v


def test_boundary_of(ctx):
    c = NovikovComplex(ctx, {("p", "q1"): edge(ctx, "alpha")})
    assert c.boundary_of("r") == {}
    assert c.boundary_of("p") == {"q1": edge(ctx, "alpha")}


def test_json_round_trip(ctx):
    c = fixture_complex(ctx)
    assert NovikovComplex.from_json(c.to_json(), ctx.graph) == c
    with pytest.raises(ValidationError):
        NovikovComplex.from_json({"context": {"L": 6.0}, "incidences": [{"p": "p"}]}, ctx.graph)


@pytest.mark.parametrize("seed", range(25))
def test_random_cancellation_complexes_are_complexes(seed):
    assert random_cancellation_complex(random.Random(seed)).check_d_squared().ok
