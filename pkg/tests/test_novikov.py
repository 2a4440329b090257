import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from novlab.errors import NotInvertibleError, NovikovConditionError, StructuralError, ValidationError
from novlab.groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from novlab.novikov import (
    RingElement,
    TruncationContext,
    add,
    geometric_series,
    identity_at,
    l_equal,
    mul,
    one,
    render,
    truncate,
    unit_inverse,
)

from conftest import BACKENDS, loop_graph, use_backend
from oracles import expand_product, power_series_terms, truncate_terms
from strategies import WALK_GRAPH, WALK_UVALS, term_dicts


def el(ctx, **terms):
    g = ctx.graph
    return RingElement(ctx, [(g.parse_arrow(k.replace("__", "^")), c) for k, c in terms.items()])


def series(ctx, coeffs):
    g = ctx.graph.generator("g")
    raw = power_series_terms("p", g.word, coeffs, [x.u_value for x in ctx.graph.generators], ctx.L)
    return RingElement(ctx, raw)


# addition


def test_add_zero(ctx5):
    a = el(ctx5, g=2, g__2=-1)
    assert a + RingElement.zero(ctx5) == a


def test_add_examples(ctx5):
    p1, g = identity_at(ctx5, "p"), el(ctx5, g=1)
    assert add(p1 + g, p1 - g) == p1 * 2
    assert (g + (-g)).is_zero()
    assert render(g - g) == "0"


def test_mixed_contexts_rejected(gp):
    a = one(TruncationContext(2.0, gp))
    b = one(TruncationContext(3.0, gp))
    with pytest.raises(StructuralError):
        a + b


# multiplication


def test_mismatched_ends_multiply_to_zero():
    g = GroupoidGraph(
        [ObjectRecord("p", 0), ObjectRecord("q", 0)],
        [GeneratorRecord("g", "p", "p", -1.0), GeneratorRecord("h", "q", "q", -1.0)],
    )
    ctx = TruncationContext(5.0, g)
    assert mul(el(ctx, g=1), el(ctx, h=1)).is_zero()


def test_telescoping(ctx5):
    p1, g = identity_at(ctx5, "p"), el(ctx5, g=1)
    assert render((p1 + g) * (p1 - g)) == "1_p - g^2"


def test_truncated_product_frozen_by_oracle(gp):
    ctx = TruncationContext(2.5, gp)
    a = el(ctx, **{"1_p": 1, "g": 1, "g__2": 1})
    b = el(ctx, **{"1_p": 1, "g": 1})
    expected = expand_product(a.raw_terms(), b.raw_terms(), [-1.0], 2.5)
    assert expected == {("p", "p", ()): 1, ("p", "p", (1,)): 2, ("p", "p", (1, 1)): 2}
    assert (a * b).raw_terms() == expected
    assert render(a * b) == "1_p + 2*g + 2*g^2"


# truncation and comparison


def test_truncate_examples(ctx5):
    a = el(ctx5, **{"1_p": 1, "g": 1, "g__2": 1})
    assert render(truncate(a, 1.5)) == "1_p + g"
    assert truncate(a, 5.0) == a
    assert truncate(RingElement.zero(ctx5), 2.0).is_zero()
    with pytest.raises(ValidationError):
        truncate(a, 6.0)


def test_l_equal_examples(ctx5):
    p1 = identity_at(ctx5, "p")
    assert l_equal(p1, p1, 2.0)
    assert l_equal(p1, p1 + el(ctx5, g__3=1), 2.0)
    assert not l_equal(p1, p1 + el(ctx5, g=1), 2.0)


# unit and series


def test_one(ctx5):
    assert render(one(ctx5)) == "1_p"
    assert one(ctx5) * one(ctx5) == one(ctx5)


@pytest.mark.parametrize("u, L, expected", [(-1.0, 3.5, "1_p + g + g^2 + g^3"), (-4.0, 3.5, "1_p")])
def test_geometric_series_examples(u, L, expected):
    ctx = TruncationContext(L, loop_graph(u))
    assert render(geometric_series(ctx.graph.generator("g"), ctx)) == expected


def test_geometric_series_needs_negative_loop():
    ctx = TruncationContext(3.0, loop_graph(0.5))
    with pytest.raises(NovikovConditionError):
        geometric_series(ctx.graph.generator("g"), ctx)


def test_unit_inverse_examples(gp):
    ctx = TruncationContext(3.5, gp)
    p1, g = identity_at(ctx, "p"), el(ctx, g=1)
    assert unit_inverse(p1 - g) == geometric_series(gp.generator("g"), ctx)
    assert unit_inverse(one(ctx)) == one(ctx)
    alt = unit_inverse(p1 + g)
    assert alt == series(ctx, lambda j: (-1) ** j)
    assert render(alt) == "1_p - g + g^2 - g^3"
    assert alt * (p1 + g) == p1 == (p1 + g) * alt


def test_unit_inverse_rejects_non_units(gp):
    ctx = TruncationContext(3.5, gp)
    p1, g = identity_at(ctx, "p"), el(ctx, g=1)
    for bad in (p1 * 2, g, p1 + RingElement.from_arrow(gp.parse_arrow("g^-1"), ctx)):
        with pytest.raises(NotInvertibleError):
            unit_inverse(bad)


def test_json_round_trip(ctx5):
    a = el(ctx5, **{"1_p": 3, "g__2": -1})
    assert RingElement.from_json(a.to_json(), ctx5.graph) == a
    with pytest.raises(ValidationError):
        RingElement.from_json({"L": 2.0, "terms": [{"arrow": "g", "coeff": 1.5}]}, ctx5.graph)


def test_integer_coefficients_only(ctx5):
    with pytest.raises(ValidationError):
        RingElement(ctx5, [(ctx5.graph.generator("g"), 1.0)])


# properties against the expansion oracle

L_VALUES = st.sampled_from([0.5, 1.25, 2.0, 3.5])


@pytest.mark.parametrize("bk", sorted(BACKENDS))
@given(a=term_dicts(), b=term_dicts(), L=L_VALUES)
def test_product_matches_expansion_oracle(bk, a, b, L):
    ctx = TruncationContext(L, WALK_GRAPH)
    with use_backend(bk):
        got = RingElement(ctx, a) * RingElement(ctx, b)
    want = expand_product(truncate_terms(a, WALK_UVALS, L), truncate_terms(b, WALK_UVALS, L), WALK_UVALS, L)
    assert got.raw_terms() == want


def _non_positive(d):
    from oracles import exact_value

    return {k: c for k, c in d.items() if exact_value(k[2], WALK_UVALS) <= 0}


@settings(max_examples=60)
@given(term_dicts(), term_dicts(), term_dicts(), L_VALUES)
def test_ring_axioms(a, b, c, L):
    ctx = TruncationContext(L, WALK_GRAPH)
    # truncation commutes with products only when no term raises the valuation
    A, B, C = (RingElement(ctx, _non_positive(x)) for x in (a, b, c))
    assert (A * B) * C == A * (B * C)
    assert A * (B + C) == A * B + A * C
    assert (A + B) * C == A * C + B * C
    assert one(ctx) * A == A == A * one(ctx)
    assert A + B == B + A


@given(st.floats(-3.0, -0.1), st.sampled_from([2, 5, 10]))
def test_series_inverts_one_minus_g(u, mult):
    ctx = TruncationContext(mult * abs(u), loop_graph(u))
    g = ctx.graph.generator("g")
    p1 = identity_at(ctx, "p")
    assert (p1 - RingElement.from_arrow(g, ctx)) * geometric_series(g, ctx) == p1
