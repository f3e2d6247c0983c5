"""Property tests for the canonical-form composition algebra."""

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from spinhom import tl
from spinhom.cob import (
    AlphaPoly,
    CanonicalCobordism,
    FlatTangle,
    ShiftedObject,
    closure_data,
    compose,
    degree,
    identity_cob,
)

_TANGLES = {
    n: [FlatTangle(n, n, m.pairs) for m in tl.all_matchings(n, n)] for n in (1, 2)
}


@st.composite
def composable_triple(draw):
    n = draw(st.sampled_from([1, 2]))
    a, b, c, d = (draw(st.sampled_from(_TANGLES[n])) for _ in range(4))
    objs = [ShiftedObject(t, 0) for t in (a, b, c, d)]

    def rand_mor(src, tgt):
        cd = closure_data(src.tangle, tgt.tangle)
        terms = {}
        for assign in itertools.product((0, 1), repeat=cd.n):
            coeff = draw(st.integers(-2, 2))
            if coeff:
                terms[assign] = coeff
        return CanonicalCobordism(
            src, tgt, {a2: AlphaPoly({0: c2}) for a2, c2 in terms.items()}
        )

    f = rand_mor(objs[0], objs[1])
    g = rand_mor(objs[1], objs[2])
    h = rand_mor(objs[2], objs[3])
    return f, g, h


@given(composable_triple())
@settings(max_examples=80, deadline=None)
def test_compose_associative(triple):
    f, g, h = triple
    assert compose(compose(h, g), f) == compose(h, compose(g, f))


@given(composable_triple())
@settings(max_examples=60, deadline=None)
def test_compose_bilinear(triple):
    f, g, h = triple
    if f.source != g.source or f.target != g.target:
        return
    lhs = compose(h, f + g) if h.source == f.target else None
    if lhs is None:
        return
    assert lhs == compose(h, f) + compose(h, g)


@given(composable_triple())
@settings(max_examples=60, deadline=None)
def test_identity_units(triple):
    f, _, _ = triple
    assert compose(identity_cob(f.target), f) == f
    assert compose(f, identity_cob(f.source)) == f


@given(composable_triple())
@settings(max_examples=60, deadline=None)
def test_degree_additive_when_defined(triple):
    f, g, _ = triple
    fg = compose(g, f)
    df, dg, dfg = degree(f), degree(g), degree(fg)
    if df is not None and dg is not None and not fg.is_zero():
        assert dfg == df + dg
