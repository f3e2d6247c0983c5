"""The cobordism category: canonical forms, relations, duality, eta/saddle."""

import itertools
import random

import pytest

from helpers import all_square_tangles, tangles_with_boundary
from spinhom.cob import (
    AlphaPoly,
    CanonicalCobordism,
    FlatTangle,
    ShiftedObject,
    beside,
    cap_off_circles,
    closure_circles,
    closure_data,
    compose,
    degree,
    dot_at_point,
    dotted_identity,
    dualize_cob,
    dualize_ob,
    eta,
    identity_cob,
    merge_trace_saddle,
    reduce_component,
    reflect_x_cob,
    saddle_to_identity,
    stack,
    stack_ob,
    surgery,
    trace,
)

ONE2 = FlatTangle.identity(2)
E = FlatTangle.e(0, 2)
A = AlphaPoly


def test_closure_circles_counts():
    assert closure_data(ONE2, ONE2).n == 2
    assert closure_data(ONE2, E).n == 1
    assert closure_data(E, E).n == 2
    circ = FlatTangle.empty(1)
    assert closure_data(circ, circ).n == 2


def test_closure_circles_listing():
    # deterministic order: smallest boundary point first, then free circles
    circles = closure_circles(E, E)
    assert circles[0][0] == ("s", "arc", (0, 1))
    assert circles[1][0] == ("s", "arc", (2, 3))


def test_reduce_component_table():
    assert reduce_component(0, 0, 0) == ()
    assert reduce_component(0, 0, 1) == (((), 0, 1),)
    assert reduce_component(0, 0, 2) == ()
    assert reduce_component(0, 0, 3) == (((), 1, 1),)
    assert reduce_component(1, 1, 0) == (((1,), 0, 2),)
    assert reduce_component(1, 0, 2) == (((0,), 1, 1),)
    assert set(reduce_component(2, 0, 0)) == {((0, 1), 0, 1), ((1, 0), 0, 1)}
    assert set(reduce_component(2, 0, 1)) == {((1, 1), 0, 1), ((0, 0), 1, 1)}


def test_sphere_relations():
    circ = ShiftedObject(FlatTangle.empty(1))
    cup = cap_off_circles(circ)
    cupd = cap_off_circles(circ, (1,))
    counit = dualize_cob(cup)
    counitd = dualize_cob(cupd)
    dot = dotted_identity(circ, {("circ", 0): 1})
    assert compose(counit, cup).is_zero()
    assert compose(counit, cupd).terms == {(): A({0: 1})}
    assert compose(counitd, cupd).is_zero()
    assert compose(counitd, compose(dot, cupd)).terms == {(): A({1: 1})}


def test_two_dots_is_alpha():
    t = dot_at_point(ShiftedObject(E), 0)
    assert compose(t, t).terms == {(0, 0): A({1: 1})}
    b = dot_at_point(ShiftedObject(E), 2)
    assert compose(t, b).terms == {(1, 1): A({0: 1})}


def test_neck_cutting_identity_of_circle():
    circ = ShiftedObject(FlatTangle.empty(1))
    idc = identity_cob(circ)
    assert idc.terms == {(0, 1): A({0: 1}), (1, 0): A({0: 1})}
    assert compose(idc, idc) == idc


def test_degree_formula():
    assert degree(identity_cob(ShiftedObject(FlatTangle.identity(3)))) == 0
    sad = surgery(ShiftedObject(E, 1), 0, 2, target_shift=0)
    assert sad.target.tangle == ONE2
    assert degree(sad) == 0
    assert degree(dot_at_point(ShiftedObject(E), 0)) == 2
    circ = ShiftedObject(FlatTangle.empty(1))
    assert degree(cap_off_circles(circ)) == -1
    assert degree(cap_off_circles(circ, (1,))) == 1
    once_dotted_sphere = compose(dualize_cob(cap_off_circles(circ)),
                                 cap_off_circles(circ, (1,)))
    assert degree(once_dotted_sphere) == 0


def test_degree_additive_small():
    rng = random.Random(5)
    for n in (1, 2, 3):
        tangles = all_square_tangles(n)
        for _ in range(30):
            t = rng.choice(tangles)
            o = ShiftedObject(t, rng.randint(-2, 2))
            f = dot_at_point(o, rng.randrange(2 * n))
            g = dot_at_point(o, rng.randrange(2 * n))
            h = compose(g, f)
            if h.is_zero():
                continue
            assert degree(h) == degree(f) + degree(g)


def test_compose_bilinear_associative():
    rng = random.Random(11)
    o = ShiftedObject(E)
    gens = [identity_cob(o), dot_at_point(o, 0), dot_at_point(o, 2)]
    for _ in range(25):
        f = rng.choice(gens).scale(rng.randint(-2, 2))
        g = rng.choice(gens).scale(rng.randint(-2, 2))
        h = rng.choice(gens)
        assert compose(compose(h, g), f) == compose(h, compose(g, f))
        lhs = compose(h, f + g)
        assert lhs == compose(h, f) + compose(h, g)


def test_saddle_neck_cut_identities():
    # saddle then horizontal saddle on 1_2 gives left dot + right dot
    I2 = ShiftedObject(ONE2)
    hs = surgery(I2, 0, 1, target_shift=1)
    sad = CanonicalCobordism(
        ShiftedObject(E, 1), I2, surgery(ShiftedObject(E, 1), 0, 2, 0).terms
    )
    lhs = compose(sad, hs)
    assert lhs == dot_at_point(I2, 0) + dot_at_point(I2, 1)
    rhs = compose(hs, sad)
    src = ShiftedObject(E, 1)
    assert rhs == dot_at_point(src, 0) + dot_at_point(src, 2)


def test_dualize_involutive_and_contravariant():
    rng = random.Random(2)
    for n2 in (2, 4):
        for t in tangles_with_boundary(0, n2):
            o = ShiftedObject(t, rng.randint(-2, 2))
            f = dot_at_point(o, rng.randrange(n2))
            assert dualize_cob(dualize_cob(f)) == f
            assert dualize_ob(dualize_ob(o)) == o
            assert degree(dualize_cob(f)) == degree(f)
    # contravariance on composable dot maps
    o = ShiftedObject(E)
    f = dot_at_point(o, 0)
    g = dot_at_point(o, 2)
    assert dualize_cob(compose(g, f)) == compose(dualize_cob(f), dualize_cob(g))


def test_stack_and_beside_of_identities():
    ide = identity_cob(ShiftedObject(E))
    st = stack(ide, ide)
    assert st == identity_cob(ShiftedObject(stack_ob(E, E).tangle))
    bs = beside(ide, ide)
    assert bs.source.tangle.m == 4


def test_trace_functor():
    I2 = ShiftedObject(ONE2)
    tr = trace(identity_cob(I2))
    assert tr.source.tangle.circles == 2
    assert tr == identity_cob(ShiftedObject(FlatTangle.empty(2)))
    t = dot_at_point(ShiftedObject(E), 0)
    trt = trace(t)
    assert trt.source.tangle.circles == 1
    assert trt == dotted_identity(ShiftedObject(FlatTangle.empty(1)), {("circ", 0): 1})


def test_trace_respects_composition():
    o = ShiftedObject(E)
    f = dot_at_point(o, 0)
    g = dot_at_point(o, 2)
    assert trace(compose(g, f)) == compose(trace(g), trace(f))


@pytest.mark.parametrize("n2", [2, 4, 6])
def test_eta_saddle_unit(n2):
    for t in tangles_with_boundary(0, n2):
        a = ShiftedObject(t)
        av = dualize_ob(a)
        et = eta(t)
        sa = saddle_to_identity(t)
        n = n2 // 2
        assert degree(et) == -n
        assert degree(sa) == n
        ia, iav = identity_cob(a), identity_cob(av)
        assert compose(stack(ia, sa), stack(et, ia)) == ia
        assert compose(stack(sa, iav), stack(iav, et)) == iav


def test_eta_precondition():
    with pytest.raises(Exception):
        eta(FlatTangle(0, 2, (1, 0), circles=1))


def test_adjunction_of_duals():
    # s_b . (1 (x) f) = s_a . (f^v (x) 1) for dots and saddles, 2n <= 6
    for n2 in (2, 4, 6):
        for t in tangles_with_boundary(0, n2):
            a = ShiftedObject(t)
            fs = [dot_at_point(a, p) for p in range(n2)]
            for x, y in itertools.combinations(range(n2), 2):
                try:
                    s = surgery(a, x, y)
                except Exception:
                    continue
                if s.target.tangle.circles == 0:
                    fs.append(s)
            for f in fs:
                b = ShiftedObject(f.target.tangle)
                f = CanonicalCobordism(a, b, f.terms)
                sa, sb = saddle_to_identity(t), saddle_to_identity(b.tangle)
                ibv = identity_cob(dualize_ob(b))
                ia = identity_cob(a)
                assert compose(sb, stack(ibv, f)) == compose(
                    sa, stack(dualize_cob(f), ia)
                )
                ib = identity_cob(b)
                iav = identity_cob(dualize_ob(a))
                assert compose(stack(f, iav), eta(t)) == compose(
                    stack(ib, dualize_cob(f)), eta(b.tangle)
                )


def test_ordinary_duality_iso():
    # phi(f) = (f (x) 1) . eta and psi(z) = (1 (x) s) . (z (x) 1) invert
    # each other on the full canonical basis, 2n <= 6
    for n2 in (2, 4, 6):
        ms = tangles_with_boundary(0, n2)
        for ta in ms:
            for tb in ms:
                a, b = ShiftedObject(ta), ShiftedObject(tb)
                cd = closure_data(ta, tb)
                assert 2 ** cd.n == len(
                    list(itertools.product((0, 1), repeat=cd.n))
                )
                iav = identity_cob(dualize_ob(a))
                ia, ib = identity_cob(a), identity_cob(b)
                sa = saddle_to_identity(ta)
                et = eta(ta)
                for assign in itertools.product((0, 1), repeat=cd.n):
                    f = CanonicalCobordism.generator(a, b, assign)
                    z = compose(stack(f, iav), et)
                    back = compose(stack(ib, sa), stack(z, ia))
                    assert back == f


def test_merge_trace_saddle_module_action():
    s1 = FlatTangle.identity(1)
    mg = merge_trace_saddle(s1, s1)
    circ = ShiftedObject(FlatTangle.empty(1))
    birth = beside(cap_off_circles(circ), identity_cob(ShiftedObject(s1)))
    assert compose(mg, birth) == identity_cob(ShiftedObject(s1))
    birth_dot = beside(cap_off_circles(circ, (1,)), identity_cob(ShiftedObject(s1)))
    assert compose(mg, birth_dot) == dot_at_point(ShiftedObject(s1), 0)
    for a in (ONE2, E):
        for b in (ONE2, E):
            assert degree(merge_trace_saddle(a, b)) == 2


def test_reflect_x_covariant():
    o = ShiftedObject(E, 3)
    f = dot_at_point(o, 0)
    g = reflect_x_cob(f)
    assert g.source.qshift == 3
    assert degree(g) == degree(f)
    assert reflect_x_cob(g) == f


def test_is_identity_iso():
    o = ShiftedObject(E, 1)
    assert identity_cob(o).is_identity_iso() == 1
    assert identity_cob(o).scale(-1).is_identity_iso() == -1
    assert identity_cob(o).scale(2).is_identity_iso() is None
    assert dot_at_point(o, 0).is_identity_iso() is None
    circ = ShiftedObject(FlatTangle.empty(1))
    assert identity_cob(circ).is_identity_iso() is None
