import random

import pytest

from spinhom import expr as ex
from spinhom import tl
from spinhom.errors import AdmissibilityError, ArityError, DimensionError, SpinhomError
from spinhom.laurent import RatFunc, quantum_integer

LOOP = RatFunc.from_laurent(tl.LOOP)


def test_matching_validation():
    with pytest.raises(SpinhomError):
        tl.Matching(2, 2, (3, 2, 1, 0))  # crossing
    with pytest.raises(DimensionError):
        tl.Matching(1, 2, (1, 0, 2))
    m = tl.Matching.e(0, 2)
    assert m.through_strands() == 0
    assert tl.Matching.identity(3).through_strands() == 3


def test_matching_counts():
    assert len(tl.all_matchings(2, 2)) == 2
    assert len(tl.all_matchings(3, 3)) == 5
    assert len(tl.all_matchings(4, 4)) == 14
    assert len(tl.all_matchings(0, 6)) == 5
    assert len(tl.all_matchings(1, 3)) == 2


def test_compose_circle_rule():
    e1 = tl.TLElement.e(0, 2)
    assert tl.compose_tl(e1, e1) == e1.scale(LOOP)
    assert tl.compose_tl(tl.TLElement.identity(2), e1) == e1
    assert tl.compose_tl(e1, tl.TLElement.identity(2)) == e1


def test_compose_zigzag():
    z = tl.compose_tl(tl.TLElement.e(0, 3), tl.TLElement.e(1, 3))
    assert len(z.terms) == 1
    assert list(z.terms.values())[0] == RatFunc.one()


def test_compose_associative_random():
    rng = random.Random(3)
    ms = tl.all_matchings(2, 2) + tl.all_matchings(2, 4) + tl.all_matchings(4, 2)
    by_type = {}
    for m in ms:
        by_type.setdefault((m.m, m.n), []).append(m)
    for _ in range(40):
        a = tl.TLElement.from_matching(rng.choice(by_type[(2, 2)]), rng.randint(1, 3))
        b = tl.TLElement.from_matching(rng.choice(by_type[(2, 4)]))
        c = tl.TLElement.from_matching(rng.choice(by_type[(4, 2)]))
        lhs = tl.compose_tl(tl.compose_tl(a, b), c)
        rhs = tl.compose_tl(a, tl.compose_tl(b, c))
        assert lhs == rhs


def test_through_degree():
    assert tl.through_degree(tl.TLElement.identity(4)) == 4
    assert tl.through_degree(tl.TLElement.e(1, 4)) == 2
    p3 = tl.jones_wenzl(3)
    assert tl.through_degree(p3 - tl.TLElement.identity(3)) == 1
    with pytest.raises(SpinhomError):
        tl.through_degree(tl.TLElement.zero(2, 2))


@pytest.mark.parametrize("n", range(1, 7))
def test_jones_wenzl_axioms(n):
    p = tl.jones_wenzl(n)
    assert tl.compose_tl(p, p) == p
    for i in range(n - 1):
        assert tl.compose_tl(tl.TLElement.e(i, n), p).is_zero()
        assert tl.compose_tl(p, tl.TLElement.e(i, n)).is_zero()
    d = p - tl.TLElement.identity(n)
    assert d.is_zero() or tl.through_degree(d) < n


@pytest.mark.parametrize("n", range(1, 6))
def test_markov_trace_of_projector(n):
    assert tl.markov_trace(tl.jones_wenzl(n)) == RatFunc.from_laurent(
        quantum_integer(n + 1)
    )


def test_markov_trace_small():
    assert tl.markov_trace(tl.TLElement.identity(2)) == LOOP * LOOP
    assert tl.markov_trace(tl.TLElement.e(0, 2)) == LOOP


def test_jw2_formula():
    p2 = tl.jones_wenzl(2)
    expect = tl.TLElement.identity(2) - tl.TLElement.e(0, 2).scale(
        RatFunc.one() / LOOP
    )
    assert p2 == expect


def test_network_evaluation():
    for n in range(1, 6):
        assert tl.evaluate_network(ex.unknot(n)) == RatFunc.from_laurent(
            quantum_integer(n + 1)
        )
    assert tl.evaluate_network(ex.theta(1, 1, 0)) == RatFunc.from_laurent(
        quantum_integer(2)
    )
    assert tl.evaluate_network(ex.theta(1, 1, 2)) == RatFunc.from_laurent(
        quantum_integer(3)
    )


def test_theta_golden_values():
    # computed once by brute-force composition and frozen
    t222 = tl.evaluate_network(ex.theta(2, 2, 2))
    num = RatFunc.from_laurent(quantum_integer(4)) * RatFunc.from_laurent(
        quantum_integer(3)
    )
    den = RatFunc.from_laurent(quantum_integer(2)) * RatFunc.from_laurent(
        quantum_integer(2)
    )
    assert t222 == num / den
    assert tl.evaluate_network(ex.theta(1, 2, 3)) == RatFunc.from_laurent(
        quantum_integer(4)
    )


def test_network_errors():
    with pytest.raises(ArityError):
        tl.evaluate_network(ex.Proj(2))
    with pytest.raises(AdmissibilityError):
        ex.arity(ex.Vertex(1, 1, 1))
    with pytest.raises(AdmissibilityError):
        ex.arity(ex.Vertex(1, 1, 4))
    # non-strict triangle admits (1,1,2)
    assert ex.arity(ex.Vertex(1, 1, 2)) == (1, 3)


def test_zero_propagation():
    z = ex.Trace(ex.Stack(ex.Proj(2), ex.Stack(ex.Zero(), ex.Proj(2))))
    assert tl.evaluate_network(z).is_zero()


def test_dual_evaluation_invariance():
    v = tl.evaluate_network(ex.Trace(ex.Dual(ex.Proj(3))))
    assert v == RatFunc.from_laurent(quantum_integer(4))
