"""Structural consequences: degree-zero endomorphism rings for n = 3,
graded commutativity on odd classes, divergence reporting, serialization."""

import pytest

from spinhom import complexes as cx
from spinhom import expr as ex
from spinhom import projector as pj
from spinhom import serialize as ser
from spinhom.cob import FlatTangle, ShiftedObject, dot_at_point
from spinhom.complexes import ChainMap, Window, compose_maps, homotopic_alpha0
from spinhom.errors import DivergenceError
from spinhom.homology import homology_table


def test_end_p3_degree_zero_is_Z(p3_w8, w8):
    M = pj.hom_of_networks(ex.Proj(3), ex.Proj(3), w8)
    T = homology_table(M, "alpha0")
    assert T.entries.get((0, 0)) == (1, ())
    # and the window knows nothing above degree zero
    assert all(k <= 0 for k, q in T.nonzero())


def test_end_p3_unit_and_first_dot_class(p3_w8, w8):
    T = homology_table(pj.hom_of_networks(ex.Proj(3), ex.Proj(3), w8), "alpha0")
    # dots on the three strands give classes in (0, 2); d(v_i) relations
    # leave rank 1 and 2-torsion-free at that bidegree for the 3-strand case
    assert T.rank(0, 2) >= 1


def test_odd_class_squares_to_two_torsion():
    # graded commutativity up to homotopy forces 2 x^2 ~ 0 for odd classes;
    # witness on x = b1 v^3 of bidegree (-3, 8)
    W = Window(-12, 0)
    P = pj.p2(W).complex
    b1, _ = pj.dot_maps(P)
    v = pj.v_map(P)
    v3 = compose_maps(v, compose_maps(v, v))
    x = compose_maps(b1, v3)
    assert (x.hdeg, x.qdeg) == (-3, 8)
    xx = compose_maps(x, x)
    zero = ChainMap.zero(P, P, xx.hdeg, xx.qdeg)
    assert homotopic_alpha0(xx + xx, zero, lo=W.lo + 3, hi=-1)


def test_divergence_error_reported():
    original = pj.MAX_SWEEPS
    pj.build_projector.cache_clear()
    pj.MAX_SWEEPS = 0
    try:
        with pytest.raises(DivergenceError):
            pj.build_projector(3, Window(-4, 0))
    finally:
        pj.MAX_SWEEPS = original
        pj.build_projector.cache_clear()


def test_cobordism_serialization_round_trip():
    o = ShiftedObject(FlatTangle(1, 1, (1, 0), circles=1), 2)
    f = dot_at_point(o, 0).scale(3)
    data = ser.cobordism_to_data(f)
    g = ser.cobordism_from_data(data)
    assert g == f
    assert ser.cobordism_to_data(g) == data


def test_certificate_cache_payload_faithful(tmp_path):
    from spinhom import cli

    cdir = str(tmp_path / "c")
    P = cli.cached_projector(2, Window(-5, 0), cdir)
    Q = cli.cached_projector(2, Window(-5, 0), cdir)
    assert Q.certificate.degree_zero_ok == P.certificate.degree_zero_ok
    assert Q.certificate.turnbacks == P.certificate.turnbacks
    assert Q.certificate.euler_ok == P.certificate.euler_ok
    pj.set_projector_provider(None)


def test_end_p3_matches_extrapolated_dga(w8):
    # Observed agreement: the 3-colored unknot ring computed through the
    # cobordism pipeline matches the pattern continuing the 2-color free
    # dg-algebra presentation (x_k even at (-2k, 2k+2), y_k odd at
    # (-2k-1, 2k+4), d(y_k) = sum_{i+j=k} x_i x_j), in free ranks on the
    # reliable window.  Frozen as a regression guard.
    from spinhom.dga import FreeDGA

    N = 8
    M = pj.hom_of_networks(ex.Proj(3), ex.Proj(3), Window(-N, 0))
    T = homology_table(M, "alpha0")
    dga3 = FreeDGA(
        even_degrees=((0, 2), (-2, 4), (-4, 6)),
        odd_degrees=((-1, 4), (-3, 6), (-5, 8)),
        odd_diff=(
            ((1, (2, 0, 0)),),
            ((2, (1, 1, 0)),),
            ((2, (1, 0, 1)), (1, (0, 2, 0))),
        ),
    )
    H = dga3.bigraded_homology_ranks(-N + 3, 0, 0, 40)
    for k in range(-N + 3, 1):
        for q in range(0, 41):
            assert T.rank(k, q) == H.get((k, q), 0), (k, q)
    assert T.torsion(-2, 6) == (2,)
