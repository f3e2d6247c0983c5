"""Shared generators and comparison utilities for the test suite."""

from __future__ import annotations

import random

from spinhom import complexes as cx
from spinhom.cob import (
    FlatTangle,
    ShiftedObject,
    degree as cob_degree,
    identity_cob,
    surgery,
)
from spinhom.complexes import ChainComplex, Window


def all_square_tangles(n: int) -> list[FlatTangle]:
    from spinhom import tl

    return [FlatTangle(n, n, m.pairs) for m in tl.all_matchings(n, n)]


def tangles_with_boundary(m: int, n: int) -> list[FlatTangle]:
    from spinhom import tl

    return [FlatTangle(m, n, mm.pairs) for mm in tl.all_matchings(m, n)]


def two_term_piece(rng: random.Random, n: int, degree: int, qshift: int,
                   iso: bool = False) -> ChainComplex:
    """A two-term complex over bn_n: identity-iso entries or single saddles,
    placed homogeneously (differential q-degree 0)."""
    tangles = all_square_tangles(n)
    t = rng.choice(tangles)
    src = ShiftedObject(t, qshift)
    if iso:
        f = identity_cob(src).scale(rng.choice([1, -1]))
        tgt_obj = src
    else:
        pts = list(range(2 * n))
        rng.shuffle(pts)
        f = None
        for x in pts:
            for y in pts:
                if x >= y:
                    continue
                try:
                    cand = surgery(ShiftedObject(t, qshift), x, y)
                except Exception:
                    continue
                if cand.target.tangle.circles:
                    continue
                f = cand
                break
            if f is not None:
                break
        if f is None:
            f = identity_cob(src).scale(rng.choice([1, -1]))
        d0 = cob_degree(f)
        tgt_obj = ShiftedObject(f.target.tangle, qshift - d0)
        f = f.with_shifts(qshift, qshift - d0)
    groups = {degree: [src], degree + 1: [tgt_obj]}
    diff = {degree: {(0, 0): f}}
    return ChainComplex(n, n, Window(degree, degree + 1), groups, diff)


def random_complex(
    rng: random.Random,
    m: int,
    n: int,
    window: Window,
    pieces: int = 2,
    max_objects_per_degree: int = 3,
) -> ChainComplex:
    """A random honest complex over BN^m_n built by planar-stacking small
    exact pieces around a base diagram; d.d = 0 holds by construction."""
    base_tangles = tangles_with_boundary(m, n)
    base = cx.from_tangle(
        rng.choice(base_tangles), rng.randint(-1, 1)
    )
    C = base
    for _ in range(pieces):
        side = rng.random() < 0.5
        k = m if side else n
        if k == 0:
            continue
        piece = two_term_piece(
            rng, k, rng.randint(window.lo, window.hi - 1), rng.randint(-1, 1),
            iso=rng.random() < 0.3,
        )
        if side:
            C, _ = cx.stack_complexes(piece, C)
        else:
            C, _ = cx.stack_complexes(C, piece)
        if rng.random() < 0.5:
            C, _ = cx.simplify(C)
    # clip to window and enforce the object cap by simplifying
    if any(len(v) > max_objects_per_degree for v in C.groups.values()):
        C, _ = cx.simplify(C)
    groups = {k: v[:max_objects_per_degree] for k, v in C.groups.items()
              if window.lo <= k <= window.hi}
    diff = {}
    for k, mat in C.diff.items():
        if not (window.lo <= k <= window.hi - 1):
            continue
        kept = {
            (r, c): f
            for (r, c), f in mat.items()
            if r < len(groups.get(k + 1, [])) and c < len(groups.get(k, []))
        }
        if kept:
            diff[k] = kept
    out = ChainComplex(m, n, window, groups, diff)
    try:
        out.validate()
    except Exception:
        # truncating columns can break d.d = 0; fall back to zero differential
        out = ChainComplex(m, n, window, groups, {})
    return out


def tables_equal(t1, t2, lo=float("-inf"), hi=float("inf")) -> bool:
    keys = set(t1.nonzero()) | set(t2.nonzero())
    for kq in keys:
        if lo <= kq[0] <= hi:
            if t1.entries.get(kq, (0, ())) != t2.entries.get(kq, (0, ())):
                return False
    return True
