"""Deterministic, versioned serialization of the core value types.

Everything serializes to plain JSON-able structures with sorted components:
byte-identical output for equal values.  Dot assignments are packed as
bitmasks (bit i = dot on closure circle i).
"""

from __future__ import annotations

from typing import Any

from .cob import AlphaPoly, CanonicalCobordism, FlatTangle, ShiftedObject
from .complexes import ChainComplex, Window
from .errors import IntegrityError

FORMAT_VERSION = 1


def poly_to_data(p: AlphaPoly) -> list[list[int]]:
    return [[e, c] for e, c in sorted(p.coeffs.items())]


def poly_from_data(d: list[list[int]]) -> AlphaPoly:
    return AlphaPoly({e: c for e, c in d})


def tangle_to_data(t: FlatTangle) -> dict[str, Any]:
    return {"m": t.m, "n": t.n, "pairs": list(t.pairs), "circles": t.circles}


def tangle_from_data(d: dict[str, Any]) -> FlatTangle:
    return FlatTangle(d["m"], d["n"], tuple(d["pairs"]), d["circles"])


def object_to_data(o: ShiftedObject) -> dict[str, Any]:
    out = tangle_to_data(o.tangle)
    out["q"] = o.qshift
    return out


def object_from_data(d: dict[str, Any]) -> ShiftedObject:
    return ShiftedObject(tangle_from_data(d), d["q"])


def _mask(assign: tuple[int, ...]) -> int:
    out = 0
    for i, v in enumerate(assign):
        if v:
            out |= 1 << i
    return out


def _unmask(mask: int, width: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(width))


def cobordism_to_data(f: CanonicalCobordism) -> dict[str, Any]:
    return {
        "src": object_to_data(f.source),
        "tgt": object_to_data(f.target),
        "terms": sorted(
            [[_mask(a), poly_to_data(p)] for a, p in f.terms.items()]
        ),
    }


def cobordism_from_data(d: dict[str, Any]) -> CanonicalCobordism:
    from .cob import closure_data

    src = object_from_data(d["src"])
    tgt = object_from_data(d["tgt"])
    width = closure_data(src.tangle, tgt.tangle).n
    terms = {
        _unmask(mask, width): poly_from_data(p) for mask, p in d["terms"]
    }
    return CanonicalCobordism(src, tgt, terms)


def complex_to_data(C: ChainComplex) -> dict[str, Any]:
    groups = {
        str(k): [object_to_data(o) for o in objs]
        for k, objs in sorted(C.groups.items())
    }
    diff = {}
    for k, mat in sorted(C.diff.items()):
        entries = []
        for (r, c), f in sorted(mat.items()):
            entries.append(
                [r, c, sorted([[_mask(a), poly_to_data(p)] for a, p in f.terms.items()])]
            )
        diff[str(k)] = entries
    return {
        "version": FORMAT_VERSION,
        "m": C.m,
        "n": C.n,
        "window": [C.window.lo, C.window.hi],
        "mode": C.mode,
        "tails": [C.tail_lo, C.tail_hi],
        "groups": groups,
        "diff": diff,
    }


def complex_from_data(d: dict[str, Any]) -> ChainComplex:
    from .cob import closure_data

    if d.get("version") != FORMAT_VERSION:
        raise IntegrityError(f"unsupported complex format version {d.get('version')}")
    groups = {
        int(k): [object_from_data(o) for o in objs] for k, objs in d["groups"].items()
    }
    diff = {}
    for k, entries in d["diff"].items():
        kk = int(k)
        mat = {}
        for r, c, terms in entries:
            src = groups[kk][c]
            tgt = groups[kk + 1][r]
            width = closure_data(src.tangle, tgt.tangle).n
            mat[(r, c)] = CanonicalCobordism(
                src, tgt, {_unmask(m, width): poly_from_data(p) for m, p in terms}
            )
        diff[kk] = mat
    return ChainComplex(
        d["m"],
        d["n"],
        Window(*d["window"]),
        groups,
        diff,
        d.get("mode", "sum"),
        tail_lo=d.get("tails", [False, False])[0],
        tail_hi=d.get("tails", [False, False])[1],
    )
