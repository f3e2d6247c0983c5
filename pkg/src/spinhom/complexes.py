"""Window-truncated chain complexes over the Bar-Natan categories.

A ChainComplex stores, per homological degree inside a finite window, a
list of shifted flat tangles and a sparse matrix differential of canonical
cobordisms.  Everything held is an honest finite complex (d*d = 0 on the
nose); `tail_lo`/`tail_hi` record that the complex is a truncation of an
ideal semi-infinite object, and `reliable` is the advisory band of degrees
free of truncation artifacts.

Planar composition uses the Koszul sign rule with signs attached to the
left argument's homological degree; cone and shift signs follow the
convention that the shifted complex carries -d.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from . import cob
from .cob import (
    AlphaPoly,
    CanonicalCobordism,
    FlatTangle,
    ShiftedObject,
    closure_data,
    degree as cob_degree,
)
from .errors import DimensionError, IntegrityError, ResourceError, SpinhomError
from .homology import ModuleComplex

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise SpinhomError(f"empty window [{self.lo}, {self.hi}]")

    def __add__(self, other: "Window") -> "Window":
        return Window(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Window":
        return Window(-self.hi, -self.lo)

    def contains(self, k: int) -> bool:
        return self.lo <= k <= self.hi


Matrix = dict[tuple[int, int], CanonicalCobordism]


@dataclass
class ChainComplex:
    m: int
    n: int
    window: Window
    groups: dict[int, list[ShiftedObject]]
    diff: dict[int, Matrix]
    mode: str = "sum"
    tail_lo: bool = False
    tail_hi: bool = False
    reliable: tuple[float, float] = (NEG_INF, POS_INF)
    labels: dict[int, list] | None = None

    def __post_init__(self):
        self.groups = {k: v for k, v in self.groups.items() if v}
        self.diff = {
            k: {rc: f for rc, f in mat.items() if not f.is_zero()}
            for k, mat in self.diff.items()
        }
        self.diff = {k: mat for k, mat in self.diff.items() if mat}

    # -- basic inspection ----------------------------------------------------

    def objects(self, k: int) -> list[ShiftedObject]:
        return self.groups.get(k, [])

    def entry(self, k: int, r: int, c: int) -> CanonicalCobordism | None:
        return self.diff.get(k, {}).get((r, c))

    def support(self) -> list[int]:
        return sorted(self.groups)

    def max_degree(self) -> float:
        return max(self.groups) if self.groups else NEG_INF

    def min_degree(self) -> float:
        return min(self.groups) if self.groups else POS_INF

    def total_objects(self) -> int:
        return sum(len(v) for v in self.groups.values())

    def graded_objects(self) -> dict[int, list[tuple]]:
        """Canonical multiset description of the chain groups."""
        return {
            k: sorted(o.sort_key() for o in objs) for k, objs in self.groups.items()
        }

    def support_in(self, lo: float, hi: float) -> bool:
        return all(lo <= k <= hi for k in self.groups)

    def is_empty_in(self, lo: float, hi: float) -> bool:
        return all(not (lo <= k <= hi) for k in self.groups)

    def validate(self) -> None:
        """Check consistency: endpoints, q-degree-0 homogeneity, d.d = 0."""
        for k, mat in self.diff.items():
            src = self.objects(k)
            tgt = self.objects(k + 1)
            for (r, c), f in mat.items():
                if c >= len(src) or r >= len(tgt):
                    raise IntegrityError("differential entry out of range")
                if f.source != src[c] or f.target != tgt[r]:
                    raise IntegrityError("differential entry endpoints mismatch")
                if cob_degree(f) != 0:
                    raise IntegrityError(
                        f"differential entry of q-degree {cob_degree(f)} at {k}"
                    )
        for k in sorted(self.diff):
            if k + 1 not in self.diff:
                continue
            prod = _mat_mul(self.diff[k + 1], self.diff[k])
            for rc, f in prod.items():
                if not f.is_zero():
                    raise IntegrityError(f"d.d != 0 at degree {k}, entry {rc}")

    def shifted_window(self, window: Window) -> "ChainComplex":
        return replace(self, window=window)


def _mat_mul(g_mat: Matrix, f_mat: Matrix) -> Matrix:
    """(g.f)[r, c] = sum_j g[r, j] f[j, c], f applied first."""
    acc: Matrix = {}
    g_by_col: dict[int, list[tuple[int, CanonicalCobordism]]] = {}
    for (r, c), g in g_mat.items():
        g_by_col.setdefault(c, []).append((r, g))
    for (j, c), f in f_mat.items():
        for r, g in g_by_col.get(j, ()):
            term = cob.compose(g, f)
            if term.is_zero():
                continue
            if (r, c) in acc:
                acc[(r, c)] = acc[(r, c)] + term
            else:
                acc[(r, c)] = term
    return {rc: v for rc, v in acc.items() if not v.is_zero()}


# ---------------------------------------------------------------------------
# Constructors


def single_object(
    obj: ShiftedObject, m: int, n: int, degree: int = 0, window: Window | None = None
) -> ChainComplex:
    w = window or Window(degree, degree)
    return ChainComplex(m, n, w, {degree: [obj]}, {})


def from_tangle(t: FlatTangle, qshift: int = 0, window: Window | None = None) -> ChainComplex:
    return single_object(ShiftedObject(t, qshift), t.m, t.n, 0, window)


def identity_complex(n: int, window: Window | None = None) -> ChainComplex:
    return from_tangle(FlatTangle.identity(n), 0, window)


# ---------------------------------------------------------------------------
# Chain maps


@dataclass
class ChainMap:
    """Degree-(hdeg, qdeg) collection of matrices source^k -> target^{k+hdeg}."""

    source: ChainComplex
    target: ChainComplex
    hdeg: int
    qdeg: int
    mats: dict[int, Matrix]

    def __post_init__(self):
        dirty = any(
            f.is_zero() for mat in self.mats.values() for f in mat.values()
        ) or any(not mat for mat in self.mats.values())
        if dirty:
            self.mats = {
                k: {rc: f for rc, f in mat.items() if not f.is_zero()}
                for k, mat in self.mats.items()
            }
            self.mats = {k: mat for k, mat in self.mats.items() if mat}

    def validate(self) -> None:
        for k, mat in self.mats.items():
            src = self.source.objects(k)
            tgt = self.target.objects(k + self.hdeg)
            for (r, c), f in mat.items():
                if f.source != src[c] or f.target != tgt[r]:
                    raise IntegrityError("chain map entry endpoints mismatch")
                if cob_degree(f) != self.qdeg:
                    raise IntegrityError(
                        f"chain map entry q-degree {cob_degree(f)} != {self.qdeg}"
                    )

    @staticmethod
    def identity(C: ChainComplex) -> "ChainMap":
        mats = {
            k: {(i, i): cob.identity_cob(o) for i, o in enumerate(objs)}
            for k, objs in C.groups.items()
        }
        return ChainMap(C, C, 0, 0, mats)

    @staticmethod
    def zero(source: ChainComplex, target: ChainComplex, hdeg: int = 0, qdeg: int = 0) -> "ChainMap":
        return ChainMap(source, target, hdeg, qdeg, {})

    def is_zero(self) -> bool:
        return not self.mats

    def __add__(self, other: "ChainMap") -> "ChainMap":
        if (self.hdeg, self.qdeg) != (other.hdeg, other.qdeg):
            raise DimensionError("adding chain maps of different bidegree")
        mats: dict[int, Matrix] = {}
        for k in set(self.mats) | set(other.mats):
            acc = dict(self.mats.get(k, {}))
            for rc, f in other.mats.get(k, {}).items():
                acc[rc] = acc[rc] + f if rc in acc else f
            mats[k] = acc
        return ChainMap(self.source, self.target, self.hdeg, self.qdeg, mats)

    def __neg__(self) -> "ChainMap":
        return self.scale(-1)

    def __sub__(self, other: "ChainMap") -> "ChainMap":
        return self + (-other)

    def scale(self, c: int | AlphaPoly) -> "ChainMap":
        return ChainMap(
            self.source,
            self.target,
            self.hdeg,
            self.qdeg,
            {k: {rc: f.scale(c) for rc, f in mat.items()} for k, mat in self.mats.items()},
        )

    def same_mats(self, other: "ChainMap") -> bool:
        return self.mats == other.mats

    def restrict_degrees(self, lo: float, hi: float) -> "ChainMap":
        return ChainMap(
            self.source,
            self.target,
            self.hdeg,
            self.qdeg,
            {k: m for k, m in self.mats.items() if lo <= k <= hi},
        )


def compose_maps(g: ChainMap, f: ChainMap) -> ChainMap:
    """Plain composition g.f (no Koszul sign)."""
    mats: dict[int, Matrix] = {}
    for k, fmat in f.mats.items():
        gmat = g.mats.get(k + f.hdeg)
        if not gmat:
            continue
        prod = _mat_mul(gmat, fmat)
        if prod:
            mats[k] = prod
    return ChainMap(f.source, g.target, f.hdeg + g.hdeg, f.qdeg + g.qdeg, mats)


def commutator_with_d(f: ChainMap) -> ChainMap:
    """[d, f] = d_B . f - (-1)^{|f|} f . d_A."""
    A, B = f.source, f.target
    sign = -1 if f.hdeg % 2 == 0 else 1
    # (-1)^{|f|}: |f| = hdeg; for even hdeg subtract, for odd add.
    mats: dict[int, Matrix] = {}
    for k in set(f.mats) | set(A.diff):
        acc: Matrix = {}
        fmat = f.mats.get(k)
        if fmat:
            dmat = B.diff.get(k + f.hdeg)
            if dmat:
                for rc, v in _mat_mul(dmat, fmat).items():
                    acc[rc] = acc[rc] + v if rc in acc else v
        da = A.diff.get(k)
        fmat2 = f.mats.get(k + 1)
        if da and fmat2:
            for rc, v in _mat_mul(fmat2, da).items():
                w = v.scale(sign)
                acc[rc] = acc[rc] + w if rc in acc else w
        acc = {rc: v for rc, v in acc.items() if not v.is_zero()}
        if acc:
            mats[k] = acc
    return ChainMap(A, B, f.hdeg + 1, f.qdeg, mats)


def is_chain_map(f: ChainMap, lo: float = NEG_INF, hi: float = POS_INF) -> bool:
    c = commutator_with_d(f)
    return all(not mat for k, mat in c.mats.items() if lo <= k <= hi)


# ---------------------------------------------------------------------------
# Strong deformation retract data


@dataclass
class Equivalence:
    """SDR data for big ~ small: r.i = 1_small, 1_big - i.r = dH + Hd,
    with the side conditions rH = 0, Hi = 0, H^2 = 0."""

    big: ChainComplex
    small: ChainComplex
    r: ChainMap
    i: ChainMap
    h: ChainMap  # homotopy on big, hdeg -1

    @staticmethod
    def identity(C: ChainComplex) -> "Equivalence":
        one = ChainMap.identity(C)
        return Equivalence(C, C, one, one, ChainMap.zero(C, C, -1, 0))

    def then(self, nxt: "Equivalence") -> "Equivalence":
        """Compose with a further reduction of self.small."""
        r = compose_maps(nxt.r, self.r)
        i = compose_maps(self.i, nxt.i)
        h = self.h + compose_maps(self.i, compose_maps(nxt.h, self.r))
        return Equivalence(self.big, nxt.small, r, i, h)


# ---------------------------------------------------------------------------
# Reliability bookkeeping for planar composition


def _support_bounds(C: ChainComplex) -> tuple[float, float]:
    lo = NEG_INF if C.tail_lo else (C.min_degree() if C.groups else 0)
    hi = POS_INF if C.tail_hi else (C.max_degree() if C.groups else 0)
    return lo, hi


def _combine_reliability(A: ChainComplex, B: ChainComplex) -> tuple[float, float]:
    """Degrees k of T(A, B) for which every contributing ideal pair (i, j)
    is stored and reliable.  Conservative, advisory."""
    loA, hiA = _support_bounds(A)
    loB, hiB = _support_bounds(B)
    rlA, rhA = A.reliable
    rlB, rhB = B.reliable
    rlA = max(rlA, A.window.lo if A.tail_lo else NEG_INF)
    rlB = max(rlB, B.window.lo if B.tail_lo else NEG_INF)
    rhA = min(rhA, A.window.hi if A.tail_hi else POS_INF)
    rhB = min(rhB, B.window.hi if B.tail_hi else POS_INF)
    # k reliable iff [max(loA, k-hiB), min(hiA, k-loB)] within [rlA, rhA]
    # and the mirrored condition for j; solve for k conservatively.
    lo_k = NEG_INF
    if rlA > NEG_INF and hiB == POS_INF:
        lo_k = POS_INF  # nothing provably complete below
    elif rlA > NEG_INF:
        lo_k = max(lo_k, rlA + hiB)
    if rlB > NEG_INF and hiA == POS_INF:
        lo_k = POS_INF
    elif rlB > NEG_INF:
        lo_k = max(lo_k, rlB + hiA)
    hi_k = POS_INF
    if rhA < POS_INF and loB == NEG_INF:
        hi_k = NEG_INF
    elif rhA < POS_INF:
        hi_k = min(hi_k, rhA + loB)
    if rhB < POS_INF and loA == NEG_INF:
        hi_k = NEG_INF
    elif rhB < POS_INF:
        hi_k = min(hi_k, rhB + loA)
    return lo_k, hi_k


# ---------------------------------------------------------------------------
# Planar composition of complexes


def _binary_planar(
    A: ChainComplex,
    B: ChainComplex,
    ob_op,
    mor_op,
    out_mn: tuple[int, int],
    mode: str | None,
) -> tuple[ChainComplex, dict[int, list[tuple[int, int, int, int]]]]:
    """Shared engine for stack/beside of complexes, Koszul signs included.

    Returns the composite and a layout: per degree, the list of summand
    provenances (i, j, posA, posB) aligned with the object list.
    """
    window = A.window + B.window
    groups: dict[int, list[ShiftedObject]] = {}
    layout: dict[int, list[tuple[int, int, int, int]]] = {}
    index: dict[tuple[int, int, int, int], int] = {}
    for k in range(window.lo, window.hi + 1):
        objs: list[ShiftedObject] = []
        lay: list[tuple[int, int, int, int]] = []
        for i in sorted(A.groups):
            j = k - i
            if j not in B.groups:
                continue
            for pa, oa in enumerate(A.groups[i]):
                for pb, ob in enumerate(B.groups[j]):
                    index[(i, j, pa, pb)] = len(objs)
                    objs.append(ob_op(oa, ob))
                    lay.append((i, j, pa, pb))
        if objs:
            groups[k] = objs
            layout[k] = lay

    diff: dict[int, Matrix] = {}

    def add_entry(k: int, r: int, c: int, f: CanonicalCobordism):
        if f.is_zero():
            return
        mat = diff.setdefault(k, {})
        mat[(r, c)] = mat[(r, c)] + f if (r, c) in mat else f

    for k, lay in layout.items():
        for cpos, (i, j, pa, pb) in enumerate(lay):
            oa = A.groups[i][pa]
            ob = B.groups[j][pb]
            # T(d_A, 1)
            for (r2, c2), f in A.diff.get(i, {}).items():
                if c2 != pa:
                    continue
                key = (i + 1, j, r2, pb)
                if key in index:
                    add_entry(k, index[key], cpos, mor_op(f, cob.identity_cob(ob)))
            # (-1)^i T(1, d_B)
            sign = -1 if i % 2 else 1
            for (r2, c2), g in B.diff.get(j, {}).items():
                if c2 != pb:
                    continue
                key = (i, j + 1, pa, r2)
                if key in index:
                    add_entry(
                        k, index[key], cpos, mor_op(cob.identity_cob(oa), g).scale(sign)
                    )

    out = ChainComplex(
        out_mn[0],
        out_mn[1],
        window,
        groups,
        diff,
        mode=mode or A.mode,
        tail_lo=A.tail_lo or B.tail_lo,
        tail_hi=A.tail_hi or B.tail_hi,
        reliable=_combine_reliability(A, B),
    )
    return out, layout


def stack_complexes(
    A: ChainComplex, B: ChainComplex, mode: str | None = None
) -> tuple[ChainComplex, dict]:
    """Vertical planar composition (A over B)."""
    if A.n != B.m:
        raise DimensionError(f"cannot stack ({A.m},{A.n}) over ({B.m},{B.n})")
    return _binary_planar(
        A, B, cob.stack_objects, cob.stack, (A.m, B.n), mode
    )


def beside_complexes(
    A: ChainComplex, B: ChainComplex, mode: str | None = None
) -> tuple[ChainComplex, dict]:
    return _binary_planar(
        A, B, cob.beside_objects, cob.beside, (A.m + B.m, A.n + B.n), mode
    )


def trace_complex(A: ChainComplex) -> ChainComplex:
    """Markov closure of a complex over Cob^n_n (single slot: no signs)."""
    if A.m != A.n:
        raise DimensionError("trace needs a square complex")
    groups = {
        k: [cob.trace_object(o) for o in objs] for k, objs in A.groups.items()
    }
    diff = {
        k: {rc: cob.trace(f) for rc, f in mat.items()} for k, mat in A.diff.items()
    }
    return ChainComplex(
        0, 0, A.window, groups, diff, A.mode, A.tail_lo, A.tail_hi, A.reliable
    )


def stack_chain_maps(F: ChainMap, G: ChainMap) -> ChainMap:
    """T(F, G) on vertical stacking, Koszul sign (-1)^{i |G|} on summand i."""
    A, B = F.source, G.source
    A2, B2 = F.target, G.target
    SRC, src_layout = stack_complexes(A, B)
    TGT, tgt_layout = stack_complexes(A2, B2)
    tgt_index = {
        k: {prov: p for p, prov in enumerate(lay)} for k, lay in tgt_layout.items()
    }
    mats: dict[int, Matrix] = {}
    for k, lay in src_layout.items():
        mat: Matrix = {}
        for cpos, (i, j, pa, pb) in enumerate(lay):
            oa = A.groups[i][pa]
            ob = B.groups[j][pb]
            fmat = F.mats.get(i, {})
            gmat = G.mats.get(j, {})
            # F (x) 1 then 1 (x) G expanded: T(F,G) = T(F,1) . T(1,G) with signs
            for (r2, c2), f in fmat.items():
                if c2 != pa:
                    continue
                for (r3, c3), g in gmat.items():
                    if c3 != pb:
                        continue
                    key = (i + F.hdeg, j + G.hdeg, r2, r3)
                    tk = k + F.hdeg + G.hdeg
                    if tk in tgt_index and key in tgt_index[tk]:
                        sign = -1 if (i * G.hdeg) % 2 else 1
                        term = cob.stack(f, g).scale(sign)
                        rc = (tgt_index[tk][key], cpos)
                        mat[rc] = mat[rc] + term if rc in mat else term
            if F.hdeg == 0 and G.hdeg == 0:
                continue
        mat = {rc: v for rc, v in mat.items() if not v.is_zero()}
        if mat:
            mats[k] = mat
    out = ChainMap(SRC, TGT, F.hdeg + G.hdeg, F.qdeg + G.qdeg, mats)
    return out


def trace_chain_map(F: ChainMap) -> ChainMap:
    return ChainMap(
        trace_complex(F.source),
        trace_complex(F.target),
        F.hdeg,
        F.qdeg,
        {k: {rc: cob.trace(f) for rc, f in mat.items()} for k, mat in F.mats.items()},
    )


# ---------------------------------------------------------------------------
# Shifts, cones, duals


def shift_h(A: ChainComplex, s: int) -> ChainComplex:
    """The s-fold homological shift: (t^s A)^k = A^{k-s}, differential
    (-1)^s d."""
    sign = -1 if s % 2 else 1
    return replace(
        A,
        window=Window(A.window.lo + s, A.window.hi + s),
        groups={k + s: v for k, v in A.groups.items()},
        diff={
            k + s: {rc: f.scale(sign) for rc, f in mat.items()}
            for k, mat in A.diff.items()
        },
        reliable=(A.reliable[0] + s, A.reliable[1] + s),
        labels=None,
    )


def shift_q(A: ChainComplex, s: int) -> ChainComplex:
    return replace(
        A,
        groups={
            k: [o.shifted(s) for o in objs] for k, objs in A.groups.items()
        },
        diff={
            k: {
                rc: f.with_shifts(f.source.qshift + s, f.target.qshift + s)
                for rc, f in mat.items()
            }
            for k, mat in A.diff.items()
        },
        labels=None,
    )


def cone(F: ChainMap) -> ChainComplex:
    """Cone(F: A -> B)^k = A^{k+1} (+) B^k, d = [[-dA, 0], [F, dB]]."""
    if F.hdeg != 0 or F.qdeg != 0:
        raise DimensionError("cone needs a degree-(0,0) chain map")
    A, B = F.source, F.target
    window = Window(min(A.window.lo - 1, B.window.lo), max(A.window.hi - 1, B.window.hi))
    groups: dict[int, list[ShiftedObject]] = {}
    for k in range(window.lo, window.hi + 1):
        objs = list(A.groups.get(k + 1, [])) + list(B.groups.get(k, []))
        if objs:
            groups[k] = objs
    diff: dict[int, Matrix] = {}
    for k in range(window.lo, window.hi + 1):
        na_src = len(A.groups.get(k + 1, []))
        na_tgt = len(A.groups.get(k + 2, []))
        mat: Matrix = {}
        for (r, c), f in A.diff.get(k + 1, {}).items():
            mat[(r, c)] = f.scale(-1)
        for (r, c), f in F.mats.get(k + 1, {}).items():
            mat[(na_tgt + r, c)] = f
        for (r, c), f in B.diff.get(k, {}).items():
            mat[(na_tgt + r, na_src + c)] = f
        if mat:
            diff[k] = mat
    rel = (
        max(A.reliable[0] - 1, B.reliable[0]),
        min(A.reliable[1] - 1, B.reliable[1]),
    )
    return ChainComplex(
        A.m, A.n, window, groups, diff, A.mode,
        A.tail_lo or B.tail_lo, A.tail_hi or B.tail_hi, rel,
    )


def dual_complex(A: ChainComplex) -> ChainComplex:
    """(A^v)^k = (A^{-k})^v with differential -(d_A)^v; window and
    totalization mode are reversed."""
    groups = {-k: [cob.dualize_ob(o) for o in objs] for k, objs in A.groups.items()}
    diff: dict[int, Matrix] = {}
    for k, mat in A.diff.items():
        # d_A^k : A^k -> A^{k+1} dualizes to (A^v)^{-k-1} -> (A^v)^{-k}
        newmat: Matrix = {}
        for (r, c), f in mat.items():
            newmat[(c, r)] = cob.dualize_cob(f).scale(-1)
        if newmat:
            diff[-k - 1] = newmat
    return ChainComplex(
        A.n,
        A.m,
        -A.window,
        groups,
        diff,
        "product" if A.mode == "sum" else "sum",
        tail_lo=A.tail_hi,
        tail_hi=A.tail_lo,
        reliable=(-A.reliable[1], -A.reliable[0]),
    )


def dual_chain_map(F: ChainMap) -> ChainMap:
    """F^v with the sign (-1)^{ik} on the component out of (B^v)^i."""
    k = F.hdeg
    mats: dict[int, Matrix] = {}
    for deg, mat in F.mats.items():
        # F_deg : A^deg -> B^{deg+k}; (F^v)_i : (B^v)^i -> (A^v)^{i+k} with
        # i = -deg - k, entry (-1)^{ik} (F_deg)^v
        i = -deg - k
        sign = -1 if (i * k) % 2 else 1
        newmat: Matrix = {}
        for (r, c), f in mat.items():
            newmat[(c, r)] = cob.dualize_cob(f).scale(sign)
        if newmat:
            mats[i] = newmat
    # the underlying cobordisms keep their q-degree: both endpoint shifts negate
    return ChainMap(dual_complex(F.target), dual_complex(F.source), k, F.qdeg, mats)


def reflect_x_complex(A: ChainComplex) -> ChainComplex:
    groups = {k: [cob.reflect_x_ob(o) for o in objs] for k, objs in A.groups.items()}
    diff = {
        k: {rc: cob.reflect_x_cob(f) for rc, f in mat.items()}
        for k, mat in A.diff.items()
    }
    return replace(A, m=A.n, n=A.m, groups=groups, diff=diff, labels=None)


def reflect_y_complex(A: ChainComplex) -> ChainComplex:
    groups = {k: [cob.reflect_y_ob(o) for o in objs] for k, objs in A.groups.items()}
    diff = {
        k: {rc: cob.reflect_y_cob(f) for rc, f in mat.items()}
        for k, mat in A.diff.items()
    }
    return replace(A, groups=groups, diff=diff, labels=None)


# ---------------------------------------------------------------------------
# Delooping and Gaussian elimination (mutable working form)


class _Work:
    """Mutable id-based copy of a complex used by simplify."""

    def __init__(self, C: ChainComplex, protected: set[tuple[int, int]] | None = None):
        self.m, self.n = C.m, C.n
        self.window = C.window
        self.mode = C.mode
        self.tail_lo, self.tail_hi = C.tail_lo, C.tail_hi
        self.reliable = C.reliable
        self.next_id = 0
        self.order: dict[int, list[int]] = {}
        self.obj: dict[int, ShiftedObject] = {}
        self.deg: dict[int, int] = {}
        # entries[(kid_target, kid_source)] with degree implied
        self.out_edges: dict[int, dict[int, CanonicalCobordism]] = {}
        self.in_edges: dict[int, dict[int, CanonicalCobordism]] = {}
        self.protected: set[int] = set()
        self.label: dict[int, object] = {}
        for k, objs in C.groups.items():
            ids = []
            for p, o in enumerate(objs):
                oid = self.next_id
                self.next_id += 1
                self.obj[oid] = o
                self.deg[oid] = k
                ids.append(oid)
                if protected and (k, p) in protected:
                    self.protected.add(oid)
                    self.label[oid] = (k, p)
            self.order[k] = ids
        for k, mat in C.diff.items():
            for (r, c), f in mat.items():
                src = self.order[k][c]
                tgt = self.order[k + 1][r]
                self.out_edges.setdefault(src, {})[tgt] = f
                self.in_edges.setdefault(tgt, {})[src] = f

    def set_edge(self, src: int, tgt: int, f: CanonicalCobordism) -> None:
        if f.is_zero():
            self.out_edges.get(src, {}).pop(tgt, None)
            self.in_edges.get(tgt, {}).pop(src, None)
        else:
            self.out_edges.setdefault(src, {})[tgt] = f
            self.in_edges.setdefault(tgt, {})[src] = f

    def add_edge(self, src: int, tgt: int, f: CanonicalCobordism) -> None:
        cur = self.out_edges.get(src, {}).get(tgt)
        self.set_edge(src, tgt, cur + f if cur is not None else f)

    def remove_object(self, oid: int) -> None:
        for tgt in list(self.out_edges.get(oid, {})):
            self.in_edges.get(tgt, {}).pop(oid, None)
        self.out_edges.pop(oid, None)
        for src in list(self.in_edges.get(oid, {})):
            self.out_edges.get(src, {}).pop(oid, None)
        self.in_edges.pop(oid, None)
        self.order[self.deg[oid]].remove(oid)
        del self.obj[oid], self.deg[oid]

    def to_complex(self, sort_objects: bool = True) -> tuple[ChainComplex, dict[int, tuple[int, int]]]:
        """Rebuild an immutable complex; returns also id -> (degree, pos)."""
        groups: dict[int, list[ShiftedObject]] = {}
        pos: dict[int, tuple[int, int]] = {}
        for k in sorted(self.order):
            ids = self.order[k]
            if not ids:
                continue
            if sort_objects:
                ids = sorted(ids, key=lambda i: (self.obj[i].sort_key(), i))
                self.order[k] = ids
            groups[k] = [self.obj[i] for i in ids]
            for p, i in enumerate(ids):
                pos[i] = (k, p)
        diff: dict[int, Matrix] = {}
        for src, outs in self.out_edges.items():
            for tgt, f in outs.items():
                k, c = pos[src]
                _, r = pos[tgt]
                diff.setdefault(k, {})[(r, c)] = f
        labels = None
        if self.label:
            labels = {
                k: [self.label.get(i) for i in ids]
                for k, ids in self.order.items()
                if ids
            }
        C = ChainComplex(
            self.m, self.n, self.window, groups, diff, self.mode,
            self.tail_lo, self.tail_hi, self.reliable, labels,
        )
        return C, pos


def _deloop_one(work: _Work, oid: int) -> tuple[list[tuple], list[tuple]]:
    """Replace object oid (with >= 1 circle) by two circle-less-by-one
    copies; returns (phi rows, psi cols) as (new_id, cobordism) pairs for
    SDR bookkeeping by the caller."""
    o = work.obj[oid]
    t = o.tangle
    base = t.drop_circle()
    # the dropped circle is the last one (index t.circles - 1)
    j = t.circles - 1
    up = ShiftedObject(base, o.qshift + 1)
    dn = ShiftedObject(base, o.qshift - 1)
    id_up = work.next_id
    id_dn = work.next_id + 1
    work.next_id += 2
    k = work.deg[oid]
    idx = work.order[k].index(oid)
    work.order[k][idx : idx + 1] = [id_up, id_dn]
    work.obj[id_up], work.obj[id_dn] = up, dn
    work.deg[id_up], work.deg[id_dn] = k, k

    big = ShiftedObject(t, o.qshift)

    # Build phi/psi honestly: identity product on the shared components,
    # while the unmatched circle is a (possibly dotted) birth/death disk.
    def birth_death(dotted: bool, src_obj, tgt_obj):
        s_t, t_t = src_obj.tangle, tgt_obj.tangle
        cdx = closure_data(s_t, t_t)
        pieces = []
        dots = []
        owner = {}
        for arc in s_t.arcs():
            owner[("s_arc", arc)] = len(pieces)
            pieces.append(1)
            dots.append(0)
        # shared kept circles: annuli between source copy i and target copy i
        kept = min(s_t.circles, t_t.circles)
        for jj in range(kept):
            owner[("pair", jj)] = len(pieces)
            pieces.append(0)
            dots.append(0)
        # the unmatched circle (on source or target) is a disk
        disk = len(pieces)
        pieces.append(1)
        dots.append(1 if dotted else 0)
        circle_nodes = []
        for cons in cdx.constituents:
            nodes = []
            for side, kind, key in cons:
                if kind == "arc":
                    nodes.append(owner[("s_arc", key if side == "s" else key)])
                else:
                    if key < kept:
                        nodes.append(owner[("pair", key)])
                    else:
                        nodes.append(disk)
            circle_nodes.append(nodes)
        terms = cob.reduce_glued(pieces, dots, [], circle_nodes)
        return CanonicalCobordism(src_obj, tgt_obj, terms)

    phi_up = birth_death(False, big, up)      # plain counit -> q+1
    phi_dn = birth_death(True, big, dn)       # dotted counit -> q-1
    psi_up = birth_death(True, up, big)       # dotted cap
    psi_dn = birth_death(False, dn, big)      # plain cap

    # rewire differentials: d' = phi . d . psi on affected entries; the
    # order slot was already replaced above, so drop edges and maps by hand
    outs = dict(work.out_edges.get(oid, {}))
    ins = dict(work.in_edges.get(oid, {}))
    for tgt in outs:
        work.in_edges.get(tgt, {}).pop(oid, None)
    for src in ins:
        work.out_edges.get(src, {}).pop(oid, None)
    work.out_edges.pop(oid, None)
    work.in_edges.pop(oid, None)
    del work.obj[oid], work.deg[oid]
    for tgt, f in outs.items():
        work.add_edge(id_up, tgt, cob.compose(f, psi_up))
        work.add_edge(id_dn, tgt, cob.compose(f, psi_dn))
    for src, f in ins.items():
        work.add_edge(src, id_up, cob.compose(phi_up, f))
        work.add_edge(src, id_dn, cob.compose(phi_dn, f))
    return (
        [(id_up, phi_up), (id_dn, phi_dn)],
        [(id_up, psi_up), (id_dn, psi_dn)],
    )


class _SDRTracker:
    """Running SDR maps in object-id space while a _Work is being reduced."""

    def __init__(self, work: _Work):
        self.work = work
        self.orig_ids = list(work.obj)
        self.orig_deg = dict(work.deg)
        self.orig_obj = dict(work.obj)
        # r[cur][orig], i[orig][cur], h[orig_tgt][orig_src]
        self.r: dict[int, dict[int, CanonicalCobordism]] = {
            oid: {oid: cob.identity_cob(work.obj[oid])} for oid in work.obj
        }
        self.i: dict[int, dict[int, CanonicalCobordism]] = {
            oid: {oid: cob.identity_cob(work.obj[oid])} for oid in work.obj
        }
        self.h: dict[int, dict[int, CanonicalCobordism]] = {}

    def _r_into(self, cur: int) -> dict[int, CanonicalCobordism]:
        return self.r.setdefault(cur, {})

    def deloop_step(self, old_id: int, phis, psis) -> None:
        row_old = self.r.pop(old_id, {})
        for new_id, phi in phis:
            row = {}
            for orig, f in row_old.items():
                g = cob.compose(phi, f)
                if not g.is_zero():
                    row[orig] = g
            self.r[new_id] = row
        for orig in self.orig_ids:
            col = self.i.get(orig, {})
            f = col.pop(old_id, None)
            if f is None:
                continue
            for new_id, psi in psis:
                g = cob.compose(f, psi)
                if not g.is_zero():
                    col[new_id] = col[new_id] + g if new_id in col else g

    def gauss_step(self, beta: int, alpha: int, inv: CanonicalCobordism,
                   r_corr: list[tuple[int, CanonicalCobordism]],
                   i_corr: list[tuple[int, CanonicalCobordism]]) -> None:
        """Eliminate edge beta -> alpha; inv is its inverse.

        r_corr: pairs (kept_v, map alpha -> v); i_corr: (kept_u, map u -> beta).
        """
        row_alpha = self.r.pop(alpha, {})
        self.r.pop(beta, None)
        for v, corr in r_corr:
            row = self._r_into(v)
            for orig, f in row_alpha.items():
                g = cob.compose(corr, f)
                if g.is_zero():
                    continue
                row[orig] = row[orig] + g if orig in row else g
        i_beta_cols: dict[int, CanonicalCobordism] = {}
        for orig in self.orig_ids:
            col = self.i.get(orig, {})
            f = col.pop(beta, None)
            if f is not None:
                i_beta_cols[orig] = f
            col.pop(alpha, None)
        for u, corr in i_corr:
            for orig, f in i_beta_cols.items():
                g = cob.compose(f, corr)
                if g.is_zero():
                    continue
                col = self.i[orig]
                col[u] = col[u] + g if u in col else g
        # h += i_old[., beta] . inv . r_old[alpha, .]
        for orig_t, f in i_beta_cols.items():
            left = cob.compose(f, inv)
            for orig_s, g in row_alpha.items():
                term = cob.compose(left, g)
                if term.is_zero():
                    continue
                row = self.h.setdefault(orig_t, {})
                row[orig_s] = row[orig_s] + term if orig_s in row else term

    def finish(self, big: ChainComplex, orig_pos: dict[int, tuple[int, int]],
               small: ChainComplex, new_pos: dict[int, tuple[int, int]]) -> Equivalence:
        r_mats: dict[int, Matrix] = {}
        for cur, row in self.r.items():
            if cur not in new_pos:
                continue
            k2, rr = new_pos[cur]
            for orig, f in row.items():
                k, c = orig_pos[orig]
                r_mats.setdefault(k, {})[(rr, c)] = f
        i_mats: dict[int, Matrix] = {}
        for orig, col in self.i.items():
            k, rr = orig_pos[orig]
            for cur, f in col.items():
                if cur not in new_pos:
                    continue
                k2, c = new_pos[cur]
                i_mats.setdefault(k2, {})[(rr, c)] = f
        h_mats: dict[int, Matrix] = {}
        for orig_t, row in self.h.items():
            kt, rr = orig_pos[orig_t]
            for orig_s, f in row.items():
                ks, c = orig_pos[orig_s]
                h_mats.setdefault(ks, {})[(rr, c)] = f
        return Equivalence(
            big,
            small,
            ChainMap(big, small, 0, 0, r_mats),
            ChainMap(small, big, 0, 0, i_mats),
            ChainMap(big, big, -1, 0, h_mats),
        )


def _pivot_sweep(work: _Work) -> list[tuple[int, int]]:
    """All invertible entries at the current state in the deterministic scan
    order: lowest homological degree, then smallest source position, then
    smallest target position.  Entries are re-validated before use."""
    out = []
    for k in sorted(work.order):
        for spos, src in enumerate(work.order[k]):
            if src in work.protected:
                continue
            outs = work.out_edges.get(src)
            if not outs:
                continue
            tgt_order = {t: p for p, t in enumerate(work.order.get(k + 1, []))}
            found = []
            for tgt, f in outs.items():
                if tgt in work.protected:
                    continue
                if f.is_identity_iso() is not None:
                    found.append((tgt_order[tgt], tgt))
            if found:
                found.sort()
                out.append((src, found[0][1]))
    return out


def _eliminate(work: _Work, tracker: _SDRTracker | None, src: int, tgt: int, sign: int) -> None:
    inv = cob.identity_cob(work.obj[src]).scale(sign)
    ins_alpha = {u: f for u, f in work.in_edges.get(tgt, {}).items() if u != src}
    outs_beta = {v: f for v, f in work.out_edges.get(src, {}).items() if v != tgt}
    if tracker is not None:
        r_corr = [(v, cob.compose(f, inv).scale(-1)) for v, f in outs_beta.items()]
        i_corr = [(u, cob.compose(inv, f).scale(-1)) for u, f in ins_alpha.items()]
        tracker.gauss_step(src, tgt, inv, r_corr, i_corr)
    for u, fu in ins_alpha.items():
        left = cob.compose(inv, fu)
        for v, fv in outs_beta.items():
            corr = cob.compose(fv, left).scale(-1)
            work.add_edge(u, v, corr)
    work.remove_object(src)
    work.remove_object(tgt)


def deloop(C: ChainComplex) -> tuple[ChainComplex, ChainMap, ChainMap]:
    """Remove all circles from all chain groups.

    Returns (delooped complex, iso to it, iso from it); the isos compose to
    identities on the nose.
    """
    work = _Work(C)
    tracker = _SDRTracker(work)
    orig, orig_pos = work.to_complex(sort_objects=False)
    changed = True
    while changed:
        changed = False
        for oid in [o for o in work.obj if work.obj[o].tangle.circles > 0]:
            phis, psis = _deloop_one(work, oid)
            tracker.deloop_step(oid, phis, psis)
            changed = True
    small, new_pos = work.to_complex(sort_objects=False)
    eq = tracker.finish(C, orig_pos, small, new_pos)
    return small, eq.r, eq.i


def gaussian_eliminate(
    C: ChainComplex, entry: tuple[int, int, int]
) -> tuple[ChainComplex, ChainMap, ChainMap, ChainMap]:
    """Eliminate the invertible differential entry (degree, row, col).

    Returns (smaller complex, retraction, inclusion, homotopy) satisfying
    r.i = 1, 1 - i.r = dH + Hd, r.H = 0, H.i = 0, H.H = 0.
    """
    k, r, c = entry
    f = C.entry(k, r, c)
    if f is None:
        raise SpinhomError(f"no differential entry at {entry}")
    sign = f.is_identity_iso()
    if sign is None:
        raise SpinhomError(f"entry at {entry} is not an isomorphism")
    work = _Work(C)
    tracker = _SDRTracker(work)
    _, orig_pos = work.to_complex(sort_objects=False)
    src = work.order[k][c]
    tgt = work.order[k + 1][r]
    _eliminate(work, tracker, src, tgt, sign)
    small, new_pos = work.to_complex(sort_objects=False)
    eq = tracker.finish(C, orig_pos, small, new_pos)
    return small, eq.r, eq.i, eq.h


def simplify(
    C: ChainComplex,
    want_equivalence: bool = False,
    protected: set[tuple[int, int]] | None = None,
    max_steps: int = 200000,
) -> tuple[ChainComplex, Equivalence | None]:
    """Deloop and Gaussian-eliminate until no circles and no invertible
    entries remain (outside `protected` objects, given as (degree, pos)).

    Deterministic: circles are removed first, then pivots are taken in
    (degree, source position, target position) order.
    """
    work = _Work(C, protected)
    tracker = _SDRTracker(work) if want_equivalence else None
    orig_pos = None
    if tracker is not None:
        _, orig_pos = work.to_complex(sort_objects=False)
    steps = 0
    while True:
        changed = False
        circled = [
            oid
            for k in sorted(work.order)
            for oid in list(work.order[k])
            if work.obj[oid].tangle.circles > 0 and oid not in work.protected
        ]
        for oid in circled:
            phis, psis = _deloop_one(work, oid)
            if tracker is not None:
                tracker.deloop_step(oid, phis, psis)
            changed = True
            steps += 1
            if steps > max_steps:
                raise ResourceError("simplify exceeded the step cap")
        for src, tgt in _pivot_sweep(work):
            if src not in work.obj or tgt not in work.obj:
                continue
            f = work.out_edges.get(src, {}).get(tgt)
            if f is None:
                continue
            sign = f.is_identity_iso()
            if sign is None:
                continue
            _eliminate(work, tracker, src, tgt, sign)
            changed = True
            steps += 1
            if steps > max_steps:
                raise ResourceError("simplify exceeded the step cap")
        if not changed:
            break
    small, new_pos = work.to_complex(sort_objects=(protected is None))
    eq = None
    if tracker is not None:
        eq = tracker.finish(C, orig_pos, small, new_pos)
    return small, eq


# ---------------------------------------------------------------------------
# Hom complexes and the tautological TQFT


def _basis_generators(a: ShiftedObject, b: ShiftedObject):
    """Canonical basis of Hom(a, b): dot assignments with their q-degrees."""
    cd = closure_data(a.tangle, b.tangle)
    base = b.qshift - a.qshift - cd.n + (a.tangle.m + a.tangle.n) // 2
    out = []
    for assign in itertools.product((0, 1), repeat=cd.n):
        out.append((assign, base + 2 * sum(assign)))
    return out


def tautological(C: ChainComplex) -> ModuleComplex:
    """Hom(empty, -) applied to a closed complex: free Z[alpha]-modules on
    dot assignments, differential transported by composition."""
    if C.m or C.n:
        raise DimensionError("tautological functor needs a closed complex")
    empty = ShiftedObject(FlatTangle.empty(), 0)
    gens: dict[int, list[tuple[object, int]]] = {}
    pos: dict[tuple[int, int, tuple], int] = {}
    for k in sorted(C.groups):
        lst = []
        for p, o in enumerate(C.groups[k]):
            for assign, qdeg in _basis_generators(empty, o):
                pos[(k, p, assign)] = len(lst)
                lst.append(((k, p, assign), qdeg))
        if lst:
            gens[k] = lst
    diff: dict[int, dict[tuple[int, int], AlphaPoly]] = {}
    for k, mat in C.diff.items():
        dm: dict[tuple[int, int], AlphaPoly] = {}
        for (r, c), f in mat.items():
            src_obj = C.groups[k][c]
            for assign, _q in _basis_generators(empty, src_obj):
                gen = CanonicalCobordism.generator(empty, src_obj, assign)
                img = cob.compose(f, gen)
                for t_assign, poly in img.terms.items():
                    key = (pos[(k, c, assign)], pos[(k + 1, r, t_assign)])
                    rr, cc = key[1], key[0]
                    dm[(rr, cc)] = dm.get((rr, cc), AlphaPoly()) + poly
        dm = {rc: v for rc, v in dm.items() if v}
        if dm:
            diff[k] = dm
    return ModuleComplex(gens, diff, C.reliable)


def hom_complex_direct(A: ChainComplex, B: ChainComplex) -> ModuleComplex:
    """Hom-complex built from the definition: generators are canonical
    cobordisms A^i -> B^{i+t}, differential the supercommutator
    [d, f] = d_B . f - (-1)^t f . d_A."""
    if (A.m, A.n) != (B.m, B.n):
        raise DimensionError("hom complex needs matching boundaries")
    gens: dict[int, list[tuple[object, int]]] = {}
    pos: dict[tuple, int] = {}
    degs_a = sorted(A.groups)
    degs_b = sorted(B.groups)
    tmin = min(j - i for i in degs_a for j in degs_b) if degs_a and degs_b else 0
    tmax = max(j - i for i in degs_a for j in degs_b) if degs_a and degs_b else 0
    for t in range(tmin, tmax + 1):
        lst = []
        for i in degs_a:
            j = i + t
            if j not in B.groups:
                continue
            for pa, oa in enumerate(A.groups[i]):
                for pb, ob in enumerate(B.groups[j]):
                    for assign, qdeg in _basis_generators(oa, ob):
                        pos[(t, i, pa, pb, assign)] = len(lst)
                        lst.append((((i, pa), (j, pb), assign), qdeg))
        if lst:
            gens[t] = lst
    diff: dict[int, dict[tuple[int, int], AlphaPoly]] = {}

    def add(t: int, row_key, col_key, poly: AlphaPoly, sign: int = 1) -> None:
        if row_key not in pos or col_key not in pos:
            return
        rc = (pos[row_key], pos[col_key])
        dm = diff.setdefault(t, {})
        add_poly = poly if sign == 1 else -poly
        dm[rc] = dm.get(rc, AlphaPoly()) + add_poly

    for t in range(tmin, tmax + 1):
        if t not in gens:
            continue
        for i in degs_a:
            j = i + t
            if j not in B.groups:
                continue
            for pa, oa in enumerate(A.groups[i]):
                for pb, ob in enumerate(B.groups[j]):
                    for assign, _q in _basis_generators(oa, ob):
                        gen = CanonicalCobordism.generator(oa, ob, assign)
                        col_key = (t, i, pa, pb, assign)
                        # d_B . f
                        for (r2, c2), g in B.diff.get(j, {}).items():
                            if c2 != pb:
                                continue
                            img = cob.compose(g, gen)
                            for t_assign, poly in img.terms.items():
                                add(t, (t + 1, i, pa, r2, t_assign), col_key, poly)
                        # -(-1)^t f . d_A
                        sgn = -1 if t % 2 == 0 else 1
                        for (r2, c2), g in A.diff.get(i - 1, {}).items():
                            if r2 != pa:
                                continue
                            img = cob.compose(gen, g)
                            for t_assign, poly in img.terms.items():
                                add(t, (t + 1, i - 1, c2, pb, t_assign), col_key,
                                    poly, sgn)
    for t in list(diff):
        diff[t] = {rc: v for rc, v in diff[t].items() if v}
        if not diff[t]:
            del diff[t]
    rel = _combine_reliability(B, dual_complex(A))
    return ModuleComplex(gens, diff, rel)


def hom_complex(A: ChainComplex, B: ChainComplex) -> ModuleComplex:
    """Hom-complex via the duality theorem: q^{(m+n)/2} <Tr(B stacked over
    A-dual)>, built with no reference to the supercommutator."""
    if (A.m, A.n) != (B.m, B.n):
        raise DimensionError("hom complex needs matching boundaries")
    T, _ = stack_complexes(B, dual_complex(A), mode="product")
    M = tautological(trace_complex(T))
    return M.shift_q((A.m + A.n) // 2)


def end_complex(A: ChainComplex) -> ModuleComplex:
    return hom_complex(A, A)


# ---------------------------------------------------------------------------
# Bicomplexes (appendix machinery)


@dataclass
class Bicomplex:
    """Bigraded objects with horizontal (degree (1,0)) and vertical
    (degree (0,1)) differentials that square to zero and anticommute."""

    groups: dict[tuple[int, int], list[ShiftedObject]]
    dh: dict[tuple[int, int], Matrix]
    dv: dict[tuple[int, int], Matrix]
    # directions in which the ideal object extends beyond the stored support
    tails: frozenset = frozenset()

    def validate(self) -> None:
        for (i, j), mat in self.dh.items():
            src = self.groups.get((i, j), [])
            tgt = self.groups.get((i + 1, j), [])
            for (r, c), f in mat.items():
                if f.source != src[c] or f.target != tgt[r]:
                    raise IntegrityError("dh entry endpoints mismatch")
        for (i, j), mat in self.dv.items():
            src = self.groups.get((i, j), [])
            tgt = self.groups.get((i, j + 1), [])
            for (r, c), f in mat.items():
                if f.source != src[c] or f.target != tgt[r]:
                    raise IntegrityError("dv entry endpoints mismatch")
        for (i, j) in self.groups:
            a = _mat_mul(self.dh.get((i + 1, j), {}), self.dh.get((i, j), {}))
            if any(not f.is_zero() for f in a.values()):
                raise IntegrityError("dh.dh != 0")
            b = _mat_mul(self.dv.get((i, j + 1), {}), self.dv.get((i, j), {}))
            if any(not f.is_zero() for f in b.values()):
                raise IntegrityError("dv.dv != 0")
            anti: Matrix = {}
            for rc, f in _mat_mul(self.dv.get((i + 1, j), {}), self.dh.get((i, j), {})).items():
                anti[rc] = f
            for rc, f in _mat_mul(self.dh.get((i, j + 1), {}), self.dv.get((i, j), {})).items():
                anti[rc] = anti[rc] + f if rc in anti else f
            if any(not f.is_zero() for f in anti.values()):
                raise IntegrityError("dh and dv do not anticommute")

    def quadrant_support(self) -> set[str]:
        out = set()
        for (i, j) in self.groups:
            if i > 0 and j < 0:
                out.add("IV")
            if i < 0 and j > 0:
                out.add("II")
            if i > 0 and j > 0:
                out.add("I")
            if i < 0 and j < 0:
                out.add("III")
        if {"right", "down"} <= self.tails or (
            "down" in self.tails and any(i > 0 for i, _ in self.groups)
        ) or (
            "right" in self.tails and any(j < 0 for _, j in self.groups)
        ) or {"right", "down"} & self.tails and not self.groups:
            out.add("IV")
        if {"left", "up"} <= self.tails or (
            "up" in self.tails and any(i < 0 for i, _ in self.groups)
        ) or (
            "left" in self.tails and any(j > 0 for _, j in self.groups)
        ):
            out.add("II")
        return out


def bicomplex_from_stack(A: ChainComplex, B: ChainComplex) -> Bicomplex:
    """The bicomplex A^i (x) B^j with dh = stack(d_A, 1) and
    dv = (-1)^i stack(1, d_B)."""
    groups: dict[tuple[int, int], list[ShiftedObject]] = {}
    for i, objs_a in A.groups.items():
        for j, objs_b in B.groups.items():
            groups[(i, j)] = [
                cob.stack_objects(oa, ob) for oa in objs_a for ob in objs_b
            ]
    nb = {j: len(objs) for j, objs in B.groups.items()}
    dh: dict[tuple[int, int], Matrix] = {}
    dv: dict[tuple[int, int], Matrix] = {}
    for (i, j), objs in groups.items():
        na = len(A.groups[i])
        mat_h: Matrix = {}
        for (r, c), f in A.diff.get(i, {}).items():
            if (i + 1, j) not in groups:
                continue
            for pb, ob in enumerate(B.groups[j]):
                entry = cob.stack(f, cob.identity_cob(ob))
                mat_h[(r * nb[j] + pb, c * nb[j] + pb)] = entry
        if mat_h:
            dh[(i, j)] = mat_h
        mat_v: Matrix = {}
        sign = -1 if i % 2 else 1
        for (r, c), g in B.diff.get(j, {}).items():
            if (i, j + 1) not in groups:
                continue
            for pa, oa in enumerate(A.groups[i]):
                entry = cob.stack(cob.identity_cob(oa), g).scale(sign)
                mat_v[(pa * nb[j + 1] + r, pa * nb[j] + c)] = entry
        if mat_v:
            dv[(i, j)] = mat_v
    tails = set()
    if A.tail_lo:
        tails.add("up")
    if A.tail_hi:
        tails.add("down")
    if B.tail_lo:
        tails.add("left")
    if B.tail_hi:
        tails.add("right")
    return Bicomplex(groups, dh, dv, frozenset(tails))


def total_complex(
    B: Bicomplex, mode: str, m: int = 0, n: int = 0
) -> tuple[ChainComplex, dict[int, list[tuple[int, int, int]]]]:
    """Totalization along antidiagonals; at a finite truncation sum and
    product agree and `mode` is metadata."""
    layout: dict[int, list[tuple[int, int, int]]] = {}
    groups: dict[int, list[ShiftedObject]] = {}
    index: dict[tuple[int, int, int], int] = {}
    for (i, j) in sorted(B.groups):
        for p, o in enumerate(B.groups[(i, j)]):
            k = i + j
            groups.setdefault(k, []).append(o)
            layout.setdefault(k, []).append((i, j, p))
            index[(i, j, p)] = len(groups[k]) - 1
    diff: dict[int, Matrix] = {}
    for (i, j), mat in B.dh.items():
        for (r, c), f in mat.items():
            k = i + j
            rr = index.get((i + 1, j, r))
            cc = index.get((i, j, c))
            if rr is None or cc is None:
                continue
            diff.setdefault(k, {})[(rr, cc)] = f
    for (i, j), mat in B.dv.items():
        for (r, c), f in mat.items():
            k = i + j
            rr = index.get((i, j + 1, r))
            cc = index.get((i, j, c))
            if rr is None or cc is None:
                continue
            dm = diff.setdefault(k, {})
            dm[(rr, cc)] = dm[(rr, cc)] + f if (rr, cc) in dm else f
    if groups:
        window = Window(min(groups), max(groups))
    else:
        window = Window(0, 0)
    C = ChainComplex(m, n, window, groups, diff, mode)
    return C, layout


def bicomplex_contraction(
    B: Bicomplex,
    col_homotopies: dict[int, dict[tuple[int, int], Matrix]],
    mode: str,
    m: int = 0,
    n: int = 0,
) -> ChainMap:
    """Contraction H = sum_m (-1)^m h (dh h)^m of a bicomplex with
    contractible columns, as a homotopy on the total complex.

    col_homotopies[i][(i, j)] holds the matrices of the column nulhomotopy
    h_i : B^{i,j} -> B^{i,j-1} with 1 = dv h + h dv.  The quadrant
    precondition from the appendix is enforced: sum-mode needs no support
    in quadrant IV, product-mode none in quadrant II.
    """
    quads = B.quadrant_support()
    if mode == "sum" and "IV" in quads:
        raise SpinhomError("sum-mode contraction requires no quadrant-IV support")
    if mode == "product" and "II" in quads:
        raise SpinhomError("product-mode contraction requires no quadrant-II support")
    T, layout = total_complex(B, mode, m, n)
    index: dict[tuple[int, int, int], int] = {}
    for k, lay in layout.items():
        for p, (i, j, pp) in enumerate(lay):
            index[(i, j, pp)] = p

    def h_apply(vec: dict[tuple[int, int, int], CanonicalCobordism]):
        out: dict[tuple[int, int, int], CanonicalCobordism] = {}
        for (i, j, p), f in vec.items():
            hmat = col_homotopies.get(i, {}).get((i, j), {})
            for (r, c), hval in hmat.items():
                if c != p:
                    continue
                key = (i, j - 1, r)
                term = cob.compose(hval, f)
                if term.is_zero():
                    continue
                out[key] = out[key] + term if key in out else term
        return out

    def dh_apply(vec):
        out: dict[tuple[int, int, int], CanonicalCobordism] = {}
        for (i, j, p), f in vec.items():
            mat = B.dh.get((i, j), {})
            for (r, c), dval in mat.items():
                if c != p:
                    continue
                key = (i + 1, j, r)
                term = cob.compose(dval, f)
                if term.is_zero():
                    continue
                out[key] = out[key] + term if key in out else term
        return out

    mats: dict[int, Matrix] = {}
    for k, lay in layout.items():
        for cpos, (i, j, p) in enumerate(lay):
            src_obj = B.groups[(i, j)][p]
            vec = {(i, j, p): cob.identity_cob(src_obj)}
            sign = 1
            term = h_apply(vec)
            while term:
                for (ii, jj, pp), f in term.items():
                    if (ii, jj, pp) not in index:
                        continue
                    rr = index[(ii, jj, pp)]
                    dm = mats.setdefault(k, {})
                    g = f.scale(sign)
                    dm[(rr, cpos)] = dm[(rr, cpos)] + g if (rr, cpos) in dm else g
                sign = -sign
                term = h_apply(dh_apply(term))
    for k in list(mats):
        mats[k] = {rc: f for rc, f in mats[k].items() if not f.is_zero()}
        if not mats[k]:
            del mats[k]
    return ChainMap(T, T, -1, 0, mats)


# ---------------------------------------------------------------------------
# Homotopy detection at alpha = 0


def _map_coords_alpha0(F: ChainMap) -> dict[tuple, int]:
    """Coordinates of a chain map in the canonical-generator basis of the
    direct Hom-complex, keeping only the alpha-degree-0 part."""
    out: dict[tuple, int] = {}
    for k, mat in F.mats.items():
        for (r, c), f in mat.items():
            for assign, poly in f.terms.items():
                v = poly.coeffs.get(0, 0)
                if v:
                    out[(k, c, r, assign)] = out.get((k, c, r, assign), 0) + v
    return {k: v for k, v in out.items() if v}


def homotopy_witness(
    F: ChainMap, G: ChainMap, eq_lo: float = NEG_INF, eq_hi: float = POS_INF
) -> dict | None:
    """An integer solution H (alpha = 0) of F - G = [d, H], or None.

    The equation is imposed only on components whose source degree lies in
    [eq_lo, eq_hi]; the candidate homotopy ranges over all degrees.  This
    is the honest window-interior statement of "F and G are homotopic".
    The witness is returned as {(degree, posA, posB, assign): coeff} for a
    map of homological degree hdeg - 1.
    """
    from .homology import IntMatrix, solve_integer

    if (F.hdeg, F.qdeg) != (G.hdeg, G.qdeg):
        raise DimensionError("homotopy comparison needs equal bidegrees")
    A, B = F.source, F.target
    h = F.hdeg
    target_coords = _map_coords_alpha0(F - G)

    def basis(hd: int, lo: float, hi: float) -> list[tuple]:
        out = []
        for i in sorted(A.groups):
            if not lo <= i <= hi:
                continue
            j = i + hd
            if j not in B.groups:
                continue
            for pa, oa in enumerate(A.groups[i]):
                for pb, ob in enumerate(B.groups[j]):
                    for assign, qd in _basis_generators(oa, ob):
                        if qd == F.qdeg:
                            out.append((i, pa, pb, assign))
        return out

    src_basis = basis(h - 1, NEG_INF, POS_INF)
    tgt_basis = basis(h, eq_lo, eq_hi)
    tgt_index = {b: i for i, b in enumerate(tgt_basis)}
    entries: dict[tuple[int, int], int] = {}
    sign = -1 if (h - 1) % 2 == 0 else 1
    for cpos, (i, pa, pb, assign) in enumerate(src_basis):
        gen = CanonicalCobordism.generator(
            A.groups[i][pa], B.groups[i + h - 1][pb], assign
        )
        for (r2, c2), g in B.diff.get(i + h - 1, {}).items():
            if c2 != pb:
                continue
            img = cob.compose(g, gen)
            for t_assign, poly in img.terms.items():
                v = poly.coeffs.get(0, 0)
                key = (i, pa, r2, t_assign)
                if v and key in tgt_index:
                    entries[(tgt_index[key], cpos)] = (
                        entries.get((tgt_index[key], cpos), 0) + v
                    )
        for (r2, c2), g in A.diff.get(i - 1, {}).items():
            if r2 != pa:
                continue
            img = cob.compose(gen, g)
            for t_assign, poly in img.terms.items():
                v = poly.coeffs.get(0, 0)
                key = (i - 1, c2, pb, t_assign)
                if v and key in tgt_index:
                    entries[(tgt_index[key], cpos)] = (
                        entries.get((tgt_index[key], cpos), 0) + sign * v
                    )
    vec = [0] * len(tgt_basis)
    for (k, c, r, assign), v in target_coords.items():
        key = (k, c, r, assign)
        if key in tgt_index:
            vec[tgt_index[key]] = v
        elif eq_lo <= k <= eq_hi:
            return None
    M = IntMatrix(len(tgt_basis), len(src_basis), entries)
    x = solve_integer(M, vec)
    if x is None:
        return None
    return {
        (i, pa, pb, assign): x[p]
        for p, (i, pa, pb, assign) in enumerate(src_basis)
        if x[p]
    }


def homotopic_alpha0(F: ChainMap, G: ChainMap, lo: float = NEG_INF, hi: float = POS_INF) -> bool:
    """Whether F - G = [d, H] is integrally solvable at alpha = 0, with the
    equation imposed on source degrees in [lo, hi] only."""
    return homotopy_witness(F, G, eq_lo=lo, eq_hi=hi) is not None


def planar_compose(pattern: str, *complexes: ChainComplex, mode: str | None = None) -> ChainComplex:
    """Planar composition of chain complexes along a named pattern.

    "stack" and "beside" take two or more complexes (left-associated, with
    the Koszul sign rule); "trace" takes one.  `mode` records which
    completion the truncation approximates.
    """
    if pattern == "trace":
        (A,) = complexes
        out = trace_complex(A)
        return replace(out, mode=mode or out.mode)
    if pattern not in ("stack", "beside"):
        raise SpinhomError(f"unknown planar pattern {pattern!r}")
    op = stack_complexes if pattern == "stack" else beside_complexes
    if len(complexes) < 2:
        raise SpinhomError("planar composition needs at least two complexes")
    out = complexes[0]
    for nxt in complexes[1:]:
        out, _ = op(out, nxt, mode)
    return out


# spec-facing aliases
dual_map = dual_chain_map
Homotopy = ChainMap
