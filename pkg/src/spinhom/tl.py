"""Temperley-Lieb diagram algebra over Q(q), with Jones-Wenzl projectors.

This is the exact decategorified layer: every categorified computation in
the package is checked against it through graded Euler characteristics.

Point convention for a diagram with m top and n bottom points: indices
0..m-1 run along the top from left to right, indices m..m+n-1 along the
bottom from left to right.  Walking the boundary circularly (top left to
right, then bottom right to left) a planar matching is exactly a balanced
bracket sequence, which is checked by a stack scan.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from . import expr as ex
from .errors import ArityError, DimensionError, ResourceError, SpinhomError
from .laurent import LaurentPoly, RatFunc, quantum_integer

#: circle value q + q^-1
LOOP = LaurentPoly({1: 1, -1: 1})

#: guard against Catalan blowup; dim TL_n is the n-th Catalan number
MAX_STORED_MATCHINGS = 10**6


@dataclass(frozen=True)
class Matching:
    """A planar perfect matching of m top and n bottom points."""

    m: int
    n: int
    pairs: tuple[int, ...]

    def __post_init__(self):
        if (self.m + self.n) % 2 != 0:
            raise DimensionError("odd number of boundary points")
        if len(self.pairs) != self.m + self.n:
            raise DimensionError("pairing length does not match boundary count")
        p = self.pairs
        if not all(0 <= p[i] < len(p) and p[i] != i and p[p[i]] == i for i in range(len(p))):
            raise SpinhomError("pairing is not a fixed-point-free involution")
        if not _is_planar(self.m, self.n, p):
            raise SpinhomError("pairing is not planar")

    @staticmethod
    def identity(n: int) -> "Matching":
        return Matching(n, n, tuple((i + n) % (2 * n) for i in range(2 * n)))

    @staticmethod
    def e(i: int, n: int) -> "Matching":
        """The cap-cup diagram e_i in TL_n, 0-indexed: 0 <= i <= n-2."""
        if not 0 <= i <= n - 2:
            raise DimensionError(f"e_{i} does not exist in TL_{n}")
        pairs = list(Matching.identity(n).pairs)
        pairs[i], pairs[i + 1] = i + 1, i
        pairs[n + i], pairs[n + i + 1] = n + i + 1, n + i
        return Matching(n, n, tuple(pairs))

    def flip(self) -> "Matching":
        """Swap top and bottom (reflection about the x-axis)."""
        m, n = self.m, self.n

        def remap(i: int) -> int:
            return i + n if i < m else i - m

        new = [0] * (m + n)
        for i, j in enumerate(self.pairs):
            new[remap(i)] = remap(j)
        return Matching(n, m, tuple(new))

    def mirror(self) -> "Matching":
        """Reflect left-right (about the y-axis)."""
        m, n = self.m, self.n

        def remap(i: int) -> int:
            return m - 1 - i if i < m else m + (m + n - 1 - i)

        new = [0] * (m + n)
        for i, j in enumerate(self.pairs):
            new[remap(i)] = remap(j)
        return Matching(m, n, tuple(new))

    def through_strands(self) -> int:
        return sum(1 for i in range(self.m) if self.pairs[i] >= self.m)

    def sort_key(self) -> tuple:
        return (self.m, self.n, self.pairs)


def _is_planar(m: int, n: int, pairs: tuple[int, ...]) -> bool:
    order = list(range(m)) + list(range(m + n - 1, m - 1, -1))
    pos = {p: k for k, p in enumerate(order)}
    stack: list[int] = []
    for p in order:
        q = pairs[p]
        if pos[q] > pos[p]:
            stack.append(p)
        else:
            if not stack or stack.pop() != q:
                return False
    return not stack


def compose_matchings(a: Matching, b: Matching) -> tuple[Matching, int]:
    """Stack a over b, gluing a's bottom to b's top; returns (result, circles)."""
    if a.n != b.m:
        raise DimensionError(f"cannot stack ({a.m},{a.n}) over ({b.m},{b.n})")
    k = a.n
    m, n = a.m, b.n
    # Result indices: 0..m-1 top (a's top); m..m+n-1 bottom (b's bottom).
    result = [-1] * (m + n)
    seen_mid = [False] * k

    def res_index(side: str, i: int) -> int:
        return i if side == "a" else m + (i - k)

    for start_side, start in [("a", i) for i in range(m)] + [("b", k + j) for j in range(n)]:
        ri = res_index(start_side, start)
        if result[ri] != -1:
            continue
        side, v = start_side, start
        while True:
            v2 = (a if side == "a" else b).pairs[v]
            if side == "a" and v2 < m:
                result[ri], result[v2] = v2, ri
                break
            if side == "b" and v2 >= k:
                rj = m + (v2 - k)
                result[ri], result[rj] = rj, ri
                break
            if side == "a":
                mid = v2 - m
                seen_mid[mid] = True
                side, v = "b", mid
            else:
                mid = v2
                seen_mid[mid] = True
                side, v = "a", m + mid
    circles = 0
    for i in range(k):
        if seen_mid[i]:
            continue
        circles += 1
        side, v = "a", m + i
        while True:
            if side == "a":
                seen_mid[v - m] = True
                v2 = a.pairs[v]
                side, v = "b", v2 - m
            else:
                seen_mid[v] = True
                v2 = b.pairs[v]
                side, v = "a", m + v2
            if side == "a" and seen_mid[v - m]:
                break
    return Matching(m, n, tuple(result)), circles


def beside_matchings(a: Matching, b: Matching) -> Matching:
    """Place a to the left of b."""
    m, n = a.m + b.m, a.n + b.n

    def remap_a(i: int) -> int:
        return i if i < a.m else i + b.m

    def remap_b(i: int) -> int:
        return a.m + i if i < b.m else a.m + a.n + i

    new = [0] * (m + n)
    for i, j in enumerate(a.pairs):
        new[remap_a(i)] = remap_a(j)
    for i, j in enumerate(b.pairs):
        new[remap_b(i)] = remap_b(j)
    return Matching(m, n, tuple(new))


def vertex_matching(a: int, b: int, c: int) -> Matching:
    """The bare trivalent-vertex diagram in TL(a, b+c), projectors excluded."""
    x_ab, x_ac, y = ex.vertex_internal_counts(a, b, c)
    pairs = [0] * (a + b + c)

    def join(i: int, j: int) -> None:
        pairs[i], pairs[j] = j, i

    for i in range(x_ab):
        join(i, a + i)
    for t in range(y):
        join(a + b - 1 - t, a + b + t)
    for j in range(x_ac):
        join(x_ab + j, a + b + y + j)
    return Matching(a, b + c, tuple(pairs))


class TLElement:
    """A Q(q)-linear combination of planar matchings with fixed boundary."""

    __slots__ = ("m", "n", "terms")

    def __init__(self, m: int, n: int, terms: dict[Matching, RatFunc] | None = None):
        self.m = m
        self.n = n
        self.terms: dict[Matching, RatFunc] = {}
        for d, c in (terms or {}).items():
            if d.m != m or d.n != n:
                raise DimensionError("matching boundary does not fit the element")
            if c:
                self.terms[d] = c
        if len(self.terms) > MAX_STORED_MATCHINGS:
            raise ResourceError("stored matching count exceeds the configured cap")

    @staticmethod
    def from_matching(d: Matching, coeff: RatFunc | LaurentPoly | int = 1) -> "TLElement":
        if not isinstance(coeff, RatFunc):
            coeff = RatFunc.from_laurent(coeff)
        return TLElement(d.m, d.n, {d: coeff})

    @staticmethod
    def identity(n: int) -> "TLElement":
        return TLElement.from_matching(Matching.identity(n))

    @staticmethod
    def e(i: int, n: int) -> "TLElement":
        return TLElement.from_matching(Matching.e(i, n))

    @staticmethod
    def zero(m: int, n: int) -> "TLElement":
        return TLElement(m, n)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TLElement):
            return NotImplemented
        return (self.m, self.n) == (other.m, other.n) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.m, self.n, frozenset(self.terms.items())))

    def __add__(self, other: "TLElement") -> "TLElement":
        if (self.m, self.n) != (other.m, other.n):
            raise DimensionError("adding elements with different boundaries")
        acc = dict(self.terms)
        for d, c in other.terms.items():
            s = acc.get(d, RatFunc.zero()) + c
            if s:
                acc[d] = s
            else:
                acc.pop(d, None)
        return TLElement(self.m, self.n, acc)

    def __neg__(self) -> "TLElement":
        return TLElement(self.m, self.n, {d: -c for d, c in self.terms.items()})

    def __sub__(self, other: "TLElement") -> "TLElement":
        return self + (-other)

    def scale(self, c) -> "TLElement":
        if not isinstance(c, RatFunc):
            c = RatFunc.from_laurent(c)
        if not c:
            return TLElement(self.m, self.n)
        return TLElement(self.m, self.n, {d: x * c for d, x in self.terms.items()})

    def flip(self) -> "TLElement":
        """Reflect about the x-axis; coefficients untouched."""
        return TLElement(self.n, self.m, {d.flip(): c for d, c in self.terms.items()})

    def mirror(self) -> "TLElement":
        return TLElement(self.m, self.n, {d.mirror(): c for d, c in self.terms.items()})

    def dual(self) -> "TLElement":
        """Decategorified duality: reflect and apply q -> q^-1 to coefficients."""
        return TLElement(self.n, self.m, {d.flip(): c.bar() for d, c in self.terms.items()})


def compose_tl(a: TLElement, b: TLElement) -> TLElement:
    """Vertical stacking TL(m,k) x TL(k,n) -> TL(m,n); circles become q+q^-1."""
    if a.n != b.m:
        raise DimensionError(f"cannot stack ({a.m},{a.n}) over ({b.m},{b.n})")
    acc: dict[Matching, RatFunc] = {}
    loop = RatFunc.from_laurent(LOOP)
    for da, ca in a.terms.items():
        for db, cb in b.terms.items():
            d, circles = compose_matchings(da, db)
            c = ca * cb
            for _ in range(circles):
                c = c * loop
            s = acc.get(d, RatFunc.zero()) + c
            if s:
                acc[d] = s
            else:
                acc.pop(d, None)
    return TLElement(a.m, b.n, acc)


def beside_tl(a: TLElement, b: TLElement) -> TLElement:
    acc: dict[Matching, RatFunc] = {}
    for da, ca in a.terms.items():
        for db, cb in b.terms.items():
            d = beside_matchings(da, db)
            s = acc.get(d, RatFunc.zero()) + ca * cb
            if s:
                acc[d] = s
    return TLElement(a.m + b.m, a.n + b.n, acc)


def through_degree(x: TLElement) -> int:
    """Max through-strand count over nonzero terms; errors on zero."""
    if x.is_zero():
        raise SpinhomError("through degree of the zero element is undefined")
    return max(d.through_strands() for d in x.terms)


def markov_trace(x: TLElement) -> RatFunc:
    """Close top point i to bottom point i around the side; circles evaluate."""
    if x.m != x.n:
        raise DimensionError("markov trace needs a square element")
    n = x.n
    total = RatFunc.zero()
    loop = RatFunc.from_laurent(LOOP)
    for d, c in x.terms.items():
        seen = [False] * (2 * n)
        circles = 0
        for start in range(2 * n):
            if seen[start]:
                continue
            circles += 1
            v = start
            while not seen[v]:
                seen[v] = True
                w = d.pairs[v]
                seen[w] = True
                v = (w + n) % (2 * n)  # closure arc: top i <-> bottom i
        val = c
        for _ in range(circles):
            val = val * loop
        total = total + val
    return total


@functools.cache
def jones_wenzl(n: int) -> TLElement:
    """The Jones-Wenzl projector p_n, by the Wenzl recursion.

    p_1 = 1_1 and p_{k+1} = p_k - ([k]/[k+1]) p_k e_k p_k, with p_k included
    in TL_{k+1} by a strand on the right.  Both defining axioms (kills all
    turnbacks; p_n - 1_n has through degree < n) are verified exactly before
    the result is returned.
    """
    if n < 0:
        raise SpinhomError("jones_wenzl needs n >= 0")
    if n <= 1:
        return TLElement.identity(n)
    prev = jones_wenzl(n - 1)
    strand = TLElement.identity(1)
    pk = beside_tl(prev, strand)
    ek = TLElement.e(n - 2, n)
    coeff = RatFunc.from_laurent(quantum_integer(n - 1)) / RatFunc.from_laurent(
        quantum_integer(n)
    )
    p = pk - compose_tl(compose_tl(pk, ek), pk).scale(coeff)
    for i in range(n - 1):
        ei = TLElement.e(i, n)
        if not compose_tl(ei, p).is_zero() or not compose_tl(p, ei).is_zero():
            raise SpinhomError(f"Wenzl recursion failed turnback axiom at e_{i}")
    defect = p - TLElement.identity(n)
    if not defect.is_zero() and through_degree(defect) >= n:
        raise SpinhomError("Wenzl recursion failed the through-degree axiom")
    return p


_ZERO_SENTINEL = object()


def _evaluate(e: ex.NetworkExpr):
    match e:
        case ex.Strand(k):
            return TLElement.identity(k)
        case ex.Proj(m):
            return jones_wenzl(m)
        case ex.DualProj(m):
            return jones_wenzl(m).dual()
        case ex.Vertex(a, b, c):
            core = TLElement.from_matching(vertex_matching(a, b, c))
            bottom = beside_tl(jones_wenzl(b), jones_wenzl(c))
            return compose_tl(jones_wenzl(a), compose_tl(core, bottom))
        case ex.Stack(top, bottom):
            t, b = _evaluate(top), _evaluate(bottom)
            if t is _ZERO_SENTINEL or b is _ZERO_SENTINEL:
                return _ZERO_SENTINEL
            return compose_tl(t, b)
        case ex.Beside(left, right):
            l, r = _evaluate(left), _evaluate(right)
            if l is _ZERO_SENTINEL or r is _ZERO_SENTINEL:
                return _ZERO_SENTINEL
            return beside_tl(l, r)
        case ex.Trace(inner):
            v = _evaluate(inner)
            if v is _ZERO_SENTINEL:
                return _ZERO_SENTINEL
            empty = Matching(0, 0, ())
            return TLElement(0, 0, {empty: markov_trace(v)})
        case ex.Dual(inner):
            v = _evaluate(inner)
            if v is _ZERO_SENTINEL:
                return _ZERO_SENTINEL
            return v.dual()
        case ex.Zero():
            return _ZERO_SENTINEL
        case ex.Diagram(m, n, pairs):
            return TLElement.from_matching(Matching(m, n, pairs))
    raise TypeError(f"not a network expression: {e!r}")


def evaluate_network(net: ex.NetworkExpr) -> RatFunc:
    """Exact evaluation of a closed network, substituting p_n on every edge."""
    if not ex.is_closed(net):
        raise ArityError(f"network has free boundary: arity {ex.arity(net)}")
    v = _evaluate(net)
    if v is _ZERO_SENTINEL or v.is_zero():
        return RatFunc.zero()
    empty = Matching(0, 0, ())
    return v.terms.get(empty, RatFunc.zero())


def tl_element_of(e: ex.NetworkExpr) -> TLElement:
    """Evaluate an open expression to its TL element (Zero not allowed)."""
    v = _evaluate(e)
    if v is _ZERO_SENTINEL:
        raise ArityError("cannot evaluate Zero without boundary context")
    return v


def all_matchings(m: int, n: int) -> list[Matching]:
    """All planar matchings with m top and n bottom points, sorted."""
    total = m + n
    if total % 2 != 0:
        return []
    results: list[Matching] = []
    order = list(range(m)) + list(range(m + n - 1, m - 1, -1))
    pairs: dict[int, int] = {}

    def segment(rest: list[int]):
        """Yield once per non-crossing completion of the segment."""
        if not rest:
            yield
            return
        first = rest[0]
        for idx in range(1, len(rest), 2):
            j = rest[idx]
            pairs[first], pairs[j] = j, first
            for _ in segment(rest[1:idx]):
                yield from segment(rest[idx + 1 :])
            del pairs[first], pairs[j]

    for _ in segment(order):
        flat = [0] * total
        for i, j in pairs.items():
            flat[i] = j
        results.append(Matching(m, n, tuple(flat)))
    return sorted(results, key=Matching.sort_key)
