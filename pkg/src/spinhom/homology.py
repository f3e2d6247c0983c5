"""Exact homology of free Z[alpha]-module complexes via Smith normal form.

ModuleComplex is the image of the tautological TQFT: free modules with a
named basis carrying (homological degree, q-degree), and differentials
with alpha-polynomial entries (alpha has q-degree 4, so an entry with
alpha^e connects basis q-degrees differing by 4e).

Specializations: alpha = 0 over Z keeps the bigrading and integral torsion;
alpha = 1 over Q collapses the q-grading and reports ranks per homological
degree only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import IntegrityError
from .laurent import LaurentPoly

AlphaPoly = LaurentPoly


class IntMatrix:
    """Sparse integer matrix with exact arbitrary-precision entries."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: dict[tuple[int, int], int] | None = None):
        self.rows = rows
        self.cols = cols
        self.entries = {k: v for k, v in (entries or {}).items() if v}

    def __getitem__(self, rc: tuple[int, int]) -> int:
        return self.entries.get(rc, 0)

    def dense(self) -> list[list[int]]:
        M = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            M[r][c] = v
        return M

    @staticmethod
    def from_dense(M: list[list[int]]) -> "IntMatrix":
        rows = len(M)
        cols = len(M[0]) if rows else 0
        return IntMatrix(rows, cols, {(r, c): M[r][c] for r in range(rows) for c in range(cols)})

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()})

    def mul(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise IntegrityError("matrix dimension mismatch")
        by_row: dict[int, list[tuple[int, int]]] = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc: dict[tuple[int, int], int] = {}
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                acc[(r, c)] = acc.get((r, c), 0) + v * w
        return IntMatrix(self.rows, other.cols, acc)

    def is_zero(self) -> bool:
        return not self.entries


def _identity_dense(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(M: IntMatrix) -> tuple[list[int], IntMatrix, IntMatrix]:
    """Invariant factors d_1 | d_2 | ... plus unimodular U, V with U M V = D.

    Fraction-free row/column reduction, pivoting on a minimal-absolute-value
    entry to limit coefficient growth.
    """
    A = M.dense()
    rows, cols = M.rows, M.cols
    U = _identity_dense(rows)
    V = _identity_dense(cols)

    def row_op(i, j, q):  # row_i -= q * row_j
        Ai, Aj = A[i], A[j]
        for c in range(cols):
            Ai[c] -= q * Aj[c]
        Ui, Uj = U[i], U[j]
        for c in range(rows):
            Ui[c] -= q * Uj[c]

    def col_op(i, j, q):  # col_i -= q * col_j
        for r in range(rows):
            A[r][i] -= q * A[r][j]
        for r in range(cols):
            V[r][i] -= q * V[r][j]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in range(rows):
            A[r][i], A[r][j] = A[r][j], A[r][i]
        for r in range(cols):
            V[r][i], V[r][j] = V[r][j], V[r][i]

    t = 0
    limit = min(rows, cols)
    while t < limit:
        # find minimal nonzero |entry| in the remaining block
        pivot = None
        best = None
        for r in range(t, rows):
            Ar = A[r]
            for c in range(t, cols):
                v = Ar[c]
                if v:
                    a = abs(v)
                    if best is None or a < best:
                        best, pivot = a, (r, c)
                        if a == 1:
                            break
            if best == 1:
                break
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        while True:
            p = A[t][t]
            done = True
            for r in range(t + 1, rows):
                if A[r][t]:
                    q = A[r][t] // p
                    row_op(r, t, q)
                    if A[r][t]:
                        swap_rows(t, r)
                        done = False
                        p = A[t][t]
            for c in range(t + 1, cols):
                if A[t][c]:
                    q = A[t][c] // p
                    col_op(c, t, q)
                    if A[t][c]:
                        swap_cols(t, c)
                        done = False
                        p = A[t][t]
            if done:
                break
        t += 1

    # enforce divisibility chain
    r = 0
    while r < limit and A[r][r]:
        r += 1
    rank = r
    changed = True
    while changed:
        changed = False
        for i in range(rank - 1):
            a, b = A[i][i], A[i + 1][i + 1]
            if b % a != 0:
                # standard 2x2 fix: add col i+1 to col i, reduce
                col_op(i, i + 1, -1)
                while True:
                    p = A[i][i]
                    q = A[i + 1][i] // p if p else 0
                    row_op(i + 1, i, q)
                    if A[i + 1][i]:
                        swap_rows(i, i + 1)
                    else:
                        break
                for c in range(i + 1, cols):
                    if A[i][c]:
                        col_op(c, i, A[i][c] // A[i][i])
                changed = True
        for i in range(rank):
            if A[i][i] < 0:
                for c in range(cols):
                    A[i][c] = -A[i][c]
                for c in range(rows):
                    U[i][c] = -U[i][c]
    factors = [A[i][i] for i in range(rank)]
    return factors, IntMatrix.from_dense(U), IntMatrix.from_dense(V)


def rank_over_q(M: IntMatrix) -> int:
    """Rank over Q by fraction-free Gaussian elimination (Bareiss)."""
    A = [row[:] for row in M.dense()]
    rows, cols = M.rows, M.cols
    rank = 0
    prev = 1
    r = 0
    for c in range(cols):
        pr = None
        for i in range(r, rows):
            if A[i][c]:
                pr = i
                break
        if pr is None:
            continue
        A[r], A[pr] = A[pr], A[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                A[i][j] = (A[r][c] * A[i][j] - A[i][c] * A[r][j]) // prev
            A[i][c] = 0
        prev = A[r][c]
        r += 1
        rank += 1
        if r == rows:
            break
    return rank


def solve_integer(M: IntMatrix, b: list[int]) -> list[int] | None:
    """One integer solution x of M x = b, or None if unsolvable over Z."""
    factors, U, V = smith_normal_form(M)
    Ub = [sum(U[(r, c)] * b[c] for c in range(M.rows)) for r in range(M.rows)]
    y = [0] * M.cols
    for i in range(M.rows):
        if i < len(factors):
            if Ub[i] % factors[i] != 0:
                return None
            y[i] = Ub[i] // factors[i]
        elif Ub[i] != 0:
            return None
    return [sum(V[(r, c)] * y[c] for c in range(M.cols)) for r in range(M.rows * 0 + M.cols)]


# ---------------------------------------------------------------------------
# Module complexes


@dataclass
class ModuleComplex:
    """Free Z[alpha]-modules with named basis and matrix differentials.

    gens[k] is the list of (label, qdeg) in homological degree k; diff[k]
    holds the entries of d: C^k -> C^{k+1} as {(row, col): AlphaPoly}.
    reliable is the h-degree band in which truncation artifacts are absent.
    """

    gens: dict[int, list[tuple[object, int]]]
    diff: dict[int, dict[tuple[int, int], AlphaPoly]]
    reliable: tuple[float, float] = (float("-inf"), float("inf"))

    def degrees(self) -> list[int]:
        return sorted(self.gens)

    def qdegs(self, k: int) -> list[int]:
        return [q for _, q in self.gens.get(k, [])]

    def shift_q(self, s: int) -> "ModuleComplex":
        return ModuleComplex(
            {k: [(lbl, q + s) for lbl, q in gs] for k, gs in self.gens.items()},
            self.diff,
            self.reliable,
        )

    def check(self) -> None:
        """Assert d is q-homogeneous of degree 0 and d.d = 0 over Z[alpha]."""
        for k, mat in self.diff.items():
            qs_src = self.qdegs(k)
            qs_tgt = self.qdegs(k + 1)
            for (r, c), poly in mat.items():
                for aexp in poly.coeffs:
                    if qs_tgt[r] + 4 * aexp != qs_src[c]:
                        raise IntegrityError(
                            f"differential entry not q-homogeneous at degree {k}"
                        )
        for k in sorted(self.diff):
            if k + 1 not in self.diff:
                continue
            d0, d1 = self.diff[k], self.diff[k + 1]
            by_col: dict[int, list[tuple[int, AlphaPoly]]] = {}
            for (r, c), v in d1.items():
                by_col.setdefault(c, []).append((r, v))
            acc: dict[tuple[int, int], AlphaPoly] = {}
            for (r, c), v in d0.items():
                for r2, w in by_col.get(r, ()):
                    acc[(r2, c)] = acc.get((r2, c), AlphaPoly()) + w * v
            if any(p for p in acc.values()):
                raise IntegrityError(f"d.d != 0 between degrees {k} and {k + 2}")

    def matrix_at_alpha0(self, k: int, q: int) -> tuple[IntMatrix, list[int], list[int]]:
        """Integer matrix of d restricted to q-degree q at alpha=0.

        Returns (matrix, column basis indices, row basis indices)."""
        cols = [i for i, (_, qq) in enumerate(self.gens.get(k, [])) if qq == q]
        rows = [i for i, (_, qq) in enumerate(self.gens.get(k + 1, [])) if qq == q]
        col_pos = {i: p for p, i in enumerate(cols)}
        row_pos = {i: p for p, i in enumerate(rows)}
        entries = {}
        for (r, c), poly in self.diff.get(k, {}).items():
            v = poly.coeffs.get(0, 0)
            if v and c in col_pos and r in row_pos:
                entries[(row_pos[r], col_pos[c])] = v
        return IntMatrix(len(rows), len(cols), entries), cols, rows

    def matrix_at_alpha1(self, k: int) -> IntMatrix:
        """Full integer matrix of d at alpha=1 (q-grading collapsed)."""
        nr = len(self.gens.get(k + 1, []))
        nc = len(self.gens.get(k, []))
        entries = {}
        for (r, c), poly in self.diff.get(k, {}).items():
            v = sum(poly.coeffs.values())
            if v:
                entries[(r, c)] = v
        return IntMatrix(nr, nc, entries)


@dataclass
class HomologyTable:
    """Bigraded free ranks and torsion of a computed homology.

    Keys are (homological degree, q-degree); for the alpha=1 specialization
    the q slot is None.  unreliable marks bidegrees inside the window
    margin whose values may be truncation artifacts.
    """

    specialization: str
    entries: dict[tuple[int, int | None], tuple[int, tuple[int, ...]]]
    unreliable: set = field(default_factory=set)

    def rank(self, k: int, q: int | None = None) -> int:
        return self.entries.get((k, q), (0, ()))[0]

    def torsion(self, k: int, q: int | None = None) -> tuple[int, ...]:
        return self.entries.get((k, q), (0, ()))[1]

    def nonzero(self) -> dict[tuple[int, int | None], tuple[int, tuple[int, ...]]]:
        return {k: v for k, v in self.entries.items() if v[0] or v[1]}

    def restricted(self, lo: float, hi: float) -> "HomologyTable":
        return HomologyTable(
            self.specialization,
            {kq: v for kq, v in self.entries.items() if lo <= kq[0] <= hi},
            {kq for kq in self.unreliable if lo <= kq[0] <= hi},
        )

    def poincare(self) -> LaurentPoly:
        """Graded rank generating function (alpha=0 only), ranks as
        coefficients of (-1)^k q^j."""
        acc: dict[int, int] = {}
        for (k, q), (rank, _) in self.entries.items():
            if q is None or not rank:
                continue
            acc[q] = acc.get(q, 0) + (-1) ** (k % 2) * rank
        return LaurentPoly(acc)


def homology_table(C: ModuleComplex, specialization: str = "alpha0") -> HomologyTable:
    """Bigraded homology with torsion (alpha0/Z) or graded ranks (alpha1/Q)."""
    C.check()
    degrees = C.degrees()
    out: dict[tuple[int, int | None], tuple[int, tuple[int, ...]]] = {}
    unreliable: set = set()
    lo, hi = C.reliable
    if specialization == "alpha0":
        for k in degrees:
            for q in sorted(set(C.qdegs(k))):
                n_gens = sum(1 for qq in C.qdegs(k) if qq == q)
                d_out, _, _ = C.matrix_at_alpha0(k, q)
                d_in, _, _ = C.matrix_at_alpha0(k - 1, q)
                rank_out = rank_over_q(d_out)
                factors, _, _ = smith_normal_form(d_in)
                rank_in = len(factors)
                free = n_gens - rank_out - rank_in
                tors = tuple(f for f in factors if f not in (0, 1))
                if free or tors:
                    out[(k, q)] = (free, tors)
                    if not (lo <= k <= hi):
                        unreliable.add((k, q))
    elif specialization == "alpha1":
        for k in degrees:
            n_gens = len(C.gens.get(k, []))
            rank_out = rank_over_q(C.matrix_at_alpha1(k))
            rank_in = rank_over_q(C.matrix_at_alpha1(k - 1))
            free = n_gens - rank_out - rank_in
            if free:
                out[(k, None)] = (free, ())
                if not (lo <= k <= hi):
                    unreliable.add((k, None))
    else:
        raise ValueError(f"unknown specialization {specialization!r}")
    return HomologyTable(specialization, out, unreliable)


def euler_characteristic(C: ModuleComplex) -> LaurentPoly:
    """Alternating sum of graded ranks of the chain groups."""
    acc: dict[int, int] = {}
    for k, gs in C.gens.items():
        s = (-1) ** (k % 2)
        for _, q in gs:
            acc[q] = acc.get(q, 0) + s
    return LaurentPoly(acc)


def poincare_series(T: HomologyTable) -> LaurentPoly:
    return T.poincare()
