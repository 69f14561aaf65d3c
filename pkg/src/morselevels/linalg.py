"""Exact linear algebra over Z, Q and F_p.

Matrices come in two flavours: sparse column lists (``list[dict[row, value]]``)
for the large boundary maps, and dense ``list[list[int]]`` for the small
change-of-basis computations.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

SparseCols = Sequence[dict[int, int]]
Matrix = list[list[int]]


# -- sparse: invariant factors and ranks --------------------------------------
def invariant_factors(cols: SparseCols) -> list[int]:
    """Nonzero Smith invariants ``d_1 | d_2 | ...`` of a sparse integer matrix.

    Elimination by unimodular row/column operations, always pivoting on an
    entry of minimal absolute value.  Units are included, so
    ``len(result)`` is the rank.
    """
    colmap: dict[int, dict[int, int]] = {}
    rowmap: dict[int, dict[int, int]] = {}
    for j, col in enumerate(cols):
        col = {i: v for i, v in col.items() if v}
        if col:
            colmap[j] = col
            for i, v in col.items():
                rowmap.setdefault(i, {})[j] = v

    def set_entry(i: int, j: int, v: int) -> None:
        if v:
            colmap.setdefault(j, {})[i] = v
            rowmap.setdefault(i, {})[j] = v
        else:
            c = colmap.get(j)
            if c is not None:
                c.pop(i, None)
                if not c:
                    del colmap[j]
            r = rowmap.get(i)
            if r is not None:
                r.pop(j, None)
                if not r:
                    del rowmap[i]

    def add_row(dst: int, src: int, q: int) -> None:
        # row_dst -= q * row_src
        for j, v in list(rowmap[src].items()):
            set_entry(dst, j, rowmap.get(dst, {}).get(j, 0) - q * v)

    def add_col(dst: int, src: int, q: int) -> None:
        for i, v in list(colmap[src].items()):
            set_entry(i, dst, colmap.get(dst, {}).get(i, 0) - q * v)

    diagonal: list[int] = []
    while colmap:
        # pivot of minimal absolute value, preferring short columns
        best = None
        for j in sorted(colmap, key=lambda j: len(colmap[j])):
            for i, v in colmap[j].items():
                if best is None or abs(v) < abs(best[2]):
                    best = (i, j, v)
                    if abs(v) == 1:
                        break
            if best is not None and abs(best[2]) == 1:
                break
        pi, pj, _ = best
        while True:
            p = colmap[pj][pi]
            moved = False
            for i in [i for i in colmap[pj] if i != pi]:
                add_row(i, pi, colmap[pj][i] // p)
            for j in [j for j in rowmap[pi] if j != pj]:
                add_col(j, pj, rowmap[pi][j] // p)
            rest = [(i, pj, v) for i, v in colmap[pj].items() if i != pi]
            rest += [(pi, j, v) for j, v in rowmap[pi].items() if j != pj]
            if not rest:
                break
            i, j, v = min(rest, key=lambda t: abs(t[2]))
            if abs(v) < abs(p):
                pi, pj = i, j
                moved = True
            if not moved:  # pragma: no cover - remainders are always smaller
                raise RuntimeError("Smith elimination failed to make progress")
        diagonal.append(abs(colmap[pj][pi]))
        set_entry(pi, pj, 0)
    return normalize_diagonal(diagonal)


def normalize_diagonal(diagonal: Sequence[int]) -> list[int]:
    """Turn any nonzero diagonal into the divisibility chain of invariant factors."""
    units = [d for d in diagonal if abs(d) == 1]
    rest = sorted(abs(d) for d in diagonal if abs(d) != 1)
    if any(d == 0 for d in rest):
        raise ValueError("diagonal entries must be nonzero")
    for a in range(len(rest)):
        for b in range(a + 1, len(rest)):
            x, y = rest[a], rest[b]
            g = gcd(x, y)
            rest[a], rest[b] = g, x // g * y
    return [1] * len(units) + sorted(rest)


def rank_mod_p(cols: SparseCols, p: int) -> int:
    """Rank over ``F_p`` by sparse elimination."""
    pivots: dict[int, dict[int, int]] = {}
    rank = 0
    for col in cols:
        v = {i: x % p for i, x in col.items() if x % p}
        while v:
            lead = max(v)
            piv = pivots.get(lead)
            if piv is None:
                inv = pow(v[lead], -1, p)
                pivots[lead] = {i: x * inv % p for i, x in v.items()}
                rank += 1
                break
            c = v[lead]
            for i, x in piv.items():
                y = (v.get(i, 0) - c * x) % p
                if y:
                    v[i] = y
                else:
                    v.pop(i, None)
    return rank


def rank_rational(cols: SparseCols) -> int:
    """Rank over ``Q`` by fraction-free sparse elimination (rows kept primitive)."""
    pivots: dict[int, dict[int, int]] = {}
    rank = 0
    for col in cols:
        v = {i: x for i, x in col.items() if x}
        while v:
            lead = max(v)
            piv = pivots.get(lead)
            if piv is None:
                g = 0
                for x in v.values():
                    g = gcd(g, x)
                pivots[lead] = {i: x // g for i, x in v.items()}
                rank += 1
                break
            a, b = piv[lead], v[lead]
            g = gcd(a, b)
            a, b = a // g, b // g
            w = {i: a * x for i, x in v.items()}
            for i, x in piv.items():
                y = w.get(i, 0) - b * x
                if y:
                    w[i] = y
                else:
                    w.pop(i, None)
            g = 0
            for x in w.values():
                g = gcd(g, x)
            v = {i: x // g for i, x in w.items()} if g > 1 else w
    return rank


def rank(cols: SparseCols, p: int | None = None) -> int:
    return rank_rational(cols) if p is None else rank_mod_p(cols, p)


# -- dense integer Smith decomposition ---------------------------------------
def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    inner = len(b)
    ncols = len(b[0]) if b else 0
    out = [[0] * ncols for _ in a]
    for i, row in enumerate(a):
        for k in range(inner):
            x = row[k]
            if x:
                bk = b[k]
                o = out[i]
                for j in range(ncols):
                    if bk[j]:
                        o[j] += x * bk[j]
    return out


def dense_from_cols(cols: SparseCols, nrows: int) -> Matrix:
    m = [[0] * len(cols) for _ in range(nrows)]
    for j, col in enumerate(cols):
        for i, v in col.items():
            m[i][j] = v
    return m


def smith_decomposition(a: Matrix, nrows: int | None = None, ncols: int | None = None):
    """Return ``(U, D, V)`` with ``U·A·V = D`` in Smith normal form.

    ``U`` and ``V`` are unimodular; the diagonal of ``D`` is nonnegative with
    each entry dividing the next.  ``U^{-1}`` and ``V^{-1}`` are also
    returned as the fourth and fifth items so callers can change bases
    without inverting.
    """
    m = len(a) if nrows is None else nrows
    n = (len(a[0]) if a else 0) if ncols is None else ncols
    d = [list(row) for row in a]
    u, uinv = identity(m), identity(m)
    v, vinv = identity(n), identity(n)

    def row_add(dst, src, q):  # row_dst -= q row_src
        if not q:
            return
        rd, rs = d[dst], d[src]
        for j in range(n):
            if rs[j]:
                rd[j] -= q * rs[j]
        ud, us = u[dst], u[src]
        for j in range(m):
            if us[j]:
                ud[j] -= q * us[j]
        for row in uinv:  # U^{-1}: col_src += q col_dst
            if row[dst]:
                row[src] += q * row[dst]

    def col_add(dst, src, q):  # col_dst -= q col_src
        if not q:
            return
        for row in d:
            if row[src]:
                row[dst] -= q * row[src]
        for row in v:
            if row[src]:
                row[dst] -= q * row[src]
        vs, vd = vinv[src], vinv[dst]  # V^{-1}: row_src += q row_dst
        for j in range(n):
            if vd[j]:
                vs[j] += q * vd[j]

    def row_swap(i, j):
        if i != j:
            d[i], d[j] = d[j], d[i]
            u[i], u[j] = u[j], u[i]
            for row in uinv:
                row[i], row[j] = row[j], row[i]

    def col_swap(i, j):
        if i != j:
            for row in d:
                row[i], row[j] = row[j], row[i]
            for row in v:
                row[i], row[j] = row[j], row[i]
            vinv[i], vinv[j] = vinv[j], vinv[i]

    def row_neg(i):
        d[i] = [-x for x in d[i]]
        u[i] = [-x for x in u[i]]
        for row in uinv:
            row[i] = -row[i]

    t = 0
    while t < min(m, n):
        entries = [(abs(d[i][j]), i, j) for i in range(t, m) for j in range(t, n) if d[i][j]]
        if not entries:
            break
        _, pi, pj = min(entries)
        row_swap(t, pi)
        col_swap(t, pj)
        while True:
            p = d[t][t]
            for i in range(t + 1, m):
                if d[i][t]:
                    row_add(i, t, d[i][t] // p)
            for j in range(t + 1, n):
                if d[t][j]:
                    col_add(j, t, d[t][j] // p)
            rest = [(abs(d[i][t]), i, t) for i in range(t + 1, m) if d[i][t]]
            rest += [(abs(d[t][j]), t, j) for j in range(t + 1, n) if d[t][j]]
            if rest:
                _, i, j = min(rest)
                row_swap(t, i)
                col_swap(t, j)
                continue
            # enforce divisibility of the remaining block
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if d[i][j] % p), None)
            if bad is None:
                break
            row_add(t, bad[0], -1)
        if d[t][t] < 0:
            row_neg(t)
        t += 1
    return u, d, v, uinv, vinv


def smith_rank(d: Matrix) -> int:
    r = 0
    while r < min(len(d), len(d[0]) if d else 0) and d[r][r]:
        r += 1
    return r


def integer_kernel(a: Matrix, ncols: int) -> Matrix:
    """Basis (as columns of the returned ``ncols × k`` matrix) of ``ker A`` over Z."""
    if not a:
        return identity(ncols)
    _, d, v, _, _ = smith_decomposition(a, len(a), ncols)
    r = smith_rank(d)
    return [row[r:] for row in v]


# -- dense linear algebra over a field ------------------------------------------
class Field:
    """Arithmetic in ``Q`` (``p is None``) or ``F_p``."""

    def __init__(self, p: int | None = None):
        self.p = p

    def conv(self, x) -> int | Fraction:
        return Fraction(x) if self.p is None else int(x) % self.p

    def inv(self, x):
        return 1 / x if self.p is None else pow(x, -1, self.p)

    def norm(self, x):
        return x if self.p is None else x % self.p

    def rref(self, rows: list[list]) -> tuple[list[list], list[int]]:
        """Reduced row echelon form and pivot columns."""
        a = [[self.conv(x) for x in row] for row in rows]
        if not a:
            return a, []
        n = len(a[0])
        pivots = []
        r = 0
        for c in range(n):
            piv = next((i for i in range(r, len(a)) if a[i][c]), None)
            if piv is None:
                continue
            a[r], a[piv] = a[piv], a[r]
            inv = self.inv(a[r][c])
            a[r] = [self.norm(x * inv) for x in a[r]]
            for i in range(len(a)):
                if i != r and a[i][c]:
                    f = a[i][c]
                    a[i] = [self.norm(x - f * y) for x, y in zip(a[i], a[r])]
            pivots.append(c)
            r += 1
            if r == len(a):
                break
        return a[:r], pivots

    def rank_of_vectors(self, vectors: list[list]) -> int:
        return len(self.rref(vectors)[1]) if vectors else 0

    def kernel(self, rows: list[list], ncols: int) -> list[list]:
        """Basis vectors of the null space of the matrix with the given rows."""
        red, pivots = self.rref(rows) if rows else ([], [])
        free = [c for c in range(ncols) if c not in pivots]
        basis = []
        for fc in free:
            vec = [self.conv(0)] * ncols
            vec[fc] = self.conv(1)
            for row, pc in zip(red, pivots):
                vec[pc] = self.norm(-row[fc])
            basis.append(vec)
        return basis

    def solve(self, vectors: list[list], target: list) -> list | None:
        """Coefficients ``x`` with ``Σ x_i vectors[i] = target``, or None."""
        n = len(vectors)
        dim = len(target)
        rows = [[vectors[i][r] for i in range(n)] + [target[r]] for r in range(dim)]
        red, pivots = self.rref(rows)
        if n in pivots:
            return None
        x = [self.conv(0)] * n
        for row, pc in zip(red, pivots):
            x[pc] = row[n]
        return x
