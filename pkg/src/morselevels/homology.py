"""Cellular homology over Q, F_p, Z and Z_k; relative homology; induced maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .chaincore import (
    CellComplex,
    CellId,
    CoefficientSpec,
    Q,
    is_face_closed,
    quotient_chain_complex,
)
from .linalg import (
    Field,
    dense_from_cols,
    integer_kernel,
    invariant_factors,
    matmul,
    rank,
    smith_decomposition,
    smith_rank,
)


@dataclass
class HomologySummary:
    """Betti numbers and torsion per dimension.

    For ``Z`` coefficients ``torsion[l]`` holds the invariant factors of the
    torsion subgroup.  For ``Z_k`` coefficients ``betti[l]`` counts the
    ``Z_k`` summands and ``torsion[l]`` the smaller cyclic summands
    ``Z_g`` (``1 < g < k``).  Field coefficients never carry torsion.
    """

    coefficients: str
    betti: list[int]
    torsion: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        while len(self.torsion) < len(self.betti):
            self.torsion.append([])
        self.torsion = [sorted(t) for t in self.torsion]

    def _trimmed(self):
        pairs = list(zip(self.betti, (tuple(t) for t in self.torsion)))
        while pairs and pairs[-1] == (0, ()):
            pairs.pop()
        return self.coefficients, tuple(pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, HomologySummary) and self._trimmed() == other._trimmed()

    def __hash__(self) -> int:
        return hash(self._trimmed())

    def betti_at(self, l: int) -> int:
        return self.betti[l] if 0 <= l < len(self.betti) else 0

    def torsion_at(self, l: int) -> list[int]:
        return self.torsion[l] if 0 <= l < len(self.torsion) else []

    @property
    def euler(self) -> int:
        return sum((-1) ** l * b for l, b in enumerate(self.betti))

    def to_dict(self) -> dict:
        return {str(l): {"betti": b, "torsion": list(t)} for l, (b, t) in enumerate(zip(self.betti, self.torsion))}

    @classmethod
    def from_dict(cls, coefficients: str, doc: Mapping) -> "HomologySummary":
        dims = sorted(int(k) for k in doc)
        betti = [0] * (dims[-1] + 1 if dims else 0)
        torsion: list[list[int]] = [[] for _ in betti]
        for l in dims:
            betti[l] = int(doc[str(l)]["betti"])
            torsion[l] = [int(t) for t in doc[str(l)].get("torsion", [])]
        return cls(coefficients, betti, torsion)

    def __str__(self) -> str:
        parts = []
        for l, (b, t) in enumerate(zip(self.betti, self.torsion)):
            ring = "Z" if self.coefficients == "Z" else ("Z%s" % self.coefficients[3:] if self.coefficients.startswith("Zk") else self.coefficients)
            terms = ([f"{ring}^{b}" if b > 1 else ring] if b else []) + [f"Z{x}" for x in t]
            parts.append(f"H{l}=" + ("+".join(terms) if terms else "0"))
        return " ".join(parts)


def _field_prime(coeff: CoefficientSpec) -> int | None:
    if coeff.tag == "Q":
        return None
    if coeff.tag == "Fp":
        return coeff.modulus
    raise ValueError(f"{coeff} is not a field")


def homology_field(c: CellComplex, coeff: CoefficientSpec = Q) -> list[int]:
    """Betti numbers ``dim ker ∂_l - rank ∂_{l+1}`` over ``Q`` or ``F_p``."""
    p = _field_prime(coeff)
    ranks = [0] + [rank(c.boundary_matrix_columns(d), p) for d in range(1, c.dim + 1)] + [0]
    return [c.count(d) - ranks[d] - ranks[d + 1] for d in range(c.dim + 1)]


def homology_integral(c: CellComplex) -> HomologySummary:
    """Integral homology from the Smith invariants of every boundary map."""
    factors = [[]] + [invariant_factors(c.boundary_matrix_columns(d)) for d in range(1, c.dim + 1)] + [[]]
    betti = [c.count(d) - len(factors[d]) - len(factors[d + 1]) for d in range(c.dim + 1)]
    torsion = [[f for f in factors[d + 1] if f > 1] for d in range(c.dim + 1)]
    return HomologySummary("Z", betti, torsion)


def homology_mod_k(s: HomologySummary, k: int) -> HomologySummary:
    """``H(X; Z_k)`` from integral homology by the universal coefficient theorem."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if s.coefficients != "Z":
        raise ValueError("homology_mod_k needs an integral summary")
    n = len(s.betti)
    betti, torsion = [], []
    for l in range(n):
        cyclic = [k] * s.betti[l]
        cyclic += [math.gcd(t, k) for t in s.torsion_at(l)]  # tensor term
        cyclic += [math.gcd(t, k) for t in s.torsion_at(l - 1)]  # Tor term
        cyclic = [g for g in cyclic if g > 1]
        betti.append(sum(1 for g in cyclic if g == k))
        torsion.append([g for g in cyclic if g < k])
    return HomologySummary(f"Zk:{k}", betti, torsion)


def betti_mod_p_from_integral(s: HomologySummary, p: int) -> list[int]:
    """Universal-coefficient prediction of ``F_p`` Betti numbers."""
    return [
        s.betti[l]
        + sum(1 for t in s.torsion_at(l) if t % p == 0)
        + sum(1 for t in s.torsion_at(l - 1) if t % p == 0)
        for l in range(len(s.betti))
    ]


def homology(c: CellComplex, coeff: CoefficientSpec = Q) -> HomologySummary:
    """Homology summary in any supported coefficient system."""
    if coeff.is_field:
        return HomologySummary(str(coeff), homology_field(c, coeff))
    integral = homology_integral(c)
    if coeff.tag == "Z":
        return integral
    return homology_mod_k(integral, coeff.modulus)


def relative_homology(c: CellComplex, cells: Iterable[CellId], coeff: CoefficientSpec = Q) -> HomologySummary:
    """Homology of the pair ``(X, A)`` for a face-closed cell set ``A``."""
    cells = set(cells)
    if not is_face_closed(c, cells):
        raise ValueError("subcomplex is not closed under taking faces")
    rel = quotient_chain_complex(c, cells)
    s = homology(rel, coeff)
    while len(s.betti) < c.dim + 1:
        s.betti.append(0)
        s.torsion.append([])
    return s


# -- cycles, bases and induced maps ------------------------------------------------
@dataclass
class CycleChain:
    dim: int
    coefficients: dict[int, int]

    def dense(self, n: int) -> list[int]:
        v = [0] * n
        for i, x in self.coefficients.items():
            v[i] = x
        return v


def _boundary_dense(c: CellComplex, d: int) -> list[list[int]]:
    return dense_from_cols(c.boundary_matrix_columns(d), c.count(d - 1))


def _check_cycle(c: CellComplex, z: CycleChain) -> None:
    for i in z.coefficients:
        if not 0 <= i < c.count(z.dim):
            raise ValueError(f"chain references missing cell {z.dim}:{i}")
    if z.dim > 0 and c.boundary_of_chain(z.dim, z.coefficients):
        raise ValueError(f"chain is not a cycle: boundary {c.boundary_of_chain(z.dim, z.coefficients)}")


def cycle_class_order(c: CellComplex, z: CycleChain) -> float | int:
    """Least ``n >= 1`` with ``n·z`` a boundary, or ``math.inf``."""
    _check_cycle(c, z)
    n = c.count(z.dim)
    w = z.dense(n)
    if c.count(z.dim + 1) == 0:
        return 1 if not any(w) else math.inf
    u, d, _, _, _ = smith_decomposition(_boundary_dense(c, z.dim + 1), n, c.count(z.dim + 1))
    r = smith_rank(d)
    uw = [sum(row[j] * w[j] for j in range(n) if w[j]) for row in u]
    if any(uw[r:]):
        return math.inf
    order = 1
    for i in range(r):
        di = d[i][i]
        need = di // math.gcd(di, uw[i])
        order = order * need // math.gcd(order, need)
    return order


class IntegralBasis:
    """Generators of ``H_l(X; Z)`` chosen from the Smith change of basis.

    ``orders[i]`` is 0 for a free generator and ``d > 1`` for a ``Z_d``
    summand.  Free generators come first.
    """

    def __init__(self, c: CellComplex, l: int):
        self.complex, self.l = c, l
        n = c.count(l)
        self.n = n
        if c.count(l + 1):
            u, d, _, uinv, _ = smith_decomposition(_boundary_dense(c, l + 1), n, c.count(l + 1))
            r = smith_rank(d)
            diag = [d[i][i] for i in range(r)]
        else:
            u, uinv, r, diag = _eye(n), _eye(n), 0, []
        self._u, self._r, self._diag = u, r, diag
        tail = [row[r:] for row in uinv]
        if l > 0 and c.count(l - 1) and n - r:
            k = integer_kernel(matmul(_boundary_dense(c, l), tail), n - r)
        else:
            k = _eye(n - r)
        self._k = k
        free = matmul(tail, k) if tail and k and k[0] else [[] for _ in range(n)]
        nfree = len(k[0]) if k else 0
        self.generators: list[list[int]] = [[free[i][j] for i in range(n)] for j in range(nfree)]
        self.orders: list[int] = [0] * nfree
        for i, di in enumerate(diag):
            if di > 1:
                self.generators.append([uinv[row][i] for row in range(n)])
                self.orders.append(di)

    @property
    def rank(self) -> int:
        return self.orders.count(0)

    def coordinates(self, z: Sequence[int]) -> list[int]:
        if self.l > 0 and self.complex.boundary_of_chain(self.l, {i: x for i, x in enumerate(z) if x}):
            raise ValueError("not a cycle")
        w = [sum(row[j] * z[j] for j in range(self.n) if z[j]) for row in self._u]
        tail = w[self._r:]
        coords: list[int] = []
        nfree = self.rank
        if nfree:
            sol = Field(None).solve([[self._k[i][j] for i in range(len(self._k))] for j in range(nfree)], tail)
            if sol is None or any(x.denominator != 1 for x in sol):
                raise ArithmeticError("cycle not in the kernel lattice")
            coords = [int(x) for x in sol]
        for i, di in enumerate(self._diag):
            if di > 1:
                coords.append(w[i] % di)
        return coords


class FieldBasis:
    """Homology generators over a field: cycles completing a basis of the boundaries."""

    def __init__(self, c: CellComplex, l: int, p: int | None):
        self.field = F = Field(p)
        self.complex, self.l, self.n = c, l, c.count(l)
        n = self.n
        if l > 0 and c.count(l - 1):
            cycles = F.kernel(_boundary_dense(c, l), n)
        else:
            cycles = [[F.conv(int(i == j)) for j in range(n)] for i in range(n)]
        self.boundaries = [[F.conv(x) for x in col] for col in _columns(_boundary_dense(c, l + 1), n)] if c.count(l + 1) else []
        base = F.rref(self.boundaries)[0] if self.boundaries else []
        gens: list[list] = []
        for z in cycles:
            if F.rank_of_vectors(base + gens + [z]) > len(base) + len(gens):
                gens.append(z)
        self.generators = gens

    @property
    def rank(self) -> int:
        return len(self.generators)

    def coordinates(self, z: Sequence) -> list:
        F = self.field
        sol = F.solve(self.generators + self.boundaries, [F.conv(x) for x in z])
        if sol is None:
            raise ValueError("not a cycle")
        return sol[: self.rank]


def _eye(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _columns(m: list[list[int]], nrows: int) -> list[list[int]]:
    ncols = len(m[0]) if m else 0
    return [[m[i][j] for i in range(nrows)] for j in range(ncols)]


ChainMap = Mapping[int, Sequence[Sequence[int]]]


def check_chain_map(chain_map: ChainMap, source: CellComplex, target: CellComplex) -> None:
    """Raise ``ValueError`` naming the first source cell where ``f∂ ≠ ∂f``."""
    for d, f in chain_map.items():
        if len(f) != target.count(d) or any(len(row) != source.count(d) for row in f):
            raise ValueError(f"chain map in degree {d} has the wrong shape")
    for d in sorted(chain_map):
        if d == 0 or (d - 1) not in chain_map:
            continue
        f, g = chain_map[d], chain_map[d - 1]
        for j in range(source.count(d)):
            img = {i: f[i][j] for i in range(target.count(d)) if f[i][j]}
            lhs = target.boundary_of_chain(d, img)
            bd = dict(source.boundary(d, j))
            rhs: dict[int, int] = {}
            for i in range(target.count(d - 1)):
                x = sum(g[i][k] * v for k, v in bd.items())
                if x:
                    rhs[i] = x
            if lhs != rhs:
                raise ValueError(f"not a chain map at source cell {source.label(d, j)}")


def induced_map(
    chain_map: ChainMap,
    source: CellComplex,
    target: CellComplex,
    l: int,
    coeff: CoefficientSpec = Q,
) -> list[list]:
    """Matrix of ``H_l(f)`` in the deterministic homology bases.

    Columns are indexed by source generators, rows by target generators.
    Over ``Z`` the torsion rows are reduced modulo the generator order.
    """
    check_chain_map(chain_map, source, target)
    if l not in chain_map:
        raise ValueError(f"chain map has no degree {l} component")
    f = chain_map[l]
    if coeff.tag == "Z":
        sb, tb = IntegralBasis(source, l), IntegralBasis(target, l)
    elif coeff.is_field:
        p = _field_prime(coeff)
        sb, tb = FieldBasis(source, l, p), FieldBasis(target, l, p)
    else:
        raise ValueError("induced maps support Q, F_p and Z coefficients")
    cols = []
    for g in sb.generators:
        img = [sum(f[i][j] * g[j] for j in range(source.count(l))) for i in range(target.count(l))]
        cols.append(tb.coordinates(img))
    return [[cols[j][i] for j in range(len(cols))] for i in range(len(tb.generators))]


def matrix_rank(m: list[list], coeff: CoefficientSpec = Q) -> int:
    if not m or not m[0]:
        return 0
    return Field(_field_prime(coeff)).rank_of_vectors([list(row) for row in m])


# -- long exact sequence of a pair ---------------------------------------------------
@dataclass
class PairRanks:
    """Dimensions and ranks in ``H(A) -i-> H(X) -j-> H(X,A) -∂-> H(A)`` at degree ``l``."""

    l: int
    h_a: int
    h_x: int
    h_xa: int
    rank_i: int
    rank_j: int
    rank_delta: int


def exact_sequence_ranks(c: CellComplex, cells: Iterable[CellId], coeff: CoefficientSpec = Q) -> list[PairRanks]:
    """Compute each map of the long exact sequence of a pair independently."""
    F = Field(_field_prime(coeff))
    a = set(cells)
    if not is_face_closed(c, a):
        raise ValueError("subcomplex is not closed under taking faces")
    a_idx = [[i for i in range(c.count(d)) if (d, i) in a] for d in range(c.dim + 2)]
    r_idx = [[i for i in range(c.count(d)) if (d, i) not in a] for d in range(c.dim + 2)]

    def bd_vectors(d: int, cols: list[int]) -> list[list[int]]:
        out = []
        for j in cols:
            v = [0] * c.count(d - 1)
            for f, k in c.boundary(d, j):
                v[f] = k
            out.append(v)
        return out

    def restrict(vs, idx):
        return [[v[i] for i in idx] for v in vs]

    def kernel_in(d: int, cols: list[int], rows: list[int]) -> list[list]:
        """Chains supported on ``cols`` whose boundary vanishes on ``rows``; full-length vectors."""
        if not cols:
            return []
        if d == 0 or not rows:
            basis = [[int(i == j) for j in range(len(cols))] for i in range(len(cols))]
        else:
            mat = restrict(bd_vectors(d, cols), rows)  # one vector per column cell
            basis = F.kernel([[mat[j][i] for j in range(len(cols))] for i in range(len(rows))], len(cols))
        out = []
        for b in basis:
            v = [F.conv(0)] * c.count(d)
            for x, j in zip(b, cols):
                v[j] = x
            out.append(v)
        return out

    def boundary_of(d: int, v: list) -> list:
        out = [F.conv(0)] * c.count(d - 1)
        for j, x in enumerate(v):
            if x:
                for f, k in c.boundary(d, j):
                    out[f] = F.norm(out[f] + x * k)
        return out

    result = []
    for l in range(c.dim + 1):
        all_l = list(range(c.count(l)))
        z_x = kernel_in(l, all_l, list(range(c.count(l - 1))))
        b_x = bd_vectors(l + 1, list(range(c.count(l + 1))))
        z_a = kernel_in(l, a_idx[l], a_idx[l - 1] if l else [])
        b_a = restrict(bd_vectors(l + 1, a_idx[l + 1]), a_idx[l])
        z_rel = kernel_in(l, r_idx[l], r_idx[l - 1] if l else [])
        b_rel = restrict(bd_vectors(l + 1, r_idx[l + 1]), r_idx[l])

        rk = F.rank_of_vectors
        rb_x, rb_a, rb_rel = rk(b_x), rk(b_a), rk(b_rel)
        h_x = len(z_x) - rb_x
        h_a = len(z_a) - rb_a
        h_xa = len(z_rel) - rb_rel
        rank_i = rk(b_x + z_a) - rb_x
        proj_zx = restrict(z_x, r_idx[l])
        rank_j = rk(b_rel + proj_zx) - rb_rel
        if l > 0:
            b_a_lower = restrict(bd_vectors(l, a_idx[l]), a_idx[l - 1])
            deltas = restrict([boundary_of(l, v) for v in z_rel], a_idx[l - 1])
            rank_delta = rk(b_a_lower + deltas) - rk(b_a_lower)
        else:
            rank_delta = 0
        result.append(PairRanks(l, h_a, h_x, h_xa, rank_i, rank_j, rank_delta))
    return result


# -- Poincaré polynomials -------------------------------------------------------------
def subadditivity_quotient(p_a: Sequence[int], p_rel: Sequence[int], p_x: Sequence[int]) -> list[int] | None:
    """``Q`` with ``P(A) + P(X,A) - P(X) = (1+t)Q``, or None if no such ``Q`` exists."""
    n = max(len(p_a), len(p_rel), len(p_x))
    get = lambda p, i: p[i] if i < len(p) else 0  # noqa: E731
    r = [get(p_a, i) + get(p_rel, i) - get(p_x, i) for i in range(n)]
    q: list[int] = []
    prev = 0
    for i in range(n):
        qi = r[i] - prev
        q.append(qi)
        prev = qi
    if q and q[-1] != 0:
        return None
    return q[:-1] if q else []


def morse_inequality_holds(p_a: Sequence[int], p_rel: Sequence[int], p_x: Sequence[int]) -> bool:
    q = subadditivity_quotient(p_a, p_rel, p_x)
    return q is not None and all(x >= 0 for x in q)
