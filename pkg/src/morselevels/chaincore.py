"""Finite cell complexes with integer incidence data.

A :class:`CellComplex` stores, for every dimension ``d``, a dense list of
``d``-cells and, for each cell, its boundary as a tuple of
``(face_index, coefficient)`` pairs where the faces are ``(d-1)``-cells.
Cells are addressed by ``(dim, index)``.  Simplicial complexes additionally
keep the sorted vertex tuple of every simplex.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

CellId = tuple[int, int]
Chain = dict[int, int]


@dataclass(frozen=True)
class Cell:
    dim: int
    index: int
    label: str | None = None

    @property
    def id(self) -> CellId:
        return (self.dim, self.index)


@dataclass(frozen=True)
class CoefficientSpec:
    """Coefficient system: ``Q``, ``Fp:<p>``, ``Z`` or ``Zk:<k>``."""

    tag: str
    modulus: int | None = None

    def __post_init__(self):
        if self.tag not in ("Q", "Fp", "Z", "Zk"):
            raise ValueError(f"unknown coefficient tag {self.tag!r}")
        if self.tag == "Fp":
            if self.modulus is None or not _is_prime(self.modulus):
                raise ValueError(f"Fp needs a prime modulus, got {self.modulus}")
        elif self.tag == "Zk":
            if self.modulus is None or self.modulus < 2:
                raise ValueError(f"Zk needs k >= 2, got {self.modulus}")
        elif self.modulus is not None:
            raise ValueError(f"{self.tag} takes no modulus")

    @classmethod
    def parse(cls, text: str) -> "CoefficientSpec":
        text = text.strip()
        if text in ("Q", "R"):
            return cls("Q")
        if text == "Z":
            return cls("Z")
        head, _, tail = text.partition(":")
        if head in ("Fp", "Zk") and tail:
            return cls(head, int(tail))
        raise ValueError(f"cannot parse coefficient spec {text!r}")

    @property
    def is_field(self) -> bool:
        return self.tag in ("Q", "Fp")

    def __str__(self) -> str:
        return self.tag if self.modulus is None else f"{self.tag}:{self.modulus}"


Q = CoefficientSpec("Q")
Z = CoefficientSpec("Z")


def Fp(p: int) -> CoefficientSpec:
    return CoefficientSpec("Fp", p)


def Zk(k: int) -> CoefficientSpec:
    return CoefficientSpec("Zk", k)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class CellComplex:
    """Immutable graded complex with integer boundary incidences.

    ``boundaries[d][i]`` is the boundary of cell ``(d, i)`` as a tuple of
    ``(face_index, coeff)`` with faces in dimension ``d - 1``; zero
    coefficients are dropped and repeated faces merged on construction.
    No validation happens here, see :func:`validate_complex`.
    """

    __slots__ = ("_bd", "_labels", "_simplices")

    def __init__(
        self,
        boundaries: Sequence[Sequence[Iterable[tuple[int, int]]]],
        labels: Sequence[Sequence[str | None]] | None = None,
        simplices: Sequence[Sequence[tuple[int, ...]]] | None = None,
    ):
        bd = []
        for cells in boundaries:
            row = []
            for chain in cells:
                merged: dict[int, int] = {}
                for face, coeff in chain:
                    merged[face] = merged.get(face, 0) + coeff
                row.append(tuple(sorted((f, c) for f, c in merged.items() if c)))
            bd.append(tuple(row))
        while bd and not bd[-1]:
            bd.pop()
        self._bd = tuple(bd)
        if labels is None:
            self._labels = None
        else:
            self._labels = tuple(tuple(labels[d]) for d in range(len(self._bd)))
            for d, row in enumerate(self._labels):
                if len(row) != len(self._bd[d]):
                    raise ValueError(f"label count mismatch in dimension {d}")
        self._simplices = None if simplices is None else tuple(
            tuple(tuple(s) for s in simplices[d]) for d in range(len(self._bd))
        )

    # -- basic access -----------------------------------------------------
    @property
    def dim(self) -> int:
        """Top dimension; -1 for the empty complex."""
        return len(self._bd) - 1

    def count(self, d: int) -> int:
        return len(self._bd[d]) if 0 <= d < len(self._bd) else 0

    def counts(self) -> list[int]:
        return [len(row) for row in self._bd]

    @property
    def size(self) -> int:
        return sum(self.counts())

    def boundary(self, d: int, i: int) -> tuple[tuple[int, int], ...]:
        return self._bd[d][i]

    def boundaries(self, d: int) -> tuple[tuple[tuple[int, int], ...], ...]:
        return self._bd[d] if 0 <= d < len(self._bd) else ()

    def label(self, d: int, i: int) -> str:
        if self._labels is not None and self._labels[d][i] is not None:
            return self._labels[d][i]
        if self._simplices is not None:
            return "".join(f"[{','.join(map(str, self._simplices[d][i]))}]")
        return f"{d}:{i}"

    def labels(self, d: int) -> list[str]:
        return [self.label(d, i) for i in range(self.count(d))]

    def cells(self, d: int | None = None) -> Iterator[Cell]:
        dims = range(len(self._bd)) if d is None else [d]
        for dd in dims:
            for i in range(self.count(dd)):
                yield Cell(dd, i, self.label(dd, i))

    @property
    def is_simplicial(self) -> bool:
        return self._simplices is not None

    def simplices(self, d: int) -> tuple[tuple[int, ...], ...]:
        if self._simplices is None:
            raise ValueError("complex carries no simplicial structure")
        return self._simplices[d] if 0 <= d < len(self._simplices) else ()

    def boundary_matrix_columns(self, d: int) -> list[Chain]:
        """Sparse columns of the boundary map from ``d``-chains to ``(d-1)``-chains."""
        return [dict(chain) for chain in self.boundaries(d)]

    def boundary_of_chain(self, d: int, chain: dict[int, int]) -> Chain:
        out: Chain = {}
        for i, c in chain.items():
            if not c:
                continue
            for f, k in self._bd[d][i]:
                out[f] = out.get(f, 0) + c * k
        return {f: v for f, v in out.items() if v}

    def __repr__(self) -> str:
        return f"CellComplex(counts={self.counts()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CellComplex) and self._bd == other._bd

    def __hash__(self) -> int:
        return hash(self._bd)


# -- validation ------------------------------------------------------------
@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.valid


def validate_complex(c: CellComplex, *, simplicial: bool | None = None) -> ValidationReport:
    """Check dangling faces, ``∂∂ = 0``, missing 0-skeleton and simplicial shape."""
    report = ValidationReport()
    counts = c.counts()
    if counts and not counts[0]:
        report.problems.append(f"dimension gap: cells up to dim {len(counts) - 1} but no 0-cells")
    for d in range(len(counts)):
        for i, chain in enumerate(c.boundaries(d)):
            if d == 0 and chain:
                report.problems.append(f"0-cell {c.label(0, i)} has a nonempty boundary")
            for f, _ in chain:
                if not 0 <= f < c.count(d - 1):
                    report.problems.append(f"dangling face: cell {d}:{i} references missing face {d - 1}:{f}")
    if report.problems:
        return report
    for d in range(2, len(counts)):
        for i in range(counts[d]):
            bb = c.boundary_of_chain(d - 1, dict(c.boundary(d, i)))
            if bb:
                report.problems.append(f"boundary of boundary nonzero on cell {c.label(d, i)}: {bb}")
    if simplicial is None:
        simplicial = c.is_simplicial
    if simplicial:
        for d in range(1, len(counts)):
            for i, chain in enumerate(c.boundaries(d)):
                if len(chain) != d + 1 or any(abs(k) != 1 for _, k in chain):
                    report.problems.append(f"simplex {c.label(d, i)} does not have {d + 1} unit facets")
    return report


def euler_characteristic(c: CellComplex) -> int:
    return sum((-1) ** d * n for d, n in enumerate(c.counts()))


# -- builders -----------------------------------------------------------------
def simplicial_complex(facets: Iterable[Sequence[int]]) -> CellComplex:
    """Closure of the given simplices, oriented by increasing vertex order."""
    faces: set[tuple[int, ...]] = set()
    for s in facets:
        s = tuple(sorted(set(s)))
        for r in range(1, len(s) + 1):
            faces.update(itertools.combinations(s, r))
    return _from_simplex_set(faces)


def _from_simplex_set(faces: set[tuple[int, ...]]) -> CellComplex:
    if not faces:
        return CellComplex([])
    top = max(len(s) for s in faces) - 1
    by_dim = [sorted(s for s in faces if len(s) == d + 1) for d in range(top + 1)]
    index = [{s: i for i, s in enumerate(row)} for row in by_dim]
    boundaries = [[() for _ in by_dim[0]]]
    for d in range(1, top + 1):
        row = []
        for s in by_dim[d]:
            row.append([(index[d - 1][s[:j] + s[j + 1:]], (-1) ** j) for j in range(d + 1)])
        boundaries.append(row)
    return CellComplex(boundaries, simplices=by_dim)


def point() -> CellComplex:
    return CellComplex([[()]], labels=[["pt"]])


def empty_complex() -> CellComplex:
    return CellComplex([])


def cw_sphere(n: int) -> CellComplex:
    """Minimal CW ``S^n``: a vertex and an ``n``-cell (two points for ``n = 0``)."""
    if n < 0:
        raise ValueError("sphere dimension must be >= 0")
    if n == 0:
        return CellComplex([[(), ()]], labels=[["s-", "s+"]])
    bd: list[list] = [[()]] + [[] for _ in range(n - 1)] + [[()]]
    labels: list[list] = [["pt"]] + [[] for _ in range(n - 1)] + [[f"e{n}"]]
    return CellComplex(bd, labels=labels)


def cw_disk(n: int) -> CellComplex:
    """Minimal CW ``D^n`` whose boundary is a copy of :func:`cw_sphere` ``(n-1)``."""
    if n < 0:
        raise ValueError("disk dimension must be >= 0")
    if n == 0:
        return point()
    if n == 1:
        return CellComplex([[(), ()], [[(0, -1), (1, 1)]]], labels=[["s-", "s+"], ["e1"]])
    bd: list[list] = [[()]] + [[] for _ in range(n - 1)]
    labels: list[list] = [["pt"]] + [[] for _ in range(n - 1)]
    bd[n - 1] = [()]
    labels[n - 1] = [f"e{n - 1}"]
    bd.append([[(0, 1)]])
    labels.append([f"e{n}"])
    return CellComplex(bd, labels=labels)


# -- constructions ------------------------------------------------------------
def product_complex(a: CellComplex, b: CellComplex) -> CellComplex:
    """Cartesian product with ``∂(σ×τ) = ∂σ×τ + (-1)^{dim σ} σ×∂τ``."""
    if a.dim < 0 or b.dim < 0:
        return empty_complex()
    top = a.dim + b.dim
    index: dict[tuple[int, int, int, int], int] = {}
    cells: list[list[tuple[int, int, int, int]]] = [[] for _ in range(top + 1)]
    for p in range(a.dim + 1):
        for q in range(b.dim + 1):
            for i in range(a.count(p)):
                for j in range(b.count(q)):
                    key = (p, i, q, j)
                    index[key] = len(cells[p + q])
                    cells[p + q].append(key)
    boundaries = []
    labels = []
    for d in range(top + 1):
        row, lab = [], []
        for p, i, q, j in cells[d]:
            chain = []
            for f, k in a.boundary(p, i):
                chain.append((index[(p - 1, f, q, j)], k))
            sign = -1 if p % 2 else 1
            for f, k in b.boundary(q, j):
                chain.append((index[(p, i, q - 1, f)], sign * k))
            row.append(chain)
            lab.append(f"{a.label(p, i)}x{b.label(q, j)}")
        boundaries.append(row)
        labels.append(lab)
    return CellComplex(boundaries, labels=labels)


def disjoint_union(a: CellComplex, b: CellComplex) -> CellComplex:
    top = max(a.dim, b.dim)
    boundaries, labels = [], []
    for d in range(top + 1):
        row = [list(a.boundary(d, i)) for i in range(a.count(d))]
        row += [[(f + a.count(d - 1), k) for f, k in b.boundary(d, i)] for i in range(b.count(d))]
        boundaries.append(row)
        labels.append([f"a.{a.label(d, i)}" for i in range(a.count(d))] + [f"b.{b.label(d, i)}" for i in range(b.count(d))])
    return CellComplex(boundaries, labels=labels)


def _normalize_cells(c: CellComplex, cells: Iterable[CellId]) -> set[CellId]:
    out = set()
    for d, i in cells:
        if not 0 <= i < c.count(d):
            raise ValueError(f"cell {d}:{i} not in complex")
        out.add((d, i))
    return out


def is_face_closed(c: CellComplex, cells: Iterable[CellId]) -> bool:
    s = set(cells)
    return all((d - 1, f) in s for d, i in s for f, _ in c.boundary(d, i))


def closure(c: CellComplex, cells: Iterable[CellId]) -> set[CellId]:
    """Smallest face-closed set containing ``cells``."""
    out: set[CellId] = set()
    stack = list(cells)
    while stack:
        d, i = stack.pop()
        if (d, i) in out:
            continue
        out.add((d, i))
        stack.extend((d - 1, f) for f, _ in c.boundary(d, i))
    return out


def subcomplex(c: CellComplex, cells: Iterable[CellId]) -> tuple[CellComplex, list[list[int]]]:
    """Restrict to a face-closed cell set.

    Returns the subcomplex and, per dimension, the list mapping new indices
    to old indices (the inclusion chain map).
    """
    s = _normalize_cells(c, cells)
    if not is_face_closed(c, s):
        raise ValueError("cell set is not closed under taking faces")
    keep = [sorted(i for dd, i in s if dd == d) for d in range(c.dim + 1)]
    new_index = [{old: new for new, old in enumerate(row)} for row in keep]
    boundaries, labels, simplices = [], [], []
    for d, row in enumerate(keep):
        boundaries.append([[(new_index[d - 1][f], k) for f, k in c.boundary(d, i)] for i in row])
        labels.append([c.label(d, i) for i in row])
        if c.is_simplicial:
            simplices.append([c.simplices(d)[i] for i in row])
    sub = CellComplex(boundaries, labels=labels, simplices=simplices if c.is_simplicial else None)
    return sub, keep[: sub.dim + 1]


def quotient_chain_complex(c: CellComplex, cells: Iterable[CellId]) -> CellComplex:
    """Chain complex ``C(X)/C(A)``: cells of ``A`` deleted along with their incidences.

    This is the relative chain complex of the pair; it need not satisfy the
    dimension-gap check of a genuine CW complex.
    """
    s = _normalize_cells(c, cells)
    if not is_face_closed(c, s):
        raise ValueError("cell set is not closed under taking faces")
    return _delete_cells(c, s)


def collapse_subcomplex(c: CellComplex, cells: Iterable[CellId]) -> CellComplex:
    """Quotient ``X/A``: the cells of ``A`` become a single base vertex.

    Incidences on deleted cells of dimension >= 1 are dropped; vertices of
    ``A`` are replaced by the base point.  The reduced homology of the result
    equals ``H(X, A)``.  An empty ``A`` adds a disjoint base point.
    """
    s = _normalize_cells(c, cells)
    if not is_face_closed(c, s):
        raise ValueError("cell set is not closed under taking faces")
    keep = [[i for i in range(c.count(d)) if (d, i) not in s] for d in range(max(c.dim, 0) + 1)]
    new_index = [{old: new for new, old in enumerate(row)} for row in keep]
    base = len(keep[0])
    boundaries: list[list] = [[() for _ in range(base + 1)]]
    labels: list[list] = [[c.label(0, i) for i in keep[0]] + ["*"]]
    for d in range(1, len(keep)):
        row = []
        for i in keep[d]:
            chain = []
            for f, k in c.boundary(d, i):
                if (d - 1, f) not in s:
                    chain.append((new_index[d - 1][f], k))
                elif d == 1:
                    chain.append((base, k))
            row.append(chain)
        boundaries.append(row)
        labels.append([c.label(d, i) for i in keep[d]])
    return CellComplex(boundaries, labels=labels)


def fiberwise_collapse(c: CellComplex, cells: Iterable[CellId]) -> CellComplex:
    """Delete a chain-closed set of cells whose images degenerate under a cellular quotient.

    Used for collapsing the circle fibers of a product ``B × S¹`` over a
    subcomplex of ``B``: the cells ``σ × e¹`` are removed while ``σ × pt``
    survive.  The deleted span must be closed under the boundary map.
    """
    s = _normalize_cells(c, cells)
    for d, i in s:
        for f, _ in c.boundary(d, i):
            if (d - 1, f) not in s:
                raise ValueError(f"collapsed cells not boundary-closed at {c.label(d, i)}")
    return _delete_cells(c, s)


def _delete_cells(c: CellComplex, s: set[CellId]) -> CellComplex:
    keep = [[i for i in range(c.count(d)) if (d, i) not in s] for d in range(c.dim + 1)]
    new_index = [{old: new for new, old in enumerate(row)} for row in keep]
    boundaries, labels = [], []
    for d, row in enumerate(keep):
        boundaries.append([
            [(new_index[d - 1][f], k) for f, k in c.boundary(d, i) if (d - 1, f) not in s] for i in row
        ])
        labels.append([c.label(d, i) for i in row])
    return CellComplex(boundaries, labels=labels)


# -- serialization ------------------------------------------------------------
def complex_to_dict(c: CellComplex) -> dict:
    doc = {
        "schema": 1,
        "dim": c.dim,
        "cells": {str(d): c.labels(d) for d in range(c.dim + 1)},
        "boundary": {
            f"{d}:{i}": [[f"{d - 1}:{f}", k] for f, k in c.boundary(d, i)]
            for d in range(1, c.dim + 1)
            for i in range(c.count(d))
            if c.boundary(d, i)
        },
    }
    if c.is_simplicial:
        doc["simplices"] = {str(d): [list(s) for s in c.simplices(d)] for d in range(c.dim + 1)}
    return doc


def complex_from_dict(doc: dict) -> CellComplex:
    """Inverse of :func:`complex_to_dict`; raises ``ValueError`` on malformed ids."""
    top = int(doc["dim"])
    cells = doc["cells"]
    counts = [len(cells.get(str(d), [])) for d in range(top + 1)]
    boundaries: list[list[list]] = [[[] for _ in range(n)] for n in counts]
    for key, chain in doc.get("boundary", {}).items():
        d, i = _parse_id(key)
        if not (0 <= d <= top and 0 <= i < counts[d]):
            raise ValueError(f"boundary given for unknown cell {key}")
        for face, k in chain:
            fd, fi = _parse_id(face)
            if fd != d - 1:
                raise ValueError(f"face {face} of {key} has the wrong dimension")
            boundaries[d][i].append((fi, int(k)))
    labels = [list(cells.get(str(d), [])) for d in range(top + 1)]
    simplices = None
    if "simplices" in doc:
        simplices = [[tuple(s) for s in doc["simplices"][str(d)]] for d in range(top + 1)]
    return CellComplex(boundaries, labels=labels, simplices=simplices)


def _parse_id(text: str) -> CellId:
    d, _, i = str(text).partition(":")
    try:
        return int(d), int(i)
    except ValueError:
        raise ValueError(f"malformed cell id {text!r}") from None


def dumps_complex(c: CellComplex) -> str:
    return json.dumps(complex_to_dict(c), indent=1, sort_keys=True)


def loads_complex(text: str) -> CellComplex:
    return complex_from_dict(json.loads(text))
