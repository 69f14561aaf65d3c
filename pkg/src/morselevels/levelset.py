"""Level sets, regions and sublevel sets of piecewise linear and gridded fields.

A simplexwise linear field is cut along a sorted list of levels.  Every
simplex splits into convex *band* pieces (between consecutive cuts) and
*cut* pieces (the slice of the simplex by one level).  Level sets, regions
and sublevel sets are all face-closed unions of these pieces, so they come
out as polyhedral CW complexes without re-triangulation.

Ties between a vertex value and a level are broken symbolically: vertex
``v`` behaves as ``f(v) + (v + 1)·ε``, so a vertex sitting exactly on a
level counts as lying above it.
"""

from __future__ import annotations

import bisect
import builtins
import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from .chaincore import CellComplex, CoefficientSpec, Q, simplicial_complex
from .homology import HomologySummary, homology
from .morserules import CriticalPointRecord, _num

slice_ = builtins.slice  # ``slice`` below is the level-set operation


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x}")
        return Fraction(x)
    return Fraction(x)


# -- PL fields ------------------------------------------------------------------
class PLScalarField:
    """Exact rational values on the vertices of a simplicial complex."""

    def __init__(self, base: CellComplex, values: Mapping[int, object], *, perturb: bool = True):
        if not base.is_simplicial:
            raise ValueError("a PL field needs a simplicial base complex")
        self.base = base
        verts = [s[0] for s in base.simplices(0)]
        missing = [v for v in verts if v not in values]
        if missing:
            raise ValueError(f"vertices without a value: {missing[:5]}")
        self.values = {v: to_fraction(values[v]) for v in verts}
        self.perturb = perturb

    @property
    def dim(self) -> int:
        return self.base.dim

    def key(self, v: int) -> tuple[Fraction, int]:
        """Total order used for symbolic perturbation."""
        return self.values[v], v

    def negated(self) -> "PLScalarField":
        # ties are still broken towards "above", so -f only mirrors f away from vertex values
        return PLScalarField(self.base, {v: -x for v, x in self.values.items()}, perturb=self.perturb)

    def check_level(self, a) -> Fraction:
        a = to_fraction(a)
        if not self.perturb and any(x == a for x in self.values.values()):
            raise ValueError(f"level {a} equals a vertex value and perturbation is disabled")
        return a

    def band(self, v: int, cuts: Sequence[Fraction]) -> int:
        """Number of cuts at or below the perturbed value of ``v``."""
        return bisect.bisect_right(cuts, self.values[v])

    def above(self, v: int, a: Fraction) -> bool:
        x = self.values[v]
        return x > a or (x == a and self.perturb)

    @property
    def vertex_values(self) -> list[Fraction]:
        return sorted(set(self.values.values()))


@dataclass(frozen=True)
class PieceKey:
    simplex: tuple[int, ...]
    kind: str  # "b" band, "c" cut
    j: int

    def label(self) -> str:
        s = ",".join(map(str, self.simplex))
        return f"[{s}]{'^' if self.kind == 'b' else '@'}{self.j}"


def level_subdivision(
    field_: PLScalarField,
    cuts: Sequence,
    *,
    bands: Iterable[int] | None = None,
    cut_ids: Iterable[int] | None = None,
) -> tuple[CellComplex, list[list[PieceKey]]]:
    """Polyhedral subdivision of the base by the given levels.

    Only pieces in the selected bands and cuts are built (all by default);
    the selection must be face-closed, which holds when every selected band
    ``j`` comes with cuts ``j - 1`` and ``j``.
    """
    cuts = [field_.check_level(c) for c in cuts]
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cut levels must be strictly increasing")
    nb = len(cuts) + 1
    bands = set(range(nb)) if bands is None else set(bands)
    cut_ids = set(range(len(cuts))) if cut_ids is None else set(cut_ids)
    base = field_.base
    vband = {s[0]: field_.band(s[0], cuts) for s in base.simplices(0)}

    def span(t):
        bs = [vband[v] for v in t]
        return min(bs), max(bs)

    def g(t, i):
        # orientation of the cut piece of an edge: +1 when its first vertex is below
        if len(t) == 2:
            return 1 if vband[t[0]] <= i else -1
        return 1

    keys: list[list[PieceKey]] = [[] for _ in range(base.dim + 1)]
    for d in range(base.dim + 1):
        for t in base.simplices(d):
            lo, hi = span(t)
            for j in range(lo, hi + 1):
                if j in bands:
                    keys[d].append(PieceKey(t, "b", j))
            if d >= 1:
                for i in range(lo, hi):
                    if i in cut_ids:
                        keys[d - 1].append(PieceKey(t, "c", i))
    for row in keys:
        row.sort(key=lambda k: (k.kind, k.j, k.simplex))
    while keys and not keys[-1]:
        keys.pop()
    index = [{k: n for n, k in enumerate(row)} for row in keys]

    def facets(t):
        return [(t[:p] + t[p + 1:], (-1) ** p) for p in range(len(t))] if len(t) > 1 else []

    boundaries = []
    for d, row in enumerate(keys):
        out = []
        for k in row:
            t, chain = k.simplex, []
            if k.kind == "b":
                for r, s in facets(t):
                    rk = PieceKey(r, "b", k.j)
                    if rk in index[d - 1]:
                        chain.append((index[d - 1][rk], s))
                lo, hi = span(t)
                if d >= 1:
                    if k.j < hi:
                        chain.append((_lookup(index, d - 1, PieceKey(t, "c", k.j)), g(t, k.j)))
                    if k.j > lo:
                        chain.append((_lookup(index, d - 1, PieceKey(t, "c", k.j - 1)), -g(t, k.j - 1)))
            else:
                for r, s in facets(t):
                    if len(r) < 2:
                        continue
                    rlo, rhi = span(r)
                    if rlo <= k.j < rhi:
                        chain.append((_lookup(index, d - 1, PieceKey(r, "c", k.j)), -s * g(r, k.j)))
            out.append(chain)
        boundaries.append(out)
    labels = [[k.label() for k in row] for row in keys]
    return CellComplex(boundaries, labels=labels), keys


def _lookup(index, d, key):
    try:
        return index[d][key]
    except (KeyError, IndexError):
        raise ValueError(f"piece selection is not face-closed: missing {key.label()}") from None


def slice(field_: PLScalarField, a) -> CellComplex:
    """The level set ``f^{-1}(a)`` as a polyhedral complex."""
    c, _ = level_subdivision(field_, [a], bands=(), cut_ids=(0,))
    return c


def region_complex(field_: PLScalarField, lo, hi) -> CellComplex:
    """The region ``lo <= f <= hi``."""
    lo, hi = to_fraction(lo), to_fraction(hi)
    if not lo < hi:
        raise ValueError("region needs lo < hi")
    c, _ = level_subdivision(field_, [lo, hi], bands=(1,), cut_ids=(0, 1))
    return c


def sublevel_complex(field_: PLScalarField, a) -> CellComplex:
    """The sublevel set ``f <= a``."""
    c, _ = level_subdivision(field_, [a], bands=(0,), cut_ids=(0,))
    return c


def sublevel_pair(field_: PLScalarField, a, b) -> tuple[CellComplex, set[tuple[int, int]]]:
    """``M^b`` together with the cells of ``M^a`` inside it, for ``a < b``."""
    c, keys = level_subdivision(field_, [a, b], bands=(0, 1), cut_ids=(0, 1))
    inner = {(d, n) for d, row in enumerate(keys) for n, k in enumerate(row) if (k.kind == "b" and k.j == 0) or (k.kind == "c" and k.j == 0)}
    return c, inner


# -- PL critical points --------------------------------------------------------------
@dataclass(frozen=True)
class PLCriticalVertex:
    vertex: int
    value: Fraction
    kind: str  # minimum | saddle | maximum | regular | degenerate
    index: int | None
    reduced_betti: tuple[int, ...]

    def record(self) -> CriticalPointRecord:
        return CriticalPointRecord(
            self.value, self.index, non_degenerate=self.kind != "degenerate", label=f"v{self.vertex}"
        )


def lower_link(field_: PLScalarField, v: int) -> CellComplex:
    facets = []
    kv = field_.key(v)
    for t in field_.base.simplices(field_.base.dim):
        if v in t:
            rest = tuple(u for u in t if u != v)
            low = tuple(u for u in rest if field_.key(u) < kv)
            if low:
                facets.append(low)
    return simplicial_complex(facets)


def _reduced_betti(c: CellComplex, coeff: CoefficientSpec) -> tuple[int, ...]:
    if c.dim < 0:
        return (1,)  # reduced H_{-1} of the empty set, stored at position 0
    b = list(homology(c, coeff).betti)
    b[0] -= 1
    return (0,) + tuple(b)


def classify_vertex(field_: PLScalarField, v: int, coeffs: Sequence[CoefficientSpec] = (Q, CoefficientSpec("Fp", 2))) -> PLCriticalVertex:
    """Classify ``v`` by the reduced homology of its lower link.

    Position ``i`` of ``reduced_betti`` holds reduced ``b_{i-1}``.  A lower
    link with the homology of ``S^{k-1}`` (in every given coefficient system)
    makes ``v`` a nondegenerate critical point of index ``k``.
    """
    link = lower_link(field_, v)
    m = field_.dim
    rb = [_reduced_betti(link, c) for c in coeffs]
    first = rb[0]
    value = field_.values[v]
    if all(not any(r) for r in rb):
        return PLCriticalVertex(v, value, "regular", None, first)
    spheres = [[i for i, x in enumerate(r) if x] for r in rb]
    if all(r.count(1) == 1 and sum(r) == 1 for r in rb) and all(s == spheres[0] for s in spheres):
        k = spheres[0][0]
        kind = "minimum" if k == 0 else "maximum" if k == m else "saddle"
        return PLCriticalVertex(v, value, kind, k, first)
    nz = [i for i, x in enumerate(first) if x]
    return PLCriticalVertex(v, value, "degenerate", nz[0] if nz else None, first)


def pl_critical_points(field_: PLScalarField, *, include_regular: bool = False) -> list[PLCriticalVertex]:
    out = []
    for s in field_.base.simplices(0):
        cv = classify_vertex(field_, s[0])
        if include_regular or cv.kind != "regular":
            out.append(cv)
    out.sort(key=lambda c: field_.key(c.vertex))
    return out


# -- grids ---------------------------------------------------------------------------
@dataclass
class GridField:
    """Samples on a rectangular lattice, ``values[i0, i1, ...]`` at ``(axes[0][i0], ...)``.

    ``mask`` marks excluded sample points (``True`` = excluded), e.g. points
    near a singularity of the sampled function.
    """

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    mask: np.ndarray | None = None
    tolerance: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values)
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")
        if not 1 <= len(shape) <= 4:
            raise ValueError("grids of dimension 1 to 4 are supported")
        if self.mask is None:
            self.mask = np.zeros(shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != shape:
            raise ValueError("mask shape does not match values")
        if np.any(~np.isfinite(self.values[~self.mask])):
            raise ValueError("unmasked samples must be finite")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) if len(a) > 1 else 0.0 for a in self.axes)

    @classmethod
    def sample(cls, fn, axes: Sequence[np.ndarray], mask=None, tolerance: float = 0.0, meta=None) -> "GridField":
        mesh = np.meshgrid(*axes, indexing="ij")
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(fn(*mesh), dtype=float)
        return cls(tuple(axes), vals, mask, tolerance, meta or {})

    def included(self, h: float) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return (~self.mask) & (self.values <= h)

    def masked_straddles(self, h: float) -> int:
        """Masked sample points adjacent to an included one: the sublevel set touches a puncture there."""
        inc = self.included(h)
        near = ndimage.binary_dilation(inc, structure=ndimage.generate_binary_structure(self.ndim, self.ndim))
        return int(np.count_nonzero(near & self.mask))


def cubical_sublevel(grid: GridField, h: float) -> CellComplex:
    """Full cubical subcomplex spanned by the unmasked samples with value ``<= h``."""
    inc = grid.included(h)
    n = grid.ndim
    shape = inc.shape
    cells: list[list[tuple[tuple[int, ...], tuple[int, ...]]]] = [[] for _ in range(n + 1)]
    for d in range(n + 1):
        for dirs in itertools.combinations(range(n), d):
            ok = inc.copy()
            sl = [slice_(0, s) for s in shape]
            for a in dirs:
                sl[a] = slice_(0, shape[a] - 1)
            ok = ok[tuple(sl)].copy()
            for sub in range(1, 2 ** d):
                shifted = [slice_(0, s) for s in shape]
                for t, a in enumerate(dirs):
                    lo = (sub >> t) & 1
                    shifted[a] = slice_(lo, shape[a] - 1 + lo)
                ok &= inc[tuple(shifted)]
            for anchor in zip(*np.nonzero(ok)):
                cells[d].append((tuple(int(x) for x in anchor), dirs))
    for row in cells:
        row.sort()
    while cells and not cells[-1]:
        cells.pop()
    index = [{c: i for i, c in enumerate(row)} for row in cells]
    boundaries = []
    for d, row in enumerate(cells):
        out = []
        for anchor, dirs in row:
            chain = []
            for t, a in enumerate(dirs):
                rest = dirs[:t] + dirs[t + 1:]
                up = list(anchor)
                up[a] += 1
                sign = (-1) ** t
                chain.append((index[d - 1][(tuple(up), rest)], sign))
                chain.append((index[d - 1][(anchor, rest)], -sign))
            out.append(chain)
        boundaries.append(out)
    return CellComplex(boundaries)


def grid_sublevel_betti(grid: GridField, h: float) -> tuple[int, int]:
    """``(b0, b1)`` of the 2D cubical sublevel set via labelling and Euler counts.

    A full cubical subcomplex of the plane has no 2-dimensional homology, so
    ``b1 = b0 - χ``.
    """
    if grid.ndim != 2:
        raise ValueError("the labelling route is for 2D grids")
    inc = grid.included(h)
    _, b0 = ndimage.label(inc)
    v = int(np.count_nonzero(inc))
    e = int(np.count_nonzero(inc[1:, :] & inc[:-1, :]) + np.count_nonzero(inc[:, 1:] & inc[:, :-1]))
    f = int(np.count_nonzero(inc[1:, 1:] & inc[:-1, 1:] & inc[1:, :-1] & inc[:-1, :-1]))
    return int(b0), int(b0 - (v - e + f))


# -- sweeps ---------------------------------------------------------------------------
@dataclass
class SweepTable:
    rows: list[tuple[object, dict[str, HomologySummary]]]
    mode: str = "level"
    flags: dict[str, list] = field(default_factory=dict)

    @property
    def levels(self) -> list:
        return [a for a, _ in self.rows]

    @property
    def coefficients(self) -> list[str]:
        return list(self.rows[0][1]) if self.rows else []

    @property
    def jumps(self) -> list[tuple[object, object]]:
        return [(a, b) for (a, sa), (b, sb) in zip(self.rows, self.rows[1:]) if sa != sb]

    def summaries(self, coeff: str | CoefficientSpec = "Q") -> list[HomologySummary]:
        return [s[str(coeff)] for _, s in self.rows]

    def betti_column(self, l: int, coeff: str | CoefficientSpec = "Q") -> list[int]:
        return [s.betti_at(l) for s in self.summaries(coeff)]

    def _width(self) -> int:
        return max([len(s.betti) for _, r in self.rows for s in r.values()] + [1])

    def to_csv(self) -> str:
        width = self._width()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "coeff"] + [f"b{l}" for l in range(width)] + ["torsion"])
        for a, sums in self.rows:
            for c, s in sums.items():
                tors = ";".join(f"H{l}:" + "x".join(map(str, s.torsion_at(l))) for l in range(width) if s.torsion_at(l))
                w.writerow([_fmt(a), c] + [s.betti_at(l) for l in range(width)] + [tors])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rows": [{"level": _num(a), "homology": {c: s.to_dict() for c, s in sums.items()}} for a, sums in self.rows],
            "jumps": [[_num(a), _num(b)] for a, b in self.jumps],
            "flags": self.flags,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def gnuplot(self, coeff: str | CoefficientSpec = "Q") -> dict[int, str]:
        """Two-column ``level b_l`` data per Betti index."""
        out = {}
        for l in range(self._width()):
            lines = [f"# level b{l} ({coeff})"]
            lines += [f"{_fmt(a)} {s.betti_at(l)}" for a, s in zip(self.levels, self.summaries(coeff))]
            out[l] = "\n".join(lines) + "\n"
        return out


def _fmt(a) -> str:
    if isinstance(a, Fraction):
        return str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"
    return repr(float(a))


def _coeff_list(coeffs) -> list[CoefficientSpec]:
    if coeffs is None:
        return [Q]
    if isinstance(coeffs, (CoefficientSpec, str)):
        coeffs = [coeffs]
    return [c if isinstance(c, CoefficientSpec) else CoefficientSpec.parse(c) for c in coeffs]


def sweep(source, levels: Sequence, coeff=None, *, mode: str = "level") -> SweepTable:
    """Homology of level (or sublevel) sets at each requested level.

    ``source`` is a :class:`PLScalarField` (modes ``level`` and ``sublevel``)
    or a :class:`GridField` (sublevel only).
    """
    coeffs = _coeff_list(coeff)
    if isinstance(source, PLScalarField):
        lv = [source.check_level(a) for a in levels]
    else:
        lv = [float(a) for a in levels]
    if any(b <= a for a, b in zip(lv, lv[1:])):
        raise ValueError("sweep levels must be strictly increasing")
    rows, flags = [], {}
    if isinstance(source, PLScalarField):
        if mode not in ("level", "sublevel"):
            raise ValueError(f"unknown sweep mode {mode!r}")
        build = slice if mode == "level" else sublevel_complex
        for a in lv:
            c = build(source, a)
            rows.append((a, {str(k): homology(c, k) for k in coeffs}))
    elif isinstance(source, GridField):
        if mode != "sublevel":
            raise ValueError("grid fields support sublevel sweeps only")
        straddles = []
        for a in lv:
            if source.ndim == 2:
                b0, b1 = grid_sublevel_betti(source, a)
                sums = {str(k): HomologySummary(str(k), [b0, b1]) for k in coeffs}
            else:
                c = cubical_sublevel(source, a)
                sums = {str(k): homology(c, k) for k in coeffs}
            rows.append((a, sums))
            straddles.append(source.masked_straddles(a))
        flags["masked_straddles"] = straddles
    else:
        raise TypeError(f"cannot sweep {type(source).__name__}")
    return SweepTable(rows, mode, flags)


# -- grid critical points ------------------------------------------------------------------
_RING = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class GridCritical:
    grid_index: tuple[int, int]
    location: tuple[float, float]
    value: float
    pattern: str  # minimum | maximum | saddle | monkey
    index: int | None
    det: float
    non_degenerate: bool

    def record(self, **kw) -> CriticalPointRecord:
        return CriticalPointRecord(
            self.value,
            self.index if self.non_degenerate else None,
            non_degenerate=self.non_degenerate,
            location=self.location,
            **kw,
        )


def _hessian(v: np.ndarray, i: int, j: int, hx: float, hy: float) -> np.ndarray:
    fxx = (v[i + 1, j] - 2 * v[i, j] + v[i - 1, j]) / hx**2
    fyy = (v[i, j + 1] - 2 * v[i, j] + v[i, j - 1]) / hy**2
    fxy = (v[i + 1, j + 1] - v[i + 1, j - 1] - v[i - 1, j + 1] + v[i - 1, j - 1]) / (4 * hx * hy)
    return np.array([[fxx, fxy], [fxy, fyy]])


def detect_grid_critical_points(grid: GridField, *, det_tol: float = 1e-8, cluster_radius: int = 2) -> list[GridCritical]:
    """Local extrema and saddles of a 2D grid from the 8-neighbour sign pattern.

    The index comes from the signs of the finite-difference Hessian
    eigenvalues; ``|det H| < det_tol · scale²`` (``scale`` the largest
    absolute sample in the 3×3 neighbourhood) flags a point as degenerate.
    Adjacent detections are merged, keeping the one with the smallest
    finite-difference gradient.
    """
    if grid.ndim != 2:
        raise ValueError("critical point detection is implemented for 2D grids")
    v = grid.values.astype(float)
    nx, ny = v.shape
    hx, hy = grid.spacing
    bad = ndimage.binary_dilation(grid.mask, structure=np.ones((3, 3), bool))
    inner = np.zeros_like(bad)
    inner[1:-1, 1:-1] = True
    ok = inner & ~bad
    centre = v[1:-1, 1:-1]
    signs = []
    for di, dj in _RING:
        nb = v[1 + di:nx - 1 + di, 1 + dj:ny - 1 + dj]
        signs.append(nb > centre)
    signs = np.stack(signs)
    changes = np.sum(signs != np.roll(signs, 1, axis=0), axis=0)
    allup = np.all(signs, axis=0)
    alldown = np.all(~signs, axis=0)
    cand = np.zeros_like(ok)
    cand[1:-1, 1:-1] = allup | alldown | (changes >= 4)
    cand &= ok
    found = []
    for i, j in zip(*np.nonzero(cand)):
        c = changes[i - 1, j - 1]
        pattern = "minimum" if allup[i - 1, j - 1] else "maximum" if alldown[i - 1, j - 1] else ("saddle" if c == 4 else "monkey")
        H = _hessian(v, i, j, hx, hy)
        det = float(np.linalg.det(H))
        scale = float(np.max(np.abs(v[i - 1:i + 2, j - 1:j + 2])))
        nondeg = abs(det) >= det_tol * scale**2 and pattern != "monkey"
        index = int(np.sum(np.linalg.eigvalsh(H) < 0)) if nondeg else None
        expected = {"minimum": 0, "saddle": 1, "maximum": 2}.get(pattern)
        if nondeg and index != expected:
            nondeg, index = False, None
        gx = (v[i + 1, j] - v[i - 1, j]) / (2 * hx)
        gy = (v[i, j + 1] - v[i, j - 1]) / (2 * hy)
        found.append((float(np.hypot(gx, gy)), (int(i), int(j)), pattern, index, det, nondeg))
    found.sort()
    kept: list[tuple] = []
    for item in found:
        i, j = item[1]
        if all(max(abs(i - k[1][0]), abs(j - k[1][1])) > cluster_radius for k in kept):
            kept.append(item)
    out = [
        GridCritical((i, j), (float(grid.axes[0][i]), float(grid.axes[1][j])), float(v[i, j]), pattern, index, det, nondeg)
        for _, (i, j), pattern, index, det, nondeg in kept
    ]
    out.sort(key=lambda c: (c.value, c.location))
    return out
