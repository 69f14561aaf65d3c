"""Concrete spaces and scenarios: reference complexes, circle bundles over
surfaces, collapsed bundles over Hill regions, the spherical pendulum and
celestial mechanics potentials."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import chaincore as cc
from .chaincore import CellComplex, Z
from .homology import CycleChain, cycle_class_order, homology
from .levelset import GridField, PLScalarField, detect_grid_critical_points, level_subdivision, to_fraction
from .morserules import BundleContext, CriticalPointRecord, LevelPassQuery

RP2_FACETS = ((0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1), (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3))


# -- reference spaces ----------------------------------------------------------------
def simplex_boundary(n: int) -> CellComplex:
    """``S^n`` as the boundary of the ``(n+1)``-simplex."""
    if n < 0:
        raise ValueError("sphere dimension must be >= 0")
    return cc.simplicial_complex(itertools.combinations(range(n + 2), n + 1))


def cross_polytope(n: int) -> CellComplex:
    """``S^n`` as the boundary of the ``(n+1)``-dimensional cross-polytope.

    Vertex ``2i`` is ``+e_i`` and ``2i + 1`` is ``-e_i``.
    """
    facets = [tuple(2 * i + s for i, s in enumerate(signs)) for signs in itertools.product((0, 1), repeat=n + 1)]
    return cc.simplicial_complex(facets)


def grid_torus(n: int = 3) -> CellComplex:
    """``T^2`` from an ``n × n`` periodic grid, each square cut along its diagonal."""
    if n < 3:
        raise ValueError("periodic grid needs n >= 3")
    vid = lambda i, j: (i % n) * n + (j % n)
    facets = []
    for i in range(n):
        for j in range(n):
            facets.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            facets.append((vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)))
    return cc.simplicial_complex(facets)


def freudenthal_torus3(n: int = 3) -> CellComplex:
    """``T^3`` from an ``n^3`` periodic grid, six tetrahedra per cube."""
    if n < 3:
        raise ValueError("periodic grid needs n >= 3")
    vid = lambda p: (p[0] % n) * n * n + (p[1] % n) * n + (p[2] % n)
    facets = []
    for base in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            p = list(base)
            simplex = [vid(p)]
            for a in perm:
                p[a] += 1
                simplex.append(vid(p))
            facets.append(simplex)
    return cc.simplicial_complex(facets)


def voxel_surface(g: int) -> CellComplex:
    """Closed orientable surface of genus ``g`` as the boundary of a voxel slab.

    The slab is ``(2g+1) × 3 × 1`` unit cubes with the cubes ``(2i+1, 1, 0)``
    removed.  Lattice point ``(x, y, z)`` is vertex ``100x + 10y + z``.
    """
    if g < 0:
        raise ValueError("genus must be >= 0")
    solid = {(x, y, 0) for x in range(2 * g + 1) for y in range(3)} - {(2 * i + 1, 1, 0) for i in range(g)}
    vid = lambda p: 100 * p[0] + 10 * p[1] + p[2]
    facets = []
    for cube in solid:
        for axis in range(3):
            for side in (0, 1):
                nb = list(cube)
                nb[axis] += 1 if side else -1
                if tuple(nb) in solid:
                    continue
                a, b = [d for d in range(3) if d != axis]
                corner = list(cube)
                corner[axis] += side
                sq = {}
                for da, db in itertools.product((0, 1), repeat=2):
                    p = list(corner)
                    p[a] += da
                    p[b] += db
                    sq[(da, db)] = vid(p)
                facets.append((sq[0, 0], sq[1, 0], sq[1, 1]))
                facets.append((sq[0, 0], sq[0, 1], sq[1, 1]))
    return cc.simplicial_complex(facets)


def rp2() -> CellComplex:
    """The 6-vertex real projective plane."""
    return cc.simplicial_complex(RP2_FACETS)


def lens(k: int) -> CellComplex:
    """Minimal CW lens space ``L(k,1)``: one cell per dimension, ``∂e² = k·e¹``."""
    if k < 1:
        raise ValueError("lens space needs k >= 1")
    return CellComplex([[()], [()], [[(0, k)]], [()]], labels=[["e0"], ["e1"], ["e2"], ["e3"]])


def s2xs1() -> CellComplex:
    return cc.product_complex(cc.cw_sphere(2), cc.cw_sphere(1))


REFERENCE_NAMES = ("sphere", "torus2", "rp2", "lens", "s2xs1", "genus", "torus3")

# documented integral homology, (betti, torsion) per dimension
EXPECTED = {
    "torus2": ([1, 2, 1], [[], [], []]),
    "rp2": ([1, 0, 0], [[], [2], []]),
    "s2xs1": ([1, 1, 1, 1], [[], [], [], []]),
    "torus3": ([1, 3, 3, 1], [[], [], [], []]),
}


def reference_complex(name: str, param: int | None = None) -> CellComplex:
    """Named reference space; ``name`` may carry its parameter, as in ``lens(4)``."""
    name = name.strip()
    if "(" in name:
        head, _, rest = name.partition("(")
        name, param = head.strip(), int(rest.rstrip(") "))
    if name == "sphere":
        return simplex_boundary(2 if param is None else param)
    if name == "torus2":
        return grid_torus(3)
    if name == "rp2":
        return rp2()
    if name == "lens":
        return lens(1 if param is None else param)
    if name == "s2xs1":
        return s2xs1()
    if name == "genus":
        return voxel_surface(1 if param is None else param)
    if name == "torus3":
        return freudenthal_torus3(3 if param is None else param)
    if name == "kuehnel_cp2":
        raise ValueError("kuehnel_cp2 is not built in this version")
    raise ValueError(f"unknown reference complex {name!r}; known: {', '.join(REFERENCE_NAMES)}")


def expected_homology(name: str, param: int | None = None) -> tuple[list[int], list[list[int]]]:
    """Documented integral homology of a reference space."""
    if name == "sphere":
        n = 2 if param is None else param
        if n == 0:
            return [2], [[]]
        return [1] + [0] * (n - 1) + [1], [[] for _ in range(n + 1)]
    if name == "lens":
        k = 1 if param is None else param
        return ([1, 0, 0, 1], [[], [k] if k > 1 else [], [], []])
    if name == "genus":
        g = 1 if param is None else param
        return [1, 2 * g, 1], [[], [], []]
    return EXPECTED[name]


# -- surfaces and circle bundles -----------------------------------------------------------
@dataclass
class SurfaceModel:
    """A surface complex with its boundary subcomplex (a face-closed cell set)."""

    complex: CellComplex
    boundary: frozenset = frozenset()
    name: str = ""

    @property
    def closed(self) -> bool:
        return not self.boundary

    @property
    def orientable(self) -> bool:
        if self.closed:
            return homology(self.complex, Z).betti_at(2) == 1
        rel = cc.quotient_chain_complex(self.complex, self.boundary)
        return homology(rel, Z).betti_at(2) == 1

    @classmethod
    def from_simplicial(cls, c: CellComplex, name: str = "") -> "SurfaceModel":
        """Boundary edges are those in exactly one triangle."""
        uses = [0] * c.count(1)
        for i in range(c.count(2)):
            for f, _ in c.boundary(2, i):
                uses[f] += 1
        bad = [i for i, u in enumerate(uses) if u not in (1, 2)]
        if bad:
            raise ValueError(f"not a surface: edge {c.label(1, bad[0])} in {uses[bad[0]]} triangles")
        edges = {(1, i) for i, u in enumerate(uses) if u == 1}
        return cls(c, frozenset(cc.closure(c, edges)), name)


def sphere_surface() -> SurfaceModel:
    return SurfaceModel(cross_polytope(2), frozenset(), "S2")


def disk_surface() -> SurfaceModel:
    return SurfaceModel.from_simplicial(cc.simplicial_complex([(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1)]), "D2")


def annulus_surface(n: int = 4) -> SurfaceModel:
    facets = []
    for i in range(n):
        a, b, c, d = i, (i + 1) % n, n + i, n + (i + 1) % n
        facets += [(a, b, d), (a, c, d)]
    return SurfaceModel.from_simplicial(cc.simplicial_complex(facets), "annulus")


def circle_bundle(base: SurfaceModel, e: int) -> CellComplex:
    """Circle bundle with Euler number ``e`` over a closed oriented surface.

    Cells are products with the two cells ``p`` and ``f`` of ``S^1``; the
    first 2-cell ``F`` picks up the extra incidence ``∂(F×p) += e·(v×f)``.
    """
    if not base.closed:
        raise ValueError("circle_bundle needs a closed base; use collapsed_circle_bundle")
    if not base.orientable:
        raise ValueError("Euler number needs an orientable base")
    c = base.complex
    if c.dim != 2:
        raise ValueError("base must be a surface")
    prod = cc.product_complex(c, cc.cw_sphere(1))
    bds = [[list(prod.boundary(d, i)) for i in range(prod.count(d))] for d in range(prod.dim + 1)]
    f2 = _product_index(c, 2, 0, fiber=False)
    v0 = _product_index(c, 0, _first_vertex(c, 0), fiber=True)
    bds[2][f2].append((v0, e))
    labels = [list(prod.labels(d)) for d in range(prod.dim + 1)]
    return CellComplex(bds, labels=labels)


def _first_vertex(c: CellComplex, face: int) -> int:
    # a vertex of the first 2-cell; any vertex gives a chain-isomorphic complex
    edge = c.boundary(2, face)[0][0]
    return c.boundary(1, edge)[0][0]


def _product_index(c: CellComplex, d: int, i: int, *, fiber: bool) -> int:
    """Index in ``c × S^1`` of ``σ×p`` (dimension ``d``) or ``σ×f`` (dimension ``d+1``).

    In each dimension the product lists the ``σ'×f`` cells before the ``σ×p`` cells.
    """
    if fiber:
        return i
    return (c.count(d - 1) if d >= 1 else 0) + i


def fiber_class(base: SurfaceModel) -> CycleChain:
    return CycleChain(1, {_product_index(base.complex, 0, 0, fiber=True): 1})


def collapsed_circle_bundle(base: SurfaceModel) -> CellComplex:
    """Trivial circle bundle over a surface with boundary, fibers collapsed over the boundary."""
    if base.closed:
        raise ValueError("base is closed; use circle_bundle")
    c = base.complex
    prod = cc.product_complex(c, cc.cw_sphere(1))
    dead = {(d + 1, _product_index(c, d, i, fiber=True)) for d, i in base.boundary}
    return cc.fiberwise_collapse(prod, dead)


# -- PL fields on reference spaces -------------------------------------------------------
def rp2_perfect_field() -> PLScalarField:
    """Perfect function on the 6-vertex RP²: minimum 1, saddle 2, maximum 3."""
    vals = {0: 1, 1: Fraction(4, 3), 2: Fraction(5, 3), 3: 2, 4: Fraction(5, 2), 5: 3}
    return PLScalarField(rp2(), vals)


def sphere_height_field(m: int, weights: Sequence | None = None) -> PLScalarField:
    """Linear height on the cross-polytope ``S^m``; vertex ``±e_i`` gets ``±w_i``."""
    c = cross_polytope(m)
    if weights is None:
        weights = [Fraction(1, 1) + Fraction(i, m + 2) for i in range(m + 1)]
    vals = {}
    for i, w in enumerate(weights):
        vals[2 * i], vals[2 * i + 1] = to_fraction(w), -to_fraction(w)
    return PLScalarField(c, vals)


def voxel_height_field(g: int) -> PLScalarField:
    """Height ``100x + 10y + z`` on the genus ``g`` voxel surface (the vertex id)."""
    c = voxel_surface(g)
    return PLScalarField(c, {s[0]: s[0] for s in c.simplices(0)})


def torus3_field(n: int = 3, seed: int = 0) -> PLScalarField:
    c = freudenthal_torus3(n)
    rng = np.random.default_rng(seed)
    verts = [s[0] for s in c.simplices(0)]
    vals = rng.permutation(len(verts))
    return PLScalarField(c, {v: int(x) for v, x in zip(verts, vals)})


# -- handle examples ---------------------------------------------------------------------
def _prism(a: Sequence[int], b: Sequence[int]) -> list[tuple[int, ...]]:
    """Staircase triangulation of ``∂Δ × [0,1]`` between two vertex lists paired in order."""
    n = len(a)
    out = []
    for face in itertools.combinations(range(n), n - 1):
        for t in range(n - 1):
            out.append(tuple(a[i] for i in face[: t + 1]) + tuple(b[i] for i in face[t:]))
    return out


def handle_surgery(facets: Sequence[Sequence[int]], sa: Sequence[int], sb: Sequence[int]) -> CellComplex:
    """Remove the open facets ``sa`` and ``sb`` and glue in a tube between their boundaries.

    This is surgery along ``S^0`` (attaching a 1-handle on the level set).
    The tube has a middle ring of new vertices so that none of its edges
    already exist.  The vertex pairing is chosen so that an orientable input
    stays orientable.
    """
    facets = [tuple(sorted(f)) for f in facets]
    rest = [f for f in facets if f not in (tuple(sorted(sa)), tuple(sorted(sb)))]
    if len(rest) != len(facets) - 2:
        raise ValueError("surgery facets not found")
    if set(sa) & set(sb):
        raise ValueError("surgery facets must be disjoint")
    top = len(sa) - 1
    fresh = max(v for f in facets for v in f) + 1
    mid = list(range(fresh, fresh + len(sa)))
    target = homology(cc.simplicial_complex(facets)).betti_at(top)
    out = None
    for pairing in (list(sb), [sb[1], sb[0]] + list(sb[2:])):
        c = cc.simplicial_complex(rest + _prism(list(sa), mid) + _prism(mid, pairing))
        if out is None:
            out = c
        if homology(c).betti_at(top) == target:
            return c
    return out


@dataclass
class HandleExample:
    name: str
    m: int
    k: int
    before: CellComplex
    after: CellComplex


def handle_examples() -> list[HandleExample]:
    """Level sets before and after a 1-handle in the three textbook situations."""
    octa = cross_polytope(2).simplices(2)
    s2_to_t2 = HandleExample("S2 -> T2 in a 3-manifold", 3, 1, cross_polytope(2), handle_surgery(octa, (0, 2, 4), (1, 3, 5)))
    c3 = cross_polytope(3).simplices(3)
    s3_to = HandleExample("S3 -> S2xS1 in a 4-manifold", 4, 1, cross_polytope(3), handle_surgery(c3, (0, 2, 4, 6), (1, 3, 5, 7)))
    shifted = [tuple(v + 6 for v in f) for f in octa]
    two = list(octa) + shifted
    join = HandleExample("S2+S2 -> S2 in a 3-manifold", 3, 1, cc.simplicial_complex(two), handle_surgery(two, (0, 2, 4), (6, 8, 10)))
    return [s2_to_t2, s3_to, join]


# -- pendulum ----------------------------------------------------------------------------
def pendulum_potential(z):
    return z * z - z / 2


PENDULUM_MIN = Fraction(-1, 16)  # at z = 1/4, a circle of minima
PENDULUM_MAXIMA = (Fraction(1, 2), Fraction(3, 2))  # z = 1 (local) and z = -1 (global)


def pendulum_critical_values() -> tuple[Fraction, Fraction, Fraction]:
    zc = Fraction(1, 4)  # V'(z) = 2z - 1/2
    return pendulum_potential(zc), pendulum_potential(Fraction(1)), pendulum_potential(Fraction(-1))


def latitude_sphere(rings: Sequence[Fraction], n: int = 6) -> tuple[CellComplex, dict[int, Fraction]]:
    """Triangulated ``S^2`` with poles and ``n``-gon rings at the given heights ``z``.

    Returns the complex and the height of every vertex.
    """
    rings = sorted(rings)
    south, north = 0, 1
    vid = lambda r, i: 2 + r * n + (i % n)
    facets = [(south, vid(0, i), vid(0, i + 1)) for i in range(n)]
    facets += [(north, vid(len(rings) - 1, i), vid(len(rings) - 1, i + 1)) for i in range(n)]
    for r in range(len(rings) - 1):
        for i in range(n):
            facets += [(vid(r, i), vid(r, i + 1), vid(r + 1, i + 1)), (vid(r, i), vid(r + 1, i), vid(r + 1, i + 1))]
    z = {south: Fraction(-1), north: Fraction(1)}
    for r, h in enumerate(rings):
        for i in range(n):
            z[vid(r, i)] = h
    return cc.simplicial_complex(facets), z


@dataclass
class PendulumScenario:
    h: Fraction
    region: str  # empty | band | disk | sphere
    base: SurfaceModel | None
    model: CellComplex
    passes: list[LevelPassQuery]
    critical_values: tuple[Fraction, Fraction, Fraction]
    expected: str


def pendulum_bundle() -> BundleContext:
    return BundleContext.cotangent(2, 2)


def pendulum_passes() -> list[LevelPassQuery]:
    lo, hi = PENDULUM_MAXIMA
    b = pendulum_bundle()
    return [
        LevelPassQuery(4, (CriticalPointRecord(lo, 2, 1, False, label="north pole"),), b),
        LevelPassQuery(4, (CriticalPointRecord(hi, 2, 1, True, label="south pole"),), b),
    ]


def pendulum_scenario(h) -> PendulumScenario:
    """Energy level ``H = |p|²/2 + V(z)`` of the spherical pendulum at energy ``h``."""
    h = to_fraction(h)
    vmin, v1, v2 = pendulum_critical_values()
    for c in (vmin, v1, v2):
        if h == c:
            raise ValueError(f"energy {h} is the critical value {c}")
    rings = [Fraction(i, 8) for i in range(-7, 8)]
    sphere, z = latitude_sphere(rings)
    fld = PLScalarField(sphere, {v: pendulum_potential(zv) for v, zv in z.items()})
    passes = pendulum_passes()
    if h < vmin:
        return PendulumScenario(h, "empty", None, cc.empty_complex(), passes, (vmin, v1, v2), "empty")
    if h > v2:
        base = SurfaceModel(sphere, frozenset(), "S2")
        return PendulumScenario(h, "sphere", base, circle_bundle(base, 2), passes, (vmin, v1, v2), "RP3")
    sub, keys = level_subdivision(fld, [h], bands=(0,), cut_ids=(0,))
    bd = frozenset((d, i) for d, row in enumerate(keys) for i, k in enumerate(row) if k.kind == "c")
    base = SurfaceModel(sub, bd, "Hill region")
    region, expected = ("band", "S2xS1") if h < v1 else ("disk", "S3")
    return PendulumScenario(h, region, base, collapsed_circle_bundle(base), passes, (vmin, v1, v2), expected)


# -- Euler number examples -------------------------------------------------------------------
@dataclass
class EulerExample:
    e: int
    fiber_order: float | int
    above: CellComplex  # level above the single global maximum: bundle over the closed base
    below: CellComplex  # just below: Hill region is the base minus a disk
    query: LevelPassQuery


def euler_example(e: int) -> EulerExample:
    base = sphere_surface()
    above = circle_bundle(base, e)
    order = cycle_class_order(above, fiber_class(base))
    facets = [f for f in base.complex.simplices(2) if f != base.complex.simplices(2)[-1]]
    below = collapsed_circle_bundle(SurfaceModel.from_simplicial(cc.simplicial_complex(facets), "S2 minus disk"))
    q = LevelPassQuery(4, (CriticalPointRecord(0, 2, 1, True),), BundleContext(2, True, euler_number=e))
    return EulerExample(e, order, above, below, q)


# -- restricted three-body problem ---------------------------------------------------------
def rtbp_value(x, y, mu: float):
    r1 = np.hypot(x + mu, y)
    r2 = np.hypot(x - 1 + mu, y)
    return -(x * x + y * y) / 2 - (1 - mu) / r1 - mu / r2


def rtbp_equilibria(mu: float) -> list[dict]:
    """The five Lagrange points with their potential values and indices."""
    if not 0 < mu < 1:
        raise ValueError("mass ratio must lie in (0, 1)")

    def dvdx(x):
        return -x + (1 - mu) * (x + mu) / abs(x + mu) ** 3 + mu * (x - 1 + mu) / abs(x - 1 + mu) ** 3

    eps = 1e-9
    x1 = brentq(dvdx, -mu + eps, 1 - mu - eps, xtol=1e-14)
    x2 = brentq(dvdx, 1 - mu + eps, 10.0, xtol=1e-14)
    x3 = brentq(dvdx, -10.0, -mu - eps, xtol=1e-14)
    pts = [("L1", x1, 0.0, 1), ("L2", x2, 0.0, 1), ("L3", x3, 0.0, 1)]
    pts += [("L4", 0.5 - mu, math.sqrt(3) / 2, 2), ("L5", 0.5 - mu, -math.sqrt(3) / 2, 2)]
    return [{"name": n, "x": x, "y": y, "value": float(rtbp_value(x, y, mu)), "index": k} for n, x, y, k in pts]


@dataclass
class RTBPScenario:
    mu: float
    grid: GridField
    equilibria: list[dict]
    detected: list
    matches: dict[str, object]
    warnings: list[str] = field(default_factory=list)

    def sweep_levels(self) -> list[float]:
        """One level below all critical values and one inside each gap."""
        vals = sorted({round(e["value"], 12) for e in self.equilibria})
        gap = vals[1] - vals[0]
        lv = [vals[0] - gap / 2]
        lv += [(a + b) / 2 for a, b in zip(vals, vals[1:])]
        lv.append(vals[-1] + gap / 2)
        return lv


def rtbp_potential(mu: float, n: int = 400, half_width: float = 2.0, mask_spacings: float = 2.0) -> RTBPScenario:
    """Masked grid samples of the rotating-frame potential and its equilibria.

    The axes run from ``-half_width`` in ``n`` steps of ``2·half_width/n`` so
    that the line ``y = 0`` carrying three equilibria is sampled.
    """
    eq = rtbp_equilibria(mu)
    h = 2 * half_width / n
    axis = -half_width + h * np.arange(n)
    axis[n // 2] = 0.0
    x, y = np.meshgrid(axis, axis, indexing="ij")
    near = (np.hypot(x + mu, y) <= mask_spacings * h) | (np.hypot(x - 1 + mu, y) <= mask_spacings * h)
    grid = GridField.sample(lambda a, b: rtbp_value(a, b, mu), (axis, axis), mask=near, meta={"mu": mu, "mask_spacings": mask_spacings})
    grid.values[near] = np.nan
    notes = []
    for e in eq:
        if max(abs(e["x"]), abs(e["y"])) > half_width - 2 * h:
            notes.append(f"{e['name']} lies outside the grid window")
    if notes:
        warnings.warn("; ".join(notes))
    detected = detect_grid_critical_points(grid)
    matches = {}
    for e in eq:
        best = min(detected, key=lambda d: math.hypot(d.location[0] - e["x"], d.location[1] - e["y"]), default=None)
        matches[e["name"]] = best
    return RTBPScenario(mu, grid, eq, detected, matches, notes)


# -- n-body ----------------------------------------------------------------------------------
def nbody_query(n: int, *, pair: bool = False, index: int | None = None) -> LevelPassQuery:
    """Level pass of the reduced planar ``n``-body problem (dimension ``4n - 6``).

    The index defaults to the largest possible one, ``2n - 4``; ``pair``
    declares two symmetric critical points of the same index.
    """
    if n < 2:
        raise ValueError("need at least two bodies")
    m = 4 * n - 6
    k = 2 * n - 4 if index is None else index
    if not 0 <= k <= 2 * n - 4:
        raise ValueError(f"index must lie in [0, {2 * n - 4}]")
    return LevelPassQuery(m, (CriticalPointRecord(0, k, 2 if pair else 1, label="central configuration"),))
