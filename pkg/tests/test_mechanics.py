import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy

from morselevels import chaincore as cc
from morselevels.chaincore import Fp, Q, Z, Zk, validate_complex
from morselevels.homology import cycle_class_order, homology, relative_homology
from morselevels.mechanics import (
    SurfaceModel,
    annulus_surface,
    circle_bundle,
    collapsed_circle_bundle,
    disk_surface,
    expected_homology,
    fiber_class,
    handle_examples,
    lens,
    nbody_query,
    pendulum_critical_values,
    pendulum_scenario,
    reference_complex,
    rp2,
    rtbp_equilibria,
    rtbp_potential,
    sphere_surface,
    voxel_surface,
)
from morselevels.morserules import Outcome, verdict

ALL = (Q, Fp(2), Fp(3), Z, Zk(4))


@pytest.mark.parametrize("name", ["sphere(0)", "sphere(1)", "sphere(3)", "torus2", "rp2", "lens(1)", "lens(4)", "s2xs1", "genus(2)", "torus3"])
def test_reference_homology(name):
    c = reference_complex(name)
    assert validate_complex(c).valid
    head, _, rest = name.partition("(")
    betti, torsion = expected_homology(head, int(rest[:-1]) if rest else None)
    assert homology(c, Z) == cc_summary(betti, torsion)


def cc_summary(betti, torsion):
    from morselevels.homology import HomologySummary

    return HomologySummary("Z", list(betti), [list(t) for t in torsion])


def test_rp2_mod2_betti():
    assert homology(rp2(), Fp(2)).betti == [1, 1, 1]
    assert homology(rp2(), Q).betti == [1, 0, 0]


def test_lens_h1_against_sympy():
    from sympy.matrices.normalforms import smith_normal_form

    c = lens(4)
    m = sympy.Matrix([[k for _, k in c.boundary(2, 0)]])
    assert smith_normal_form(m, domain=sympy.ZZ)[0, 0] == 4
    assert homology(c, Z).torsion_at(1) == [4]


def test_unknown_reference():
    with pytest.raises(ValueError):
        reference_complex("klein")
    with pytest.raises(ValueError):
        reference_complex("kuehnel_cp2")


def test_surfaces():
    s, d, a = sphere_surface(), disk_surface(), annulus_surface()
    assert s.closed and s.orientable
    assert not d.closed and d.orientable and not a.closed
    assert not SurfaceModel(rp2()).orientable
    assert SurfaceModel.from_simplicial(voxel_surface(2)).closed
    with pytest.raises(ValueError):
        SurfaceModel.from_simplicial(cc.simplicial_complex([(0, 1, 2), (0, 1, 3), (0, 1, 4)]))


@pytest.mark.parametrize("base", [sphere_surface(), SurfaceModel.from_simplicial(voxel_surface(1))])
def test_untwisted_bundle_is_product(base):
    b = circle_bundle(base, 0)
    p = cc.product_complex(base.complex, cc.cw_sphere(1))
    assert b == p
    for k in ALL:
        assert homology(b, k) == homology(p, k)


@pytest.mark.parametrize("e", [-2, 0, 1, 2, 3, 5])
def test_bundle_over_sphere(e):
    c = circle_bundle(sphere_surface(), e)
    assert validate_complex(c).valid
    h = homology(c, Z)
    if e == 0:
        assert h.betti == [1, 1, 1, 1]
    else:
        assert h.betti == [1, 0, 0, 1]
        assert h.torsion_at(1) == ([abs(e)] if abs(e) > 1 else [])
    order = cycle_class_order(c, fiber_class(sphere_surface()))
    assert order == (math.inf if e == 0 else abs(e))


def test_twisted_torus_bundle():
    base = SurfaceModel.from_simplicial(voxel_surface(1))
    h = homology(circle_bundle(base, 3), Z)
    assert h.betti == [1, 2, 2, 1] and h.torsion_at(1) == [3]


def test_bundle_errors():
    with pytest.raises(ValueError):
        circle_bundle(SurfaceModel(rp2()), 2)
    with pytest.raises(ValueError):
        circle_bundle(disk_surface(), 0)
    with pytest.raises(ValueError):
        collapsed_circle_bundle(sphere_surface())


def test_collapsed_bundles():
    disk = collapsed_circle_bundle(disk_surface())
    assert validate_complex(disk).valid
    for k in ALL:
        assert homology(disk, k) == homology(lens(1), k)
    assert homology(collapsed_circle_bundle(annulus_surface()), Z) == homology(reference_complex("s2xs1"), Z)


@pytest.mark.parametrize("base", [disk_surface(), annulus_surface()])
def test_collapsed_pair_matches_product_pair(base):
    # collapsing fibers inside the boundary part does not change X/A
    prod = cc.product_complex(base.complex, cc.cw_sphere(1))
    bd_labels = {base.complex.label(d, i) for d, i in base.boundary}
    a_prod = {(d, i) for d in range(prod.dim + 1) for i, lab in enumerate(prod.labels(d)) if lab.rpartition("x")[0] in bd_labels}
    col = collapsed_circle_bundle(base)
    a_col = {(d, i) for d in range(col.dim + 1) for i, lab in enumerate(col.labels(d)) if lab.rpartition("x")[0] in bd_labels}
    assert len(a_col) < len(a_prod)
    for k in (Q, Fp(2), Z):
        assert relative_homology(prod, a_prod, k) == relative_homology(col, a_col, k)


def test_handle_examples():
    deltas = []
    for ex in handle_examples():
        assert validate_complex(ex.after).valid
        a, b = homology(ex.before, Q), homology(ex.after, Q)
        deltas.append({l: b.betti_at(l) - a.betti_at(l) for l in range(ex.m) if b.betti_at(l) != a.betti_at(l)})
    assert deltas == [{1: 2}, {1: 1, 2: 1}, {0: -1, 2: -1}]


# -- pendulum ------------------------------------------------------------------------------
def test_pendulum_critical_values_from_potential():
    zs = sympy.symbols("z")
    v = zs**2 - zs / 2
    crit = sympy.solve(sympy.diff(v, zs), zs)
    values = sorted([v.subs(zs, c) for c in crit] + [v.subs(zs, 1), v.subs(zs, -1)])
    assert [F(str(x)) for x in values] == sorted(pendulum_critical_values())


def test_pendulum_levels():
    h1 = {}
    for h, region, exp in ((0, "band", "S2xS1"), (1, "disk", "S3"), (2, "sphere", "RP3")):
        s = pendulum_scenario(h)
        assert (s.region, s.expected) == (region, exp)
        assert validate_complex(s.model).valid
        h1[h] = homology(s.model, Z)
        assert h1[h].betti_at(3) == 1
    assert (h1[0].betti_at(1), h1[0].torsion_at(1)) == (1, [])
    assert (h1[1].betti_at(1), h1[1].torsion_at(1)) == (0, [])
    assert (h1[2].betti_at(1), h1[2].torsion_at(1)) == (0, [2])
    assert [verdict(q).outcome for q in pendulum_scenario(1).passes] == [Outcome.MUST_CHANGE] * 2


def test_pendulum_other_levels():
    assert pendulum_scenario(F(-1, 8)).region == "empty"
    assert pendulum_scenario("0.25").region == "band"
    assert pendulum_scenario("0.75").region == "disk"
    for bad in (F(-1, 16), F(1, 2), "3/2"):
        with pytest.raises(ValueError, match="critical value"):
            pendulum_scenario(bad)


# -- restricted three-body ------------------------------------------------------------------
def test_rtbp_equilibria_are_critical():
    for mu in (0.01, 0.2, 0.5):
        for e in rtbp_equilibria(mu):
            x, y, d = e["x"], e["y"], 1e-6
            from morselevels.mechanics import rtbp_value

            gx = (rtbp_value(x + d, y, mu) - rtbp_value(x - d, y, mu)) / (2 * d)
            gy = (rtbp_value(x, y + d, mu) - rtbp_value(x, y - d, mu)) / (2 * d)
            assert abs(gx) < 1e-6 and abs(gy) < 1e-6
    with pytest.raises(ValueError):
        rtbp_equilibria(1.0)


def test_rtbp_symmetric_mass_ratio():
    s = rtbp_potential(0.5, n=200)
    eq = {e["name"]: e for e in s.equilibria}
    assert eq["L4"]["x"] == eq["L5"]["x"] and eq["L4"]["y"] == -eq["L5"]["y"]
    assert eq["L4"]["value"] == pytest.approx(eq["L5"]["value"])
    l4, l5 = s.matches["L4"], s.matches["L5"]
    assert l4.location[0] == pytest.approx(l5.location[0]) and l4.location[1] == pytest.approx(-l5.location[1])
    assert l4.index == l5.index == 2
    # y -> -y symmetry of the samples: the row for y = 0 sits at n/2
    v = s.grid.values
    assert np.allclose(v[:, 101:], v[:, 99:0:-1], equal_nan=True)


def test_rtbp_window_warning():
    with pytest.warns(UserWarning):
        rtbp_potential(0.2, n=100, half_width=0.9)


# -- n-body ------------------------------------------------------------------------------------
def test_nbody():
    for n, m, k in ((2, 2, 0), (3, 6, 2), (4, 10, 4)):
        q = nbody_query(n)
        assert q.m == m and q.points[0].index == k
        assert verdict(q).outcome is Outcome.MUST_CHANGE
    assert nbody_query(3, pair=True).total_points == 2
    assert verdict(nbody_query(3, pair=True)).outcome is Outcome.MUST_CHANGE
    with pytest.raises(ValueError):
        nbody_query(1)
    with pytest.raises(ValueError):
        nbody_query(3, index=3)
