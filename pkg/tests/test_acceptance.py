"""Acceptance criteria. Each test records one PASS/FAIL line shown in the terminal summary."""

import math
import random
import time
from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from acceptance_log import record
from morselevels import chaincore as cc
from morselevels.chaincore import Fp, Q, Z, Zk
from morselevels.homology import (
    betti_mod_p_from_integral,
    exact_sequence_ranks,
    homology,
    homology_integral,
    morse_inequality_holds,
    relative_homology,
)
from morselevels.levelset import pl_critical_points, slice, sublevel_pair, sweep
from morselevels.mechanics import (
    euler_example,
    fiber_class,
    handle_examples,
    pendulum_passes,
    pendulum_scenario,
    reference_complex,
    rp2_perfect_field,
    rtbp_potential,
    sphere_height_field,
    sphere_surface,
    voxel_height_field,
)
from morselevels.morserules import (
    RULE_CLOSED_L1,
    BundleContext,
    CriticalPointRecord,
    LevelPassQuery,
    Outcome,
    allowed_deltas,
    check_conformance,
    verdict,
)
from morselevels.homology import cycle_class_order

from strategies import complexes, subcomplex_cells


def check(number, title, ok, detail=""):
    record(number, title, ok, detail)
    assert ok, detail


def test_1_rp2_no_change():
    t0 = time.perf_counter()
    f = rp2_perfect_field()
    crit = pl_critical_points(f)
    saddle = [c for c in crit if c.index == 1]
    below, above = slice(f, F(3, 2)), slice(f, F(5, 2))
    circle = cc.cw_sphere(1)
    same = all(homology(below, k) == homology(above, k) == homology(circle, k) for k in (Fp(2), Z))
    v = verdict(LevelPassQuery(2, tuple(c.record() for c in saddle)))
    dt = time.perf_counter() - t0
    ok = (
        [c.index for c in crit] == [0, 1, 2]
        and saddle[0].value == 2
        and same
        and homology(below, Fp(2)).betti == [1, 1]
        and v.outcome is Outcome.MAY_NOT_CHANGE
        and dt < 1.0
    )
    check(1, "RP2 perfect Morse: circle on both sides, MAY_NOT_CHANGE", ok, f"{dt:.2f}s, witness {v.witness}")


def test_2_handle_deltas():
    t0 = time.perf_counter()
    expected = [{1: 2}, {1: 1, 2: 1}, {0: -1, 2: -1}]
    found, inside = [], True
    for ex in handle_examples():
        rule = allowed_deltas(ex.k, ex.m)
        for k in (Q, Fp(2)):
            a, b = homology(ex.before, k), homology(ex.after, k)
            j = {l: b.betti_at(l) - a.betti_at(l) for l in range(ex.m)}
            inside &= rule.admits(j)
        found.append({l: d for l, d in j.items() if d})
    dt = time.perf_counter() - t0
    ok = found == expected and inside and dt < 5
    check(2, "handle deltas T3 j1=2, S3->S2xS1 j1=1, S2+S2->S2 j0=-1", ok, f"{found}, {dt:.2f}s")


def test_3_pendulum():
    t0 = time.perf_counter()
    h1 = []
    for h in (0, 1, 2):
        s = homology(pendulum_scenario(h).model, Z)
        h1.append((s.betti_at(1), s.torsion_at(1)))
    vs = [verdict(q) for q in pendulum_passes()]
    dt = time.perf_counter() - t0
    ok = (
        h1 == [(1, []), (0, []), (0, [2])]
        and all(v.outcome is Outcome.MUST_CHANGE for v in vs)
        and (vs[1].rule, vs[1].witness) == (RULE_CLOSED_L1, "Zk:2")
        and dt < 5
    )
    check(3, "pendulum levels H1 = Z, 0, Z2; both maxima MUST_CHANGE", ok, f"H1 {h1}, top witness {vs[1].witness}, {dt:.2f}s")


def test_4_euler_trichotomy():
    ok, notes = True, []
    s3 = homology(reference_complex("lens(1)"), Z)
    for e in (0, 1, -1, 2, 3):
        ex = euler_example(e)
        order = cycle_class_order(ex.above, fiber_class(sphere_surface()))
        want = math.inf if e == 0 else abs(e)
        ok &= order == want == ex.fiber_order
        notes.append(f"e={e}:{order}")
        v = verdict(ex.query)
        if abs(e) == 1:
            ok &= v.outcome is Outcome.MAY_NOT_CHANGE and v.witness == "Hopf"
            ok &= homology(ex.above, Z) == homology(ex.below, Z) == s3
        else:
            ok &= v.outcome is Outcome.MUST_CHANGE
        if e == 0:
            prod = cc.product_complex(sphere_surface().complex, cc.cw_sphere(1))
            ok &= all(homology(ex.above, k) == homology(prod, k) for k in (Q, Fp(2), Z, Zk(3)))
    check(4, "Euler number trichotomy over S2", ok, "fiber orders " + ", ".join(notes))


def test_5_lens_vs_s2xs1():
    l4, p = reference_complex("lens(4)"), reference_complex("s2xs1")
    hz_l, hz_p = homology(l4, Z), homology(p, Z)
    f2_l, f2_p = homology(l4, Fp(2)).betti, homology(p, Fp(2)).betti
    ok = (hz_l.betti_at(1), hz_l.torsion_at(1)) == (0, [4]) and (hz_p.betti_at(1), hz_p.torsion_at(1)) == (1, []) and f2_l == f2_p
    check(5, "L(4,1) vs S2xS1: Z distinguishes, F2 Betti do not", ok, f"{hz_l} vs {hz_p}; F2 {f2_l}")


def test_6_rtbp():
    t0 = time.perf_counter()
    s = rtbp_potential(0.2, n=400)
    h = s.grid.spacing[0]
    sig, offsets = [], []
    for e in s.equilibria:
        d = s.matches[e["name"]]
        sig.append(None if d is None else d.index)
        offsets.append(math.inf if d is None else math.hypot(d.location[0] - e["x"], d.location[1] - e["y"]) / h)
    table = sweep(s.grid, s.sweep_levels(), [Q], mode="sublevel")
    b0, b1 = table.betti_column(0), table.betti_column(1)
    chi = [x - y for x, y in zip(b0, b1)]
    dt = time.perf_counter() - t0
    # levels: below L1 | L1..L2 | L2..L3 | L3..L4,L5 | above
    ok = (
        len(s.detected) == 5
        and sig == [e["index"] for e in s.equilibria] == [1, 1, 1, 2, 2]
        and max(offsets) <= 2
        and b0[:3] == [3, 2, 1]
        and b1[3] > b1[1]
        and b1[3] > b1[2]
        and chi[1:4] == [chi[0] - 1, chi[0] - 2, chi[0] - 3]
        and dt < 60
    )
    check(6, "restricted 3-body at mu=0.2: indices (1,1,1,2,2), b0 3->2->1", ok,
          f"max offset {max(offsets):.2f} spacings, b0 {b0}, b1 {b1}, {dt:.1f}s")


PROPERTY_RUNS = []
PROPERTY_BAD = []


def _properties(c, a):
    bad = []
    rep = cc.validate_complex(c)
    if not rep.valid:
        bad.append("boundary of boundary")
    chi = cc.euler_characteristic(c)
    for k in (Q, Fp(2), Fp(3), Fp(5)):
        if homology(c, k).euler != chi:
            bad.append(f"euler {k}")
    hz = homology_integral(c)
    for p in (2, 3, 5):
        if homology(c, Fp(p)).betti != betti_mod_p_from_integral(hz, p):
            bad.append(f"uct {p}")
    sub, _ = cc.subcomplex(c, a)
    for k in (Q, Fp(2)):
        ranks = exact_sequence_ranks(c, a, k)
        rel = relative_homology(c, a, k)
        hx, ha = homology(c, k), homology(sub, k)
        for i, r in enumerate(ranks):
            nxt = ranks[i + 1].rank_delta if i + 1 < len(ranks) else 0
            if not (r.h_a == r.rank_i + nxt and r.h_x == r.rank_i + r.rank_j and r.h_xa == r.rank_j + r.rank_delta):
                bad.append(f"exactness {k} l={i}")
            if (r.h_x, r.h_a, r.h_xa) != (hx.betti_at(i), ha.betti_at(i), rel.betti_at(i)):
                bad.append(f"ranks {k} l={i}")
    return bad


@settings(max_examples=150, database=None)
@given(complexes().filter(lambda c: c.size <= 300).flatmap(lambda c: st.tuples(st.just(c), subcomplex_cells(c))))
def _property_suite(args):
    c, a = args
    PROPERTY_RUNS.append(c.size)
    PROPERTY_BAD.extend(_properties(c, a))


def test_7_property_suite():
    PROPERTY_RUNS.clear()
    PROPERTY_BAD.clear()
    _property_suite()
    ok = len(PROPERTY_RUNS) >= 100 and not PROPERTY_BAD
    check(7, "chain complex, Euler, UCT and exact sequence properties", ok,
          f"{len(PROPERTY_RUNS)} complexes up to {max(PROPERTY_RUNS)} cells, {len(PROPERTY_BAD)} violations")


def _conformance_fields():
    yield "circle", 1, sphere_height_field(1)
    for m in (2, 3, 4):
        yield f"S{m}", m, sphere_height_field(m)
    rng = random.Random(7)
    for m in (2, 3, 4):
        for _ in range(3):
            f = sphere_height_field(m)
            vals = {v: F(rng.randint(-50, 50), 7) for v in f.values}
            yield f"random S{m}", m, type(f)(f.base, vals)
    yield "torus", 2, voxel_height_field(1)
    yield "genus 2", 2, voxel_height_field(2)


def test_8_conformance():
    bad, jumps, pairs = [], 0, 0
    for name, m, f in _conformance_fields():
        vv = sorted({c.value for c in pl_critical_points(f)})
        levels = [vv[0] - 1] + [(a + b) / 2 for a, b in zip(vv, vv[1:])] + [vv[-1] + 1]
        rep = check_conformance(sweep(f, levels, [Q, Fp(2)]), [c.record() for c in pl_critical_points(f)], m)
        jumps += sum(c.status == "ok" for c in rep.checks)
        bad += [f"{name}: {c.problems}" for c in rep.violations]
        bad += [f"{name}: misaligned" for c in rep.checks if c.status == "misaligned"]
        for i, a in enumerate(levels):
            for b in levels[i + 1:]:
                x, inner = sublevel_pair(f, a, b)
                sub, _ = cc.subcomplex(x, inner)
                for k in (Q, Fp(2)):
                    pairs += 1
                    if not morse_inequality_holds(homology(sub, k).betti, relative_homology(x, inner, k).betti, homology(x, k).betti):
                        bad.append(f"{name}: subadditivity {a},{b} {k}")
    check(8, "index rules on sphere, torus and genus-2 sweeps; (1+t)Q subadditivity", not bad,
          f"{jumps} checked jumps, {pairs} sublevel pairs, {len(bad)} violations")


def _random_query(rng):
    m = rng.randint(1, 12)
    bundle = None
    if m % 2 == 0 and rng.random() < 0.5:
        closed = rng.random() < 0.7
        bundle = BundleContext(
            m // 2,
            closed,
            euler_number=rng.choice([None, -2, -1, 0, 1, 2, 3]) if closed else None,
            trivial_outside_disk=rng.random() < 0.3,
        )
    pts = tuple(
        CriticalPointRecord(
            rng.randint(-3, 3),
            rng.randint(0, m),
            rng.choice([1, 1, 1, 2, 3]),
            rng.choice([None, True, False]),
            rng.random() < 0.9,
        )
        for _ in range(rng.randint(1, 4))
    )
    return LevelPassQuery(m, pts, bundle, rng.random() < 0.95)


def test_9_verdict_duality():
    rng = random.Random(2024)
    qs = [_random_query(rng) for _ in range(1000)]
    bad = [q for q in qs if verdict(q) != verdict(q.mirrored())]
    outcomes = {o: sum(verdict(q).outcome is o for q in qs) for o in Outcome}
    check(9, "verdict unchanged under k -> m-k on 1000 random queries", not bad,
          f"{len(bad)} violations; outcomes " + ", ".join(f"{o.value}={n}" for o, n in outcomes.items()))
