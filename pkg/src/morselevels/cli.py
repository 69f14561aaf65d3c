"""``morse-levels`` command line front end.

Exit codes: 0 success, 2 invalid input or missing file, 3 internal invariant
violation (a built complex failing validation, or a computed sweep breaking
an index rule).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import mechanics as mech
from .chaincore import CellComplex, CoefficientSpec, Fp, Z, complex_from_dict, subcomplex, validate_complex
from .homology import cycle_class_order, homology, relative_homology, subadditivity_quotient
from .levelset import (
    GridField,
    PLScalarField,
    detect_grid_critical_points,
    pl_critical_points,
    sublevel_pair,
    sweep,
    to_fraction,
)
from .levelset import slice as level_slice
from .morserules import (
    BundleContext,
    CriticalPointRecord,
    LevelPassQuery,
    allowed_deltas,
    check_conformance,
    format_order,
    maxima_delta_rule,
    verdict,
)

SCHEMA = 1
KINDS = ("reference", "pl_field", "grid", "bundle", "pendulum", "rtbp", "nbody")
EXAMPLES = ("rp2-no-change", "handle-examples", "pendulum", "euler-trichotomy", "lens-vs-s2xs1", "rtbp")
DEFAULT_COEFFS = ("Q", "Fp:2", "Z")


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


# -- helpers -----------------------------------------------------------------------
def number(x):
    """Exact rational from a JSON number or a string like ``"1/2"``."""
    if isinstance(x, bool):
        raise ConfigError(f"expected a number, got {x!r}")
    if isinstance(x, float):
        return Fraction(repr(x))
    try:
        return to_fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"bad number {x!r}") from exc


def jnum(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return float(repr(round(x, 12)))
    return x


def checked(c: CellComplex, what: str) -> CellComplex:
    rep = validate_complex(c)
    if not rep.valid:
        raise InvariantViolation(f"{what}: {'; '.join(rep.problems[:3])}")
    return c


def summaries(c: CellComplex, coeffs) -> dict:
    return {str(k): homology(c, k).to_dict() for k in coeffs}


def differing(a: CellComplex, b: CellComplex, coeffs) -> list[str]:
    return [str(k) for k in coeffs if homology(a, k) != homology(b, k)]


def require(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{cfg.get('kind')} config needs {', '.join(missing)}")


# -- scenario builders from config ---------------------------------------------------------
def build_pl_field(cfg: dict) -> PLScalarField:
    if "complex_file" in cfg:
        path = Path(cfg["complex_file"])
        if not path.exists():
            raise FileNotFoundError(path)
        c = complex_from_dict(json.loads(path.read_text()))
        vals = cfg.get("values")
        if not isinstance(vals, dict):
            raise ConfigError("pl_field with complex_file needs a values map")
        return PLScalarField(checked(c, "input complex"), {int(k): number(v) for k, v in vals.items()})
    name = cfg.get("field")
    param = cfg.get("param")
    builders = {
        "rp2_perfect": lambda: mech.rp2_perfect_field(),
        "sphere_height": lambda: mech.sphere_height_field(2 if param is None else int(param)),
        "voxel_height": lambda: mech.voxel_height_field(1 if param is None else int(param)),
        "torus_height": lambda: mech.voxel_height_field(1),
        "torus3": lambda: mech.torus3_field(3 if param is None else int(param), int(cfg.get("seed", 0))),
    }
    if name not in builders:
        raise ConfigError(f"unknown pl_field {name!r}; known: {', '.join(builders)} or complex_file")
    return builders[name]()


def critical_levels(fld: PLScalarField) -> list[Fraction]:
    return sorted({c.value for c in pl_critical_points(fld)})


def auto_levels(fld: PLScalarField, *, outer: bool = False) -> list[Fraction]:
    vals = critical_levels(fld)
    lv = [(a + b) / 2 for a, b in zip(vals, vals[1:])]
    if outer and vals:
        lv = [vals[0] - 1] + lv + [vals[-1] + 1]
    return lv


def build_grid(cfg: dict) -> GridField:
    require(cfg, "values")
    vals = np.asarray(cfg["values"], dtype=float)
    if vals.ndim not in (1, 2, 3, 4):
        raise ConfigError("grid values must be a 1-4 dimensional array")
    spacing = cfg.get("spacing", 1.0)
    origin = cfg.get("origin", 0.0)
    spacing = [float(spacing)] * vals.ndim if not isinstance(spacing, list) else [float(s) for s in spacing]
    origin = [float(origin)] * vals.ndim if not isinstance(origin, list) else [float(o) for o in origin]
    axes = tuple(o + s * np.arange(n) for o, s, n in zip(origin, spacing, vals.shape))
    mask = np.asarray(cfg["mask"], dtype=bool) if "mask" in cfg else None
    try:
        return GridField(axes, vals, mask, float(cfg.get("tolerance", 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_points(items) -> tuple[CriticalPointRecord, ...]:
    pts = []
    for p in items:
        if "index" not in p:
            raise ConfigError("critical point needs an index")
        pts.append(
            CriticalPointRecord(
                number(p.get("value", 0)),
                int(p["index"]),
                int(p.get("count", 1)),
                p.get("is_global_max_of_V"),
                bool(p.get("non_degenerate", True)),
                p.get("label"),
            )
        )
    return tuple(pts)


def build_bundle(cfg: dict) -> BundleContext:
    require(cfg, "rank")
    return BundleContext(
        int(cfg["rank"]),
        bool(cfg.get("base_closed", True)),
        bool(cfg.get("base_orientable", True)),
        bool(cfg.get("bundle_orientable", True)),
        None if cfg.get("euler_number") is None else int(cfg["euler_number"]),
        bool(cfg.get("trivial_outside_disk", False)),
        bool(cfg.get("is_cotangent", False)),
    )


# -- subcommands ---------------------------------------------------------------------------
def cmd_sweep(cfg: dict, coeffs) -> tuple[dict, object]:
    kind = cfg["kind"]
    if kind == "reference":
        require(cfg, "name")
        out = {}
        for name in [cfg["name"]] + list(cfg.get("compare", [])):
            c = checked(mech.reference_complex(name), name)
            out[name] = {"cells": c.counts(), "homology": summaries(c, coeffs)}
        return {"reference": out}, None
    if kind == "pl_field":
        fld = build_pl_field(cfg)
        mode = cfg.get("mode", "level")
        levels = [number(a) for a in cfg["levels"]] if "levels" in cfg else auto_levels(fld, outer=mode == "sublevel")
        table = sweep(fld, levels, coeffs, mode=mode)
        crit = [{"vertex": c.vertex, "value": jnum(c.value), "kind": c.kind, "index": c.index} for c in pl_critical_points(fld)]
        return {"critical_points": crit, "sweep": table.to_dict()}, table
    if kind in ("grid", "rtbp"):
        if kind == "grid":
            grid = build_grid(cfg)
            eq = None
            levels = [float(number(a)) for a in cfg.get("levels", [])]
            if not levels:
                raise ConfigError("grid sweep needs levels")
        else:
            scen = rtbp_from(cfg)
            grid = scen.grid
            eq = rtbp_summary(scen)
            levels = [float(number(a)) for a in cfg["levels"]] if "levels" in cfg else scen.sweep_levels()
        table = sweep(grid, levels, coeffs, mode="sublevel")
        body = {"sweep": table.to_dict(), "tolerance": grid.tolerance}
        if eq is not None:
            body["equilibria"] = eq
        return body, table
    if kind == "pendulum":
        levels = [number(a) for a in cfg.get("levels", ["0", "1", "2"])]
        rows = []
        for h in levels:
            s = mech.pendulum_scenario(h)
            rows.append({"h": jnum(h), "region": s.region, "model": s.expected, "homology": summaries(checked(s.model, "pendulum level"), coeffs)})
        return {"levels": rows}, None
    if kind == "bundle":
        e = int(cfg.get("euler_number", 0))
        base = mech.sphere_surface()
        c = checked(mech.circle_bundle(base, e), "circle bundle")
        order = cycle_class_order(c, mech.fiber_class(base))
        return {"base": "S2", "euler_number": e, "fiber_order": format_order(order), "homology": summaries(c, coeffs)}, None
    raise ConfigError(f"{kind} scenarios have no complex model to sweep (verdict only)")


def rtbp_from(cfg: dict):
    mu = float(number(cfg.get("mu", "1/5")))
    if not 0 < mu < 1:
        raise ConfigError("mu must lie in (0, 1)")
    return mech.rtbp_potential(mu, int(cfg.get("n", 400)), float(number(cfg.get("half_width", 2))))


def rtbp_summary(scen) -> list[dict]:
    h = scen.grid.spacing[0]
    out = []
    for e in scen.equilibria:
        d = scen.matches[e["name"]]
        out.append({
            "name": e["name"],
            "position": [jnum(e["x"]), jnum(e["y"])],
            "value": jnum(e["value"]),
            "index": e["index"],
            "detected": None if d is None else {
                "position": [jnum(d.location[0]), jnum(d.location[1])],
                "index": d.index,
                "non_degenerate": d.non_degenerate,
                "offset_in_spacings": jnum(math.hypot(d.location[0] - e["x"], d.location[1] - e["y"]) / h),
            },
        })
    return out


def cmd_verdict(cfg: dict, coeffs) -> tuple[dict, None]:
    kind = cfg["kind"]
    results = []
    if kind == "nbody":
        require(cfg, "n")
        q = mech.nbody_query(int(cfg["n"]), pair=bool(cfg.get("pair", False)), index=cfg.get("index"))
        results.append({"query": q.to_dict(), "verdict": verdict(q).to_dict(), "model": "none: reduced space is declared data"})
    elif kind == "bundle":
        require(cfg, "points")
        b = build_bundle(cfg)
        q = LevelPassQuery(2 * b.rank, build_points(cfg["points"]), b, bool(cfg.get("assumptions_hold", True)))
        results.append({"query": q.to_dict(), "verdict": verdict(q).to_dict()})
    elif kind == "pendulum":
        which = cfg.get("pass", "both")
        passes = mech.pendulum_passes()
        chosen = {"local": passes[:1], "top": passes[1:], "both": passes}.get(which)
        if chosen is None:
            raise ConfigError("pendulum pass must be local, top or both")
        sides = {passes[0]: ("0", "1"), passes[1]: ("1", "2")}
        for q in chosen:
            lo, hi = sides[q]
            a, b = mech.pendulum_scenario(lo), mech.pendulum_scenario(hi)
            v = verdict(q)
            results.append({
                "query": q.to_dict(),
                "verdict": v.to_dict(),
                "below": {"h": lo, "model": a.expected, "homology": summaries(checked(a.model, "pendulum level"), coeffs)},
                "above": {"h": hi, "model": b.expected, "homology": summaries(checked(b.model, "pendulum level"), coeffs)},
                "differing_coefficients": differing(a.model, b.model, coeffs),
                "observed_j1": {
                    str(k): homology(b.model, k).betti_at(1) - homology(a.model, k).betti_at(1) for k in coeffs if k.is_field
                },
                "maxima_rule_j1": sorted(maxima_delta_rule(bool(q.points[0].is_global_max_of_V))),
            })
    elif kind == "pl_field":
        fld = build_pl_field(cfg)
        crit = pl_critical_points(fld)
        vals = sorted({c.value for c in crit})
        for val in vals:
            pts = tuple(c.record() for c in crit if c.value == val)
            q = LevelPassQuery(fld.dim, pts)
            i = vals.index(val)
            lo = (vals[i - 1] + val) / 2 if i else val - 1
            hi = (vals[i + 1] + val) / 2 if i + 1 < len(vals) else val + 1
            a, b = level_slice(fld, lo), level_slice(fld, hi)
            results.append({
                "query": q.to_dict(),
                "verdict": verdict(q).to_dict(),
                "below": {"level": jnum(lo), "homology": summaries(a, coeffs)},
                "above": {"level": jnum(hi), "homology": summaries(b, coeffs)},
                "differing_coefficients": differing(a, b, coeffs),
            })
    elif kind == "rtbp":
        scen = rtbp_from(cfg)
        eq = scen.equilibria
        gmax = max(e["value"] for e in eq)
        groups: dict[float, list] = {}
        for e in eq:
            groups.setdefault(round(e["value"], 9), []).append(e)
        b = BundleContext(2, base_closed=False, base_orientable=True, bundle_orientable=True, is_cotangent=True)
        for val, es in sorted(groups.items()):
            pts = tuple(
                CriticalPointRecord(e["value"], e["index"], 1, abs(e["value"] - gmax) < 1e-9, label=e["name"]) for e in es
            )
            q = LevelPassQuery(4, pts, b)
            results.append({"query": q.to_dict(), "verdict": verdict(q).to_dict()})
    elif kind == "grid":
        grid = build_grid(cfg)
        for d in detect_grid_critical_points(grid):
            q = LevelPassQuery(grid.ndim, (d.record(),))
            results.append({"query": q.to_dict(), "verdict": verdict(q).to_dict()})
    else:
        raise ConfigError(f"verdicts are not defined for {kind} scenarios")
    return {"verdicts": results}, None


def cmd_conformance(cfg: dict, coeffs) -> tuple[dict, object]:
    if cfg["kind"] != "pl_field":
        raise ConfigError("conformance runs on pl_field scenarios")
    fld = build_pl_field(cfg)
    field_coeffs = [k for k in coeffs if k.is_field] or [CoefficientSpec("Q")]
    levels = [number(a) for a in cfg["levels"]] if "levels" in cfg else auto_levels(fld, outer=True)
    table = sweep(fld, levels, field_coeffs)
    points = [c.record() for c in pl_critical_points(fld)]
    rep = check_conformance(table, points, fld.dim)
    pairs = []
    bad_pairs = 0
    for k in field_coeffs:
        for a, b in zip(levels, levels[1:]):
            x, inner = sublevel_pair(fld, a, b)
            sub, _ = subcomplex(x, inner)
            q = subadditivity_quotient(homology(sub, k).betti, relative_homology(x, inner, k).betti, homology(x, k).betti)
            ok = q is not None and all(x >= 0 for x in q)
            bad_pairs += not ok
            pairs.append({"coeff": str(k), "a": jnum(a), "b": jnum(b), "Q": q, "ok": ok})
    body = {"conformance": rep.to_dict(), "subadditivity": {"pairs": pairs, "violations": bad_pairs}, "sweep": table.to_dict()}
    if not rep.conformant or bad_pairs:
        raise InvariantViolationWithReport(body)
    return body, table


class InvariantViolationWithReport(InvariantViolation):
    def __init__(self, body):
        super().__init__("computed sweep violates an index rule")
        self.body = body


# -- named examples --------------------------------------------------------------------------
def example_rp2(coeffs) -> dict:
    fld = mech.rp2_perfect_field()
    lo, hi = Fraction(3, 2), Fraction(5, 2)
    a, b = checked(level_slice(fld, lo), "slice"), checked(level_slice(fld, hi), "slice")
    crit = [c for c in pl_critical_points(fld) if c.value == 2]
    q = LevelPassQuery(2, tuple(c.record() for c in crit))
    return {
        "critical_points": [{"vertex": c.vertex, "value": jnum(c.value), "kind": c.kind, "index": c.index} for c in pl_critical_points(fld)],
        "below": {"level": jnum(lo), "homology": summaries(a, coeffs)},
        "above": {"level": jnum(hi), "homology": summaries(b, coeffs)},
        "equal_on_both_sides": not differing(a, b, coeffs),
        "verdict": verdict(q).to_dict(),
    }


def example_handles(coeffs) -> dict:
    out = []
    for ex in mech.handle_examples():
        checked(ex.before, ex.name)
        checked(ex.after, ex.name)
        rule = allowed_deltas(ex.k, ex.m)
        rows = {}
        for k in coeffs:
            if not k.is_field:
                continue
            hb, ha = homology(ex.before, k), homology(ex.after, k)
            j = {l: ha.betti_at(l) - hb.betti_at(l) for l in range(ex.m)}
            rows[str(k)] = {"j": {str(l): v for l, v in j.items()}, "allowed": rule.admits(j)}
        out.append({
            "name": ex.name,
            "m": ex.m,
            "k": ex.k,
            "before": summaries(ex.before, coeffs),
            "after": summaries(ex.after, coeffs),
            "deltas": rows,
            "rule": rule.to_dict(),
        })
    return {"handles": out}


def example_euler(coeffs) -> dict:
    out = []
    for e in (0, 1, 2, 3):
        ex = mech.euler_example(e)
        checked(ex.above, "bundle")
        checked(ex.below, "collapsed bundle")
        v = verdict(ex.query)
        out.append({
            "e": e,
            "fiber_order": format_order(ex.fiber_order),
            "below": summaries(ex.below, coeffs),
            "above": summaries(ex.above, coeffs),
            "differing_coefficients": differing(ex.below, ex.above, coeffs),
            "verdict": v.to_dict(),
        })
    return {"euler": out}


def example_lens(coeffs) -> dict:
    l4, p = mech.reference_complex("lens(4)"), mech.reference_complex("s2xs1")
    return {
        "lens(4)": summaries(l4, coeffs),
        "s2xs1": summaries(p, coeffs),
        "integral_H1": {"lens(4)": str(homology(l4, Z)), "s2xs1": str(homology(p, Z))},
        "distinguished_by_Z": homology(l4, Z) != homology(p, Z),
        "distinguished_by_F2_betti": homology(l4, Fp(2)).betti != homology(p, Fp(2)).betti,
    }


def example_pendulum(coeffs) -> dict:
    body, _ = cmd_sweep({"kind": "pendulum", "levels": ["0", "1", "2"]}, coeffs)
    verdicts, _ = cmd_verdict({"kind": "pendulum"}, coeffs)
    return {**body, **verdicts, "critical_values": [jnum(v) for v in mech.pendulum_critical_values()]}


def example_rtbp(coeffs) -> dict:
    scen = mech.rtbp_potential(0.2)
    table = sweep(scen.grid, scen.sweep_levels(), [CoefficientSpec("Q")], mode="sublevel")
    return {
        "mu": 0.2,
        "grid": {"n": len(scen.grid.axes[0]), "spacing": jnum(scen.grid.spacing[0])},
        "equilibria": rtbp_summary(scen),
        "b0": table.betti_column(0),
        "b1": table.betti_column(1),
        "sweep": table.to_dict(),
    }


def run_example(name: str, coeffs) -> dict:
    table = {
        "rp2-no-change": example_rp2,
        "handle-examples": example_handles,
        "pendulum": example_pendulum,
        "euler-trichotomy": example_euler,
        "lens-vs-s2xs1": example_lens,
        "rtbp": example_rtbp,
    }
    if name not in table:
        raise ConfigError(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}")
    return table[name](coeffs)


# -- entry point ---------------------------------------------------------------------------
def load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(p)
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc.msg})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("kind") not in KINDS:
        raise ConfigError(f"unknown kind {cfg.get('kind')!r}; expected one of {', '.join(KINDS)}")
    return cfg


def parse_coeffs(cli: list[str] | None, cfg: dict) -> list[CoefficientSpec]:
    raw = cli or cfg.get("coefficients") or list(DEFAULT_COEFFS)
    try:
        return [CoefficientSpec.parse(str(c)) for c in raw]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morse-levels", description="Homology of level sets across critical values.")
    ap.add_argument("subcommand", choices=("sweep", "verdict", "conformance", "example"))
    ap.add_argument("name", nargs="?", help="example name (for the example subcommand)")
    ap.add_argument("--config", help="scenario JSON file")
    ap.add_argument("--coeff", action="append", help="coefficients: Q, Fp:<p>, Z or Zk:<k> (repeatable)")
    ap.add_argument("--out", help="directory for report files")
    ap.add_argument("--csv", action="store_true", help="also emit sweep tables as CSV and gnuplot data")
    ap.add_argument("--timings", action="store_true", help="record wall-clock timings (makes reports non-reproducible)")
    return ap


def run(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    start = time.perf_counter()
    table = None
    cfg: dict = {}
    status = 0
    try:
        if args.subcommand == "example":
            name = args.name
            if name is None and args.config:
                cfg = load_config(args.config)
                name = cfg.get("example")
            if name is None:
                raise ConfigError(f"example needs a name: {', '.join(EXAMPLES)}")
            cfg = {**cfg, "example": name}
            coeffs = parse_coeffs(args.coeff, cfg)
            body = run_example(name, coeffs)
        else:
            cfg = load_config(args.config)
            coeffs = parse_coeffs(args.coeff, cfg)
            handler = {"sweep": cmd_sweep, "verdict": cmd_verdict, "conformance": cmd_conformance}[args.subcommand]
            try:
                body, table = handler(cfg, coeffs)
            except InvariantViolationWithReport as exc:
                body, status = exc.body, 3
                print(f"morse-levels: {exc}", file=sys.stderr)
    except FileNotFoundError as exc:
        print(f"morse-levels: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"morse-levels: invalid input: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"morse-levels: invariant violation: {exc}", file=sys.stderr)
        return 3

    report = {
        "schema": SCHEMA,
        "tool": f"morselevels {__version__}",
        "subcommand": args.subcommand,
        "inputs": cfg,
        "coefficients": [str(k) for k in coeffs],
        "result": body,
    }
    if args.timings:
        report["timings"] = {"total_seconds": round(time.perf_counter() - start, 3)}
    text = json.dumps(report, indent=2, sort_keys=True, default=jnum) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.subcommand}.json").write_text(text)
        if args.csv and table is not None:
            (out / f"{args.subcommand}.csv").write_text(table.to_csv())
            for k in table.coefficients:
                for l, data in table.gnuplot(k).items():
                    (out / f"{args.subcommand}_{k.replace(':', '')}_b{l}.dat").write_text(data)
    elif args.csv and table is not None:
        sys.stdout.write(table.to_csv())
    else:
        sys.stdout.write(text)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
