"""Rules deciding whether level-set homology must differ across a critical value.

The engine answers, for a :class:`LevelPassQuery`, whether the homology of
the level set must change (``MUST_CHANGE``), is known to be able to stay the
same (``MAY_NOT_CHANGE``), or whether nothing can be said (``NO_RULE``).
Rule ids are stable strings used in reports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

RULE_LEVEL = "thm:level"
RULE_LEVEL2 = "thm:level2"
RULE_NOT_GLOBAL_MAX = "cor:not_global_maximum"
RULE_MANY_GLOBAL_MAX = "cor:many_global_maxima"
RULE_CLOSED_L1 = "thm:closed_manifold(1)"
RULE_CLOSED_L2 = "thm:closed_manifold(2)"
RULE_ADAMS = "prop:adams"

# fixed priority, first hit is the primary citation
RULE_ORDER = (
    RULE_LEVEL,
    RULE_LEVEL2,
    RULE_NOT_GLOBAL_MAX,
    RULE_MANY_GLOBAL_MAX,
    RULE_CLOSED_L1,
    RULE_CLOSED_L2,
    RULE_ADAMS,
)


class Outcome(str, Enum):
    MUST_CHANGE = "MUST_CHANGE"
    MAY_NOT_CHANGE = "MAY_NOT_CHANGE"
    NO_RULE = "NO_RULE"


@dataclass(frozen=True)
class CriticalPointRecord:
    """A critical point (or ``count`` symmetric copies) on one level.

    ``index`` may be ``None`` only for a degenerate point that was flagged
    but not classified.
    """

    value: float | Fraction
    index: int | None
    count: int = 1
    is_global_max_of_V: bool | None = None
    non_degenerate: bool = True
    label: str | None = None
    location: tuple | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be positive, got {self.count}")
        if self.index is None:
            if self.non_degenerate:
                raise ValueError("a nondegenerate critical point needs an index")
        elif self.index < 0:
            raise ValueError(f"index must be nonnegative, got {self.index}")

    def mirrored(self, m: int) -> "CriticalPointRecord":
        k = None if self.index is None else m - self.index
        return replace(self, value=-self.value, index=k)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = _num(self.value)
        if self.location is not None:
            d["location"] = [_num(x) for x in self.location]
        return d


@dataclass(frozen=True)
class BundleContext:
    """Rank ``n`` vector bundle over an ``n``-manifold carrying ``H = K + V∘π``."""

    rank: int
    base_closed: bool
    base_orientable: bool = True
    bundle_orientable: bool = True
    euler_number: int | None = None
    trivial_outside_disk: bool = False
    is_cotangent: bool = False

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("bundle rank must be positive")
        if self.euler_number is not None and not self.euler_defined:
            raise ValueError("Euler number needs a closed orientable base and an orientable bundle")

    @property
    def base_dim(self) -> int:
        return self.rank

    @property
    def euler_defined(self) -> bool:
        return self.base_closed and self.base_orientable and self.bundle_orientable

    @classmethod
    def cotangent(cls, n: int, euler_characteristic: int | None, *, closed: bool = True, orientable: bool = True):
        """Cotangent bundle: the Euler number is the Euler characteristic of the base."""
        e = euler_characteristic if closed and orientable else None
        return cls(n, closed, orientable, orientable, e, False, True)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LevelPassQuery:
    m: int
    points: tuple[CriticalPointRecord, ...]
    bundle: BundleContext | None = None
    assumptions_hold: bool = True

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.m < 1:
            raise ValueError(f"manifold dimension must be >= 1, got {self.m}")
        if not self.points:
            raise ValueError("a level pass needs at least one critical point")
        for p in self.points:
            if p.index is not None and not 0 <= p.index <= self.m:
                raise ValueError(f"index {p.index} out of range [0, {self.m}]")
        if self.bundle is not None and self.m != 2 * self.bundle.rank:
            raise ValueError(f"total space of a rank {self.bundle.rank} bundle has dimension {2 * self.bundle.rank}, not {self.m}")

    @property
    def total_points(self) -> int:
        return sum(p.count for p in self.points)

    def mirrored(self) -> "LevelPassQuery":
        """The same pass seen by ``-f``: every index ``k`` becomes ``m - k``."""
        return LevelPassQuery(self.m, tuple(p.mirrored(self.m) for p in self.points), self.bundle, self.assumptions_hold)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "points": [p.to_dict() for p in self.points],
            "bundle": None if self.bundle is None else self.bundle.to_dict(),
            "assumptions_hold": self.assumptions_hold,
        }


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    rule: str | None = None
    witness: str | None = None
    citations: tuple[str, ...] = ()
    reason: str | None = None

    def __post_init__(self):
        if self.outcome is Outcome.MUST_CHANGE and not self.rule:
            raise ValueError("MUST_CHANGE needs a rule citation")

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "rule": self.rule,
            "witness": self.witness,
            "citations": list(self.citations),
            "reason": self.reason,
        }


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


# -- index rules for a single nondegenerate critical point -----------------------
@dataclass(frozen=True)
class DeltaConstraint:
    """Allowed Betti changes ``j_l`` of the level set over a field.

    ``j_l`` may be nonzero only for ``l`` in ``dims``; the pair
    ``(j_tracked[0], j_tracked[1])`` must lie in ``pairs``.
    """

    k: int
    m: int
    dims: frozenset[int]
    tracked: tuple[int, int]
    pairs: frozenset[tuple[int, int]]

    def violations(self, deltas: Mapping[int, int]) -> list[str]:
        out = []
        for l, j in sorted(deltas.items()):
            if j and l not in self.dims:
                out.append(f"j_{l}={j} outside admissible dims {sorted(self.dims)}")
        pair = tuple(deltas.get(l, 0) for l in self.tracked)
        if pair not in self.pairs:
            out.append(f"(j_{self.tracked[0]}, j_{self.tracked[1]})={pair} not in {sorted(self.pairs)}")
        return out

    def admits(self, deltas: Mapping[int, int]) -> bool:
        return not self.violations(deltas)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "dims": sorted(self.dims),
            "tracked": list(self.tracked),
            "pairs": sorted(list(p) for p in self.pairs),
        }


def allowed_deltas(k: int, m: int) -> DeltaConstraint:
    """Constraint on level-set Betti changes when passing one index-``k`` point.

    For ``k > m/2`` the rule for ``m - k`` is applied to ``-f``, which walks
    the same levels downwards, so the allowed changes are negated.
    """
    if m < 1 or not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= m and m >= 1, got k={k}, m={m}")
    if 2 * k == m:
        raise ValueError("no constraint in the middle dimension k = m/2")
    kk = k if 2 * k < m else m - k
    dims = frozenset(l for l in (kk - 1, kk, m - kk - 1, m - kk, m - 2, m - 1) if l >= 0)
    pairs = {(0, 1)}
    if kk > 0:
        pairs.add((-1, 0))
    if 2 * kk == m - 1:
        pairs.add((0, 2))
    if kk != k:
        pairs = {(-a, -b) for a, b in pairs}
    return DeltaConstraint(k, m, dims, (kk - 1, kk), frozenset(pairs))


def maxima_delta_rule(is_global: bool) -> frozenset[int]:
    """Allowed change of ``b_{n-1}`` of the energy level when passing a maximum of ``V``."""
    return frozenset({-1, 0, 1}) if is_global else frozenset({-1})


# -- verdict engine -------------------------------------------------------------------
_HOPF = "Hopf"


def _perfect_morse_name(m: int) -> str:
    return {2: "RP2 perfect Morse", 4: "CP2 perfect Morse"}.get(m, f"RP{m} perfect Morse")


def verdict(q: LevelPassQuery) -> Verdict:
    """Run the rule cascade; every applicable rule is listed in ``citations``."""
    if not q.assumptions_hold:
        return Verdict(Outcome.NO_RULE, reason="Palais-Smale / finite generation assumptions not declared")
    if not all(p.non_degenerate for p in q.points):
        return Verdict(Outcome.NO_RULE, reason="degenerate critical point on the level")
    m = q.m
    indices = [p.index for p in q.points for _ in range(p.count)]
    fired: list[tuple[str, str | None]] = []

    if len(set(indices)) == 1 and 2 * indices[0] != m:
        fired.append((RULE_LEVEL, None))
    for pos, k in enumerate(indices):
        if 2 * k == m:
            continue
        others = indices[:pos] + indices[pos + 1:]
        if not any(o in (k - 1, k + 1, m - k) for o in others):
            fired.append((RULE_LEVEL2, None))
            break

    b = q.bundle
    no_change_witness = None
    undecided_reason = None
    if b is not None:
        total = q.total_points
        n_global = sum(p.count for p in q.points if p.is_global_max_of_V)
        all_global = all(p.is_global_max_of_V for p in q.points)
        if total == 1 and q.points[0].is_global_max_of_V is False:
            fired.append((RULE_NOT_GLOBAL_MAX, None))
        if n_global >= 3:
            fired.append((RULE_MANY_GLOBAL_MAX, None))
        e = b.euler_number
        if all_global and n_global in (1, 2) and (e is None or not b.euler_defined):
            undecided_reason = "Euler number unknown" if b.euler_defined else "Euler number undefined (base not closed or not orientable)"
        if all_global and n_global == 1 and e is not None and abs(e) != 1:
            fired.append((RULE_CLOSED_L1, f"Zk:{abs(e)}" if e else "R"))
        if all_global and n_global == 2 and e is not None and e != 0:
            fired.append((RULE_CLOSED_L2, "R"))
        if b.trivial_outside_disk and b.rank not in (2, 4, 8) and total == 1:
            fired.append((RULE_ADAMS, None))
        if all_global and n_global == 1 and e is not None and abs(e) == 1:
            no_change_witness = _HOPF
    elif q.total_points == 1 and 2 * indices[0] == m and m % 2 == 0:
        no_change_witness = _perfect_morse_name(m)

    if fired:
        fired.sort(key=lambda t: RULE_ORDER.index(t[0]))
        rule, witness = fired[0]
        return Verdict(Outcome.MUST_CHANGE, rule, witness, tuple(r for r, _ in fired))
    if no_change_witness:
        return Verdict(Outcome.MAY_NOT_CHANGE, witness=no_change_witness, reason="known example with equal homology on both sides")
    return Verdict(Outcome.NO_RULE, reason=undecided_reason or "no rule applies")


# -- conformance of computed sweeps -------------------------------------------------------
@dataclass
class JumpCheck:
    lo: float | Fraction
    hi: float | Fraction
    status: str  # ok | violation | exempt | skipped | misaligned | unchanged
    index: int | None = None
    deltas: dict[str, dict[int, int]] = field(default_factory=dict)
    problems: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lo": _num(self.lo),
            "hi": _num(self.hi),
            "status": self.status,
            "index": self.index,
            "deltas": {c: {str(l): j for l, j in d.items()} for c, d in self.deltas.items()},
            "problems": self.problems,
        }


@dataclass
class ConformanceReport:
    m: int
    checks: list[JumpCheck]

    @property
    def violations(self) -> list[JumpCheck]:
        return [c for c in self.checks if c.status == "violation"]

    @property
    def conformant(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"m": self.m, "conformant": self.conformant, "checks": [c.to_dict() for c in self.checks]}


def check_conformance(table, points: Sequence[CriticalPointRecord], m: int) -> ConformanceReport:
    """Compare each interval of a sweep against the single-point index rules.

    ``table`` is a sweep table of level sets; ``points`` are the critical
    points of the field, assigned to the level interval containing their
    value.  Only field coefficients are checked.
    """
    checks = []
    rows = table.rows
    for (a, sa), (b, sb) in zip(rows, rows[1:]):
        inside = [p for p in points if a < p.value < b]
        changed = any(sa[c] != sb[c] for c in sa)
        deltas = {
            c: {l: sb[c].betti_at(l) - sa[c].betti_at(l) for l in range(max(len(sa[c].betti), len(sb[c].betti)))}
            for c in sa
            if c == "Q" or c.startswith("Fp")
        }
        deltas = {c: {l: j for l, j in d.items() if j} for c, d in deltas.items()}
        if not inside:
            status = "misaligned" if changed else "unchanged"
            checks.append(JumpCheck(a, b, status, deltas=deltas, problems=["jump without a declared critical point"] if changed else []))
            continue
        if len(inside) > 1 or inside[0].count > 1:
            checks.append(JumpCheck(a, b, "skipped", deltas=deltas, problems=["several critical points in interval"]))
            continue
        p = inside[0]
        if not p.non_degenerate or p.index is None:
            checks.append(JumpCheck(a, b, "skipped", p.index, deltas, ["degenerate critical point"]))
            continue
        if 2 * p.index == m:
            checks.append(JumpCheck(a, b, "exempt", p.index, deltas))
            continue
        rule = allowed_deltas(p.index, m)
        problems = [f"{c}: {v}" for c, d in deltas.items() for v in rule.violations(d)]
        checks.append(JumpCheck(a, b, "violation" if problems else "ok", p.index, deltas, problems))
    return ConformanceReport(m, checks)


# -- middle dimension -----------------------------------------------------------------
class MiddleDimOutcome(str, Enum):
    DIFFERENT = "DIFFERENT"
    INCONCLUSIVE = "INCONCLUSIVE"


def middle_dim_criterion(u, z_a, z_b) -> tuple[MiddleDimOutcome, float | int, float | int]:
    """Compare the orders of the two attaching classes in ``H_{k-1}(U; Z)``.

    Different orders force different homology of the two levels; equal
    orders decide nothing.
    """
    from .homology import cycle_class_order

    oa, ob = cycle_class_order(u, z_a), cycle_class_order(u, z_b)
    outcome = MiddleDimOutcome.DIFFERENT if oa != ob else MiddleDimOutcome.INCONCLUSIVE
    return outcome, oa, ob


def format_order(o) -> str:
    return "inf" if o == math.inf else str(o)
