"""Domain types and pure evaluation functions shared across the toolkit.

Money is stored in integer cents; evaluations, discount factors and weights
are 64-bit floats. All types are immutable after construction and every
function here is pure, so concurrent reads are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

__all__ = [
    "InstanceError",
    "PlanError",
    "CapacityError",
    "LocationOption",
    "FacilitySpec",
    "SynergySpec",
    "PlanningInstance",
    "Assignment",
    "Plan",
    "ContributionVector",
    "Capacity2Additive",
    "contribution",
    "choquet_value",
    "choquet_value_sorted",
    "mobius_measure",
    "capacity_is_monotone",
    "capacity_is_monotone_exhaustive",
]


class InstanceError(ValueError):
    """Structurally invalid planning instance."""


class PlanError(ValueError):
    """Plan references entities that do not exist in the instance."""


class CapacityError(ValueError):
    """Capacity violates normalization or monotonicity."""


@dataclass(frozen=True)
class LocationOption:
    """One candidate location for a facility, with cost and evaluations."""

    location: str
    cost: int  # cents
    evaluations: tuple[float, ...]  # aligned with instance.criteria
    building: str | None = None


@dataclass(frozen=True)
class FacilitySpec:
    facility: str
    options: tuple[LocationOption, ...]
    label: str = ""

    def option(self, location: str) -> LocationOption:
        for opt in self.options:
            if opt.location == location:
                return opt
        raise PlanError(f"facility {self.facility!r} has no location {location!r}")


@dataclass(frozen=True)
class SynergySpec:
    """Bonus realized when both anchors are placed at the given locations.

    From the period in which the later anchor is activated onward, every
    accrual period gains boost * (y_first + y_second) on each criterion.
    """

    first: tuple[str, str]  # (facility, location)
    second: tuple[str, str]
    boost: float

    def __post_init__(self):
        if self.first[0] == self.second[0]:
            raise InstanceError(
                f"synergy anchors must name distinct facilities, got {self.first[0]!r} twice"
            )
        if self.boost < 0:
            raise InstanceError(f"synergy boost must be >= 0, got {self.boost}")


@dataclass(frozen=True)
class PlanningInstance:
    """Facilities, candidate locations, periods, money and logical couplings.

    Periods are indexed 0..p where ``periods == p + 1``. The discount factor
    v(t) must be non-increasing in t; contributions of an activation at tau
    accrue in the strictly later periods t = tau+1 .. p.
    """

    facilities: tuple[FacilitySpec, ...]
    criteria: tuple[str, ...]
    periods: int
    budgets: tuple[int, ...]  # cents per period, len == periods
    discount: tuple[float, ...]  # v(t), len == periods
    exclusions: tuple[tuple[str, str, str, str], ...] = ()
    precedences: tuple[tuple[str, str], ...] = ()  # (earlier, later)
    synergies: tuple[SynergySpec, ...] = ()

    def __post_init__(self):
        if self.periods < 1:
            raise InstanceError("need at least one period")
        if not self.facilities:
            raise InstanceError("instance has no facilities")
        seen = set()
        for spec in self.facilities:
            if spec.facility in seen:
                raise InstanceError(f"duplicate facility id {spec.facility!r}")
            seen.add(spec.facility)
            if not spec.options:
                raise InstanceError(f"facility {spec.facility!r} has no candidate location")
            locs = set()
            for opt in spec.options:
                if opt.location in locs:
                    raise InstanceError(
                        f"facility {spec.facility!r} lists location {opt.location!r} twice"
                    )
                locs.add(opt.location)
                if opt.cost < 0:
                    raise InstanceError(f"negative cost for {spec.facility!r}@{opt.location!r}")
                if len(opt.evaluations) != len(self.criteria):
                    raise InstanceError(
                        f"{spec.facility!r}@{opt.location!r} has {len(opt.evaluations)} "
                        f"evaluations for {len(self.criteria)} criteria"
                    )
                if any(y < 0 for y in opt.evaluations):
                    raise InstanceError(
                        f"negative evaluation for {spec.facility!r}@{opt.location!r}"
                    )
        if len(self.budgets) != self.periods:
            raise InstanceError(f"expected {self.periods} budget entries, got {len(self.budgets)}")
        if any(b < 0 for b in self.budgets):
            raise InstanceError("negative budget")
        if len(self.discount) != self.periods:
            raise InstanceError(
                f"expected {self.periods} discount factors, got {len(self.discount)}"
            )
        for t, v in enumerate(self.discount):
            if not (0.0 <= v <= 1.0):
                raise InstanceError(f"discount v({t})={v} outside [0, 1]")
            if t and v > self.discount[t - 1]:
                raise InstanceError("discount factors must be non-increasing")
        for exc in self.exclusions:
            f1, l1, f2, l2 = exc
            self.facility(f1).option(l1)
            self.facility(f2).option(l2)
        for earlier, later in self.precedences:
            self.facility(earlier)
            self.facility(later)
            if earlier == later:
                raise InstanceError(f"facility {earlier!r} cannot precede itself")
        for syn in self.synergies:
            self.facility(syn.first[0]).option(syn.first[1])
            self.facility(syn.second[0]).option(syn.second[1])

    def facility(self, facility_id: str) -> FacilitySpec:
        for spec in self.facilities:
            if spec.facility == facility_id:
                return spec
        raise PlanError(f"unknown facility {facility_id!r}")

    def evaluation(self, facility_id: str, location: str, criterion: int) -> float:
        return self.facility(facility_id).option(location).evaluations[criterion]

    def accrual(self, activation_period: int) -> float:
        """Total discount weight collected by an activation at the given period."""
        return sum(self.discount[activation_period + 1 :])


@dataclass(frozen=True, order=True)
class Assignment:
    facility: str
    location: str
    period: int


@dataclass(frozen=True)
class Plan:
    """A sparse 0-1 plan: which facility goes where, activated when."""

    assignments: tuple[Assignment, ...]
    provenance: str = "manual"

    @staticmethod
    def of(triples: Iterable[tuple[str, str, int]], provenance: str = "manual") -> "Plan":
        return Plan(tuple(Assignment(f, l, t) for f, l, t in triples), provenance)

    def key(self) -> frozenset[tuple[str, str, int]]:
        return frozenset((a.facility, a.location, a.period) for a in self.assignments)

    def assignment_for(self, facility_id: str) -> Assignment | None:
        for a in self.assignments:
            if a.facility == facility_id:
                return a
        return None


@dataclass(frozen=True)
class ContributionVector:
    """Per-criterion discounted contributions plus per-synergy realization flags."""

    values: tuple[float, ...]
    synergy_flags: tuple[int, ...] = ()

    @property
    def syn(self) -> int:
        return 1 if any(self.synergy_flags) else 0

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Capacity2Additive:
    """Mobius coefficients of a 2-additive capacity, plus optional bonus weights.

    ``pair_weights`` maps unordered criterion index pairs (j, j') with j < j'.
    ``bonus_weights`` are standalone binary criteria (the plan-level synergy
    flag in practice); they take part in the normalization but not in the
    capacity monotonicity conditions.
    """

    weights: tuple[float, ...]
    pair_weights: Mapping[tuple[int, int], float] = field(default_factory=dict)
    bonus_weights: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pair_weights", dict(self.pair_weights))
        m = len(self.weights)
        for (j, jp), w in self.pair_weights.items():
            if not (0 <= j < jp < m):
                raise CapacityError(f"pair index ({j}, {jp}) out of range for {m} criteria")

    def pair(self, j: int, jp: int) -> float:
        if j > jp:
            j, jp = jp, j
        return self.pair_weights.get((j, jp), 0.0)

    def validate(self, tol: float = 1e-9) -> None:
        total = sum(self.weights) + sum(self.pair_weights.values()) + sum(self.bonus_weights)
        if abs(total - 1.0) > tol:
            raise CapacityError(f"capacity coefficients sum to {total!r}, expected 1")
        if any(w < -tol for w in self.weights):
            raise CapacityError("singleton weights must be >= 0")
        if any(w < -tol for w in self.bonus_weights):
            raise CapacityError("bonus weights must be >= 0")
        if not capacity_is_monotone(self, tol):
            raise CapacityError("capacity violates 2-additive monotonicity")


def capacity_is_monotone(cap: Capacity2Additive, tol: float = 1e-9) -> bool:
    """Reduced monotonicity check: w_j plus all negative pair weights touching j.

    Equivalent to quantifying over every subset T of the other criteria; the
    worst T is exactly the set of negative partners.
    """
    m = len(cap.weights)
    for j in range(m):
        neg = sum(min(0.0, cap.pair(j, jp)) for jp in range(m) if jp != j)
        if cap.weights[j] + neg < -tol:
            return False
    return True


def capacity_is_monotone_exhaustive(cap: Capacity2Additive, tol: float = 1e-9) -> bool:
    """Literal subset enumeration; only sensible for small m (tests use m <= 6)."""
    m = len(cap.weights)
    others = range(m)
    for j in range(m):
        rest = [jp for jp in others if jp != j]
        for mask in range(1, 1 << len(rest)):
            s = sum(cap.pair(j, rest[i]) for i in range(len(rest)) if mask >> i & 1)
            if cap.weights[j] + s < -tol:
                return False
    return True


def mobius_measure(cap: Capacity2Additive, subset: Iterable[int]) -> float:
    """mu(A) = sum of singleton weights in A plus pair weights inside A."""
    idx = sorted(set(subset))
    total = sum(cap.weights[j] for j in idx)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            total += cap.pair(idx[a], idx[b])
    return total


def _values_and_flags(g, cap: Capacity2Additive) -> tuple[Sequence[float], Sequence[int]]:
    if isinstance(g, ContributionVector):
        values, flags = g.values, (g.syn,) if g.synergy_flags or cap.bonus_weights else ()
        if cap.bonus_weights and not flags:
            flags = (0,)
    else:
        values, flags = tuple(g), (0,) * len(cap.bonus_weights)
    if len(values) != len(cap.weights):
        raise CapacityError(
            f"contribution vector has {len(values)} criteria, capacity has {len(cap.weights)}"
        )
    if len(cap.bonus_weights) > len(flags):
        raise CapacityError(
            f"capacity carries {len(cap.bonus_weights)} bonus weights, "
            f"contribution vector provides {len(flags)} flags"
        )
    return values, flags


def choquet_value(g, cap: Capacity2Additive) -> float:
    """Mobius form: sum w_j g_j + sum w_jj' min(g_j, g_j') + bonus terms."""
    values, flags = _values_and_flags(g, cap)
    total = sum(w * v for w, v in zip(cap.weights, values))
    for (j, jp), w in cap.pair_weights.items():
        if w:
            total += w * min(values[j], values[jp])
    total += sum(w * f for w, f in zip(cap.bonus_weights, flags))
    return total


def choquet_value_sorted(g, cap: Capacity2Additive) -> float:
    """Telescoping form over sorted contributions; must agree with choquet_value.

    Restricted to genuine criteria: capacities with bonus weights are rejected
    because the standalone flags do not take part in the ordering.
    """
    if cap.bonus_weights:
        raise CapacityError("sorted form is only defined without bonus weights")
    values = g.values if isinstance(g, ContributionVector) else tuple(g)
    if len(values) != len(cap.weights):
        raise CapacityError(
            f"contribution vector has {len(values)} criteria, capacity has {len(cap.weights)}"
        )
    order = sorted(range(len(values)), key=lambda j: values[j])
    total = 0.0
    prev = 0.0
    for j in order:
        level = values[j]
        upper = [h for h in range(len(values)) if values[h] >= level]
        total += mobius_measure(cap, upper) * (level - prev)
        prev = level
    return total


def contribution(
    instance: PlanningInstance, plan: Plan, *, include_synergies: bool = True
) -> ContributionVector:
    """Discounted per-criterion contribution of a plan, synergy bonuses included.

    An activation at tau accrues y * v(t) for every t in tau+1 .. p. A synergy
    accrues its bonus for every t >= 1 at which both anchors are already
    activated (activation periods <= t). ``include_synergies=False`` evaluates
    the plan as if the instance declared no synergies.
    """
    _validate_plan_structure(instance, plan)
    m = len(instance.criteria)
    totals = [0.0] * m
    for a in plan.assignments:
        weight = instance.accrual(a.period)
        if weight:
            evals = instance.facility(a.facility).option(a.location).evaluations
            for j in range(m):
                totals[j] += evals[j] * weight
    if not include_synergies:
        return ContributionVector(tuple(totals), ())
    flags = []
    placed = {(a.facility, a.location): a.period for a in plan.assignments}
    for syn in instance.synergies:
        t1 = placed.get(syn.first)
        t2 = placed.get(syn.second)
        if t1 is None or t2 is None:
            flags.append(0)
            continue
        flags.append(1)
        start = max(t1, t2, 1)
        weight = sum(instance.discount[start:])
        if weight:
            e1 = instance.facility(syn.first[0]).option(syn.first[1]).evaluations
            e2 = instance.facility(syn.second[0]).option(syn.second[1]).evaluations
            for j in range(m):
                totals[j] += syn.boost * (e1[j] + e2[j]) * weight
    return ContributionVector(tuple(totals), tuple(flags))


def _validate_plan_structure(instance: PlanningInstance, plan: Plan) -> None:
    seen = set()
    for a in plan.assignments:
        spec = instance.facility(a.facility)  # raises PlanError on unknown facility
        spec.option(a.location)
        if not (0 <= a.period < instance.periods):
            raise PlanError(
                f"assignment ({a.facility!r}, {a.location!r}, {a.period}) "
                f"has period outside 0..{instance.periods - 1}"
            )
        if a.facility in seen:
            raise PlanError(f"facility {a.facility!r} assigned more than once")
        seen.add(a.facility)
