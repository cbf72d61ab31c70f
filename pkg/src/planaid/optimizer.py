"""Compile a planning instance plus scenario into a 0-1 program, solve, decode.

The program has one binary per (facility, location, period) triple, synergy
indicator columns linked by three row families, cumulative budget rows (unspent
budget carries forward), one activation row per facility, exclusion /
precedence rows, and scenario extras (required groups, co-location bans,
min-two-per-building). Choquet objectives linearize each pairwise min term
through an auxiliary column; negative pair weights additionally get one big-M
binary so the min is forced at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .lp import LinearProgram, SolveOptions, SolveReport, solve_milp
from .model import (
    Assignment,
    Capacity2Additive,
    ContributionVector,
    Plan,
    PlanningInstance,
    contribution,
    choquet_value,
)

__all__ = [
    "ScenarioError",
    "OptimizeError",
    "ObjectiveSpec",
    "ScenarioSpec",
    "AssembledModel",
    "Violation",
    "assemble",
    "optimize",
    "check_feasible",
    "evaluate_plan",
    "normalized_values",
    "period_breakdown",
    "weighted_breakdown",
]


class ScenarioError(ValueError):
    pass


class OptimizeError(RuntimeError):
    """Internal consistency failure: decoded plan disagrees with the solver."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Either a weight vector (weighted sum) or a 2-additive capacity.

    ``normalization`` carries per-criterion (lo, hi) min-max bounds when the
    weights/capacity were fitted on rescaled contributions; the same affine
    rescaling is then baked into the compiled objective.
    """

    kind: str  # "weighted-sum" | "choquet"
    weights: tuple[float, ...] | None = None
    capacity: Capacity2Additive | None = None
    normalization: tuple[tuple[float, float], ...] | None = None

    def validate(self, n_criteria: int, tol: float = 1e-9) -> None:
        if self.kind == "weighted-sum":
            if self.weights is None or len(self.weights) != n_criteria:
                raise ScenarioError("weighted-sum objective needs one weight per criterion")
            if any(w < 0 for w in self.weights):
                raise ScenarioError("weights must be nonnegative")
            if abs(sum(self.weights) - 1.0) > tol:
                raise ScenarioError(f"weights sum to {sum(self.weights)}, expected 1")
        elif self.kind == "choquet":
            if self.capacity is None or len(self.capacity.weights) != n_criteria:
                raise ScenarioError("choquet objective needs a capacity over the criteria")
            self.capacity.validate(tol)
        else:
            raise ScenarioError(f"unknown objective kind {self.kind!r}")
        if self.normalization is not None and len(self.normalization) != n_criteria:
            raise ScenarioError("normalization bounds must cover every criterion")


@dataclass(frozen=True)
class ScenarioSpec:
    """A resolved scenario: catalog ids for provenance plus the actual data."""

    budget_id: str
    budgets: tuple[int, ...]  # cents per period
    objective_id: str
    objective: ObjectiveSpec
    synergy: bool = True
    required_groups: tuple[tuple[str, ...], ...] = ()
    forbidden_pairs: tuple[tuple[str, str, str, str], ...] = ()
    min_two_per_building: bool = False
    extra_precedences: tuple[tuple[str, str], ...] = ()

    @property
    def id(self) -> str:
        tags = [self.budget_id, self.objective_id, "SG1" if self.synergy else "SG2"]
        if self.required_groups:
            tags.append("req:" + "+".join("|".join(g) for g in self.required_groups))
        if self.forbidden_pairs:
            tags.append("ban:%d" % len(self.forbidden_pairs))
        if self.min_two_per_building:
            tags.append("min2")
        if self.extra_precedences:
            tags.append("prec:%d" % len(self.extra_precedences))
        return ",".join(tags)

    def validate(self, instance: PlanningInstance) -> None:
        if len(self.budgets) != instance.periods:
            raise ScenarioError(
                f"budget schedule has {len(self.budgets)} periods, instance has {instance.periods}"
            )
        if any(b < 0 for b in self.budgets):
            raise ScenarioError("negative budget")
        self.objective.validate(len(instance.criteria))
        for group in self.required_groups:
            if not group:
                raise ScenarioError("empty required group")
            for f in group:
                instance.facility(f)
        for f1, l1, f2, l2 in self.forbidden_pairs:
            instance.facility(f1).option(l1)
            instance.facility(f2).option(l2)
        for earlier, later in self.extra_precedences:
            instance.facility(earlier)
            instance.facility(later)


@dataclass(frozen=True)
class Violation:
    family: str
    detail: str
    slack: float = 0.0


@dataclass
class AssembledModel:
    lp: LinearProgram
    instance: PlanningInstance
    scenario: ScenarioSpec
    x_index: dict[tuple[str, str, int], int]
    gamma_index: dict[tuple[int, int], int] = field(default_factory=dict)
    syn_var: int | None = None
    g_index: dict[int, int] = field(default_factory=dict)
    min_index: dict[tuple[int, int], int] = field(default_factory=dict)

    def decode(self, values: Sequence[float]) -> Plan:
        triples = [
            key for key, col in self.x_index.items() if values[col] > 0.5
        ]
        triples.sort()
        return Plan.of(triples, provenance=self.scenario.id)


def _norm_bounds(spec: ObjectiveSpec, j: int) -> tuple[float, float] | None:
    if spec.normalization is None:
        return None
    lo, hi = spec.normalization[j]
    return float(lo), float(hi)


def normalized_values(values: Sequence[float], spec: ObjectiveSpec) -> tuple[float, ...]:
    """Apply the objective's min-max rescaling; constant criteria map to 0."""
    if spec.normalization is None:
        return tuple(values)
    out = []
    for j, v in enumerate(values):
        lo, hi = spec.normalization[j]
        out.append((v - lo) / (hi - lo) if hi > lo else 0.0)
    return tuple(out)


def evaluate_plan(
    instance: PlanningInstance,
    plan: Plan,
    objective: ObjectiveSpec,
    include_synergies: bool = True,
) -> float:
    """Model-side value of a plan under an objective spec (used for decoding checks)."""
    g = contribution(instance, plan, include_synergies=include_synergies)
    vals = normalized_values(g.values, objective)
    if objective.kind == "weighted-sum":
        return sum(w * v for w, v in zip(objective.weights, vals))
    return choquet_value(ContributionVector(vals, g.synergy_flags), objective.capacity)


def assemble(instance: PlanningInstance, scenario: ScenarioSpec) -> AssembledModel:
    scenario.validate(instance)
    p_last = instance.periods - 1
    lp = LinearProgram("max", name=scenario.id)
    model = AssembledModel(lp=lp, instance=instance, scenario=scenario, x_index={})

    for spec in instance.facilities:
        for opt in spec.options:
            for t in range(instance.periods):
                col = lp.add_var(f"x[{spec.facility}|{opt.location}|{t}]", binary=True)
                model.x_index[(spec.facility, opt.location, t)] = col

    def placements(facility: str) -> list[int]:
        spec = instance.facility(facility)
        return [
            model.x_index[(facility, opt.location, t)]
            for opt in spec.options
            for t in range(instance.periods)
        ]

    # activation: each facility at most once
    for spec in instance.facilities:
        lp.add_constraint({c: 1.0 for c in placements(spec.facility)}, "<=", 1.0)

    # cumulative budgets: total spend by t bounded by budgets released by t
    for t in range(instance.periods):
        row: dict[int, float] = {}
        for spec in instance.facilities:
            for opt in spec.options:
                for tau in range(t + 1):
                    row[model.x_index[(spec.facility, opt.location, tau)]] = float(opt.cost)
        lp.add_constraint(row, "<=", float(sum(scenario.budgets[: t + 1])))

    # exclusions and scenario-level co-location bans
    for f1, l1, f2, l2 in instance.exclusions + scenario.forbidden_pairs:
        row = {model.x_index[(f1, l1, t)]: 1.0 for t in range(instance.periods)}
        for t in range(instance.periods):
            row[model.x_index[(f2, l2, t)]] = 1.0
        lp.add_constraint(row, "<=", 1.0)

    # precedences: later activated at t requires earlier activated strictly before t
    for earlier, later in instance.precedences + scenario.extra_precedences:
        earlier_opts = instance.facility(earlier).options
        for opt in instance.facility(later).options:
            for t in range(instance.periods):
                row = {model.x_index[(later, opt.location, t)]: 1.0}
                for eo in earlier_opts:
                    for tau in range(t):
                        row[model.x_index[(earlier, eo.location, tau)]] = -1.0
                lp.add_constraint(row, "<=", 0.0)

    # required groups: at least one member activated
    for group in scenario.required_groups:
        row = {}
        for f in group:
            for c in placements(f):
                row[c] = 1.0
        lp.add_constraint(row, ">=", 1.0)

    # min two functions per transformed building
    if scenario.min_two_per_building:
        by_building: dict[str, list[tuple[str, str]]] = {}
        for spec in instance.facilities:
            for opt in spec.options:
                if opt.building is not None:
                    by_building.setdefault(opt.building, []).append(
                        (spec.facility, opt.location)
                    )
        for members in by_building.values():
            for f, l in members:
                row = {model.x_index[(f, l, t)]: 1.0 for t in range(instance.periods)}
                for f2, l2 in members:
                    if f2 == f:
                        continue
                    for t in range(instance.periods):
                        row[model.x_index[(f2, l2, t)]] = row.get(
                            model.x_index[(f2, l2, t)], 0.0
                        ) - 1.0
                lp.add_constraint(row, "<=", 0.0)

    # synergy indicators: gamma[r, t] = 1 iff both anchors activated at tau <= t
    synergies = instance.synergies if scenario.synergy else ()
    for r, syn in enumerate(synergies):
        cols1 = [model.x_index[(syn.first[0], syn.first[1], tau)] for tau in range(instance.periods)]
        cols2 = [model.x_index[(syn.second[0], syn.second[1], tau)] for tau in range(instance.periods)]
        for t in range(instance.periods):
            gcol = lp.add_var(f"gamma[{r}|{t}]", lo=0.0, hi=1.0)
            model.gamma_index[(r, t)] = gcol
            row = {c: 1.0 for c in cols1[: t + 1]}
            for c in cols2[: t + 1]:
                row[c] = 1.0
            row[gcol] = -1.0
            lp.add_constraint(row, "<=", 1.0)  # both placed -> gamma >= 1
            row = {gcol: 1.0}
            for c in cols1[: t + 1]:
                row[c] = -1.0
            lp.add_constraint(row, "<=", 0.0)  # gamma <= first placed
            row = {gcol: 1.0}
            for c in cols2[: t + 1]:
                row[c] = -1.0
            lp.add_constraint(row, "<=", 0.0)  # gamma <= second placed

    # per-criterion contribution columns
    m = len(instance.criteria)
    raw_max = []
    for j in range(m):
        mx = sum(
            max(opt.evaluations[j] for opt in spec.options) * instance.accrual(0)
            for spec in instance.facilities
        )
        for r, syn in enumerate(synergies):
            e1 = instance.facility(syn.first[0]).option(syn.first[1]).evaluations[j]
            e2 = instance.facility(syn.second[0]).option(syn.second[1]).evaluations[j]
            mx += syn.boost * (e1 + e2) * sum(instance.discount[1:])
        raw_max.append(mx)

    g_lo, g_hi = [], []
    for j in range(m):
        bounds = _norm_bounds(scenario.objective, j)
        if bounds is None:
            lo_j, hi_j = 0.0, raw_max[j]
        else:
            lo, hi = bounds
            if hi > lo:
                lo_j = (0.0 - lo) / (hi - lo)
                hi_j = (raw_max[j] - lo) / (hi - lo)
            else:
                lo_j = hi_j = 0.0  # constant criterion under min-max: pinned to 0
        g_lo.append(lo_j)
        g_hi.append(hi_j)
        gcol = lp.add_var(f"g[{j}]", lo=lo_j, hi=max(lo_j, hi_j))
        model.g_index[j] = gcol
        row: dict[int, float] = {}
        for spec in instance.facilities:
            for opt in spec.options:
                y = opt.evaluations[j]
                if not y:
                    continue
                for tau in range(instance.periods):
                    w = instance.accrual(tau) * y
                    if w:
                        row[model.x_index[(spec.facility, opt.location, tau)]] = -w
        for r, syn in enumerate(synergies):
            e1 = instance.facility(syn.first[0]).option(syn.first[1]).evaluations[j]
            e2 = instance.facility(syn.second[0]).option(syn.second[1]).evaluations[j]
            bonus = syn.boost * (e1 + e2)
            if not bonus:
                continue
            for t in range(1, instance.periods):
                w = instance.discount[t] * bonus
                if w:
                    row[model.gamma_index[(r, t)]] = -w
        bounds = _norm_bounds(scenario.objective, j)
        if bounds is None:
            row[gcol] = 1.0
            lp.add_constraint(row, "=", 0.0)
        else:
            lo, hi = bounds
            if hi > lo:
                row[gcol] = hi - lo
                lp.add_constraint(row, "=", -lo)
            else:
                lp.add_constraint({gcol: 1.0}, "=", 0.0)

    objective_coefs: dict[int, float] = {}
    spec_obj = scenario.objective
    if spec_obj.kind == "weighted-sum":
        for j in range(m):
            if spec_obj.weights[j]:
                objective_coefs[model.g_index[j]] = spec_obj.weights[j]
    else:
        cap = spec_obj.capacity
        for j in range(m):
            if cap.weights[j]:
                objective_coefs[model.g_index[j]] = cap.weights[j]
        for (j, jp), w in sorted(cap.pair_weights.items()):
            if not w:
                continue
            lo_m = min(g_lo[j], g_lo[jp])
            hi_m = min(g_hi[j], g_hi[jp])
            mcol = lp.add_var(f"min[{j}|{jp}]", lo=lo_m, hi=max(lo_m, hi_m))
            model.min_index[(j, jp)] = mcol
            lp.add_constraint({mcol: 1.0, model.g_index[j]: -1.0}, "<=", 0.0)
            lp.add_constraint({mcol: 1.0, model.g_index[jp]: -1.0}, "<=", 0.0)
            if w < 0:
                big_m = max(g_hi[j], g_hi[jp]) - min(g_lo[j], g_lo[jp])
                sel = lp.add_var(f"minsel[{j}|{jp}]", binary=True)
                # sel = 0 forces min >= g_j, sel = 1 forces min >= g_j'
                lp.add_constraint(
                    {mcol: 1.0, model.g_index[j]: -1.0, sel: big_m}, ">=", 0.0
                )
                lp.add_constraint(
                    {mcol: 1.0, model.g_index[jp]: -1.0, sel: -big_m}, ">=", -big_m
                )
            objective_coefs[mcol] = w
        if cap.bonus_weights:
            if synergies:
                syn_col = lp.add_var("syn", lo=0.0, hi=1.0)
                model.syn_var = syn_col
                last = instance.periods - 1
                row = {syn_col: 1.0}
                for r in range(len(synergies)):
                    row[model.gamma_index[(r, last)]] = -1.0
                lp.add_constraint(row, "<=", 0.0)  # syn <= sum of realizations
                for r in range(len(synergies)):
                    lp.add_constraint(
                        {model.gamma_index[(r, last)]: 1.0, syn_col: -1.0}, "<=", 0.0
                    )
                objective_coefs[syn_col] = cap.bonus_weights[0]
            # without synergies the flag is identically 0: no column, no term

    lp.set_objective(objective_coefs)
    return model


def optimize(
    instance: PlanningInstance,
    scenario: ScenarioSpec,
    options: SolveOptions | None = None,
) -> tuple[Plan | None, SolveReport]:
    """Assemble, solve, decode and re-validate. Infeasible scenarios come back
    as (None, report); internal inconsistencies raise OptimizeError."""
    model = assemble(instance, scenario)
    report = solve_milp(model.lp, options or SolveOptions())
    if report.status != "optimal":
        return None, report
    plan = model.decode(report.values)
    violations = check_feasible(instance, scenario, plan)
    if violations:
        raise OptimizeError(f"decoded plan violates {violations[0].family}: {violations[0].detail}")
    value = evaluate_plan(instance, plan, scenario.objective, include_synergies=scenario.synergy)
    if abs(value - float(report.objective)) > 1e-6 * max(1.0, abs(value)):
        raise OptimizeError(
            f"objective drift: solver {float(report.objective)!r} vs evaluation {value!r}"
        )
    return plan, report


def check_feasible(
    instance: PlanningInstance, scenario: ScenarioSpec, plan: Plan
) -> list[Violation]:
    """Independent constraint audit; empty list iff the plan satisfies every family."""
    out: list[Violation] = []
    placed_fl = {}
    by_facility: dict[str, list[Assignment]] = {}
    for a in plan.assignments:
        by_facility.setdefault(a.facility, []).append(a)
    for f, assigns in by_facility.items():
        if len(assigns) > 1:
            out.append(Violation("activation", f"facility {f!r} activated {len(assigns)} times"))
    for a in plan.assignments:
        try:
            instance.facility(a.facility).option(a.location)
        except Exception as exc:
            out.append(Violation("structure", str(exc)))
            continue
        if not (0 <= a.period < instance.periods):
            out.append(
                Violation(
                    "structure",
                    f"({a.facility!r}, {a.location!r}, {a.period}) outside periods 0..{instance.periods - 1}",
                )
            )
            continue
        placed_fl[(a.facility, a.location)] = a.period

    # budgets, cumulative
    spend = [0] * instance.periods
    for a in plan.assignments:
        if (a.facility, a.location) in placed_fl and 0 <= a.period < instance.periods:
            spend[a.period] += instance.facility(a.facility).option(a.location).cost
    cum = 0
    cum_budget = 0
    for t in range(instance.periods):
        cum += spend[t]
        cum_budget += scenario.budgets[t]
        if cum > cum_budget:
            out.append(
                Violation(
                    "budget",
                    f"cumulative spend {cum} cents exceeds released budget {cum_budget} at period {t}",
                    slack=float(cum - cum_budget),
                )
            )

    for f1, l1, f2, l2 in instance.exclusions:
        if (f1, l1) in placed_fl and (f2, l2) in placed_fl:
            out.append(
                Violation("exclusion", f"({f1}@{l1}) and ({f2}@{l2}) are mutually exclusive")
            )
    for f1, l1, f2, l2 in scenario.forbidden_pairs:
        if (f1, l1) in placed_fl and (f2, l2) in placed_fl:
            out.append(
                Violation("forbidden", f"({f1}@{l1}) and ({f2}@{l2}) banned by the scenario")
            )

    activated = {a.facility: a.period for a in plan.assignments}
    for earlier, later in instance.precedences + scenario.extra_precedences:
        if later in activated:
            if earlier not in activated:
                out.append(
                    Violation("precedence", f"{later!r} requires {earlier!r} activated earlier")
                )
            elif activated[earlier] >= activated[later]:
                out.append(
                    Violation(
                        "precedence",
                        f"{earlier!r} at t{activated[earlier]} not before {later!r} at t{activated[later]}",
                    )
                )

    for group in scenario.required_groups:
        if not any(f in activated for f in group):
            out.append(Violation("required", f"none of {'/'.join(group)} activated"))

    if scenario.min_two_per_building:
        counts: dict[str, int] = {}
        for a in plan.assignments:
            b = instance.facility(a.facility).option(a.location).building
            if b is not None:
                counts[b] = counts.get(b, 0) + 1
        for b, k in sorted(counts.items()):
            if k < 2:
                out.append(
                    Violation("building", f"building {b!r} hosts {k} function, needs at least 2")
                )
    return out


def period_breakdown(
    instance: PlanningInstance, plan: Plan, *, include_synergies: bool = True
) -> tuple[tuple[float, ...], ...]:
    """Per-period, per-criterion contribution increments (period 0 is zeros).

    Entry [t][j] is v(t) times everything accruing to criterion j at t:
    evaluations of facilities activated strictly before t plus bonuses of
    synergies realized by t. Column sums equal contribution().values.
    """
    m = len(instance.criteria)
    rows = [[0.0] * m for _ in range(instance.periods)]
    for a in plan.assignments:
        evals = instance.facility(a.facility).option(a.location).evaluations
        for t in range(a.period + 1, instance.periods):
            v = instance.discount[t]
            for j in range(m):
                rows[t][j] += evals[j] * v
    if include_synergies:
        placed = {(a.facility, a.location): a.period for a in plan.assignments}
        for syn in instance.synergies:
            t1 = placed.get(syn.first)
            t2 = placed.get(syn.second)
            if t1 is None or t2 is None:
                continue
            e1 = instance.facility(syn.first[0]).option(syn.first[1]).evaluations
            e2 = instance.facility(syn.second[0]).option(syn.second[1]).evaluations
            for t in range(max(t1, t2, 1), instance.periods):
                v = instance.discount[t]
                for j in range(m):
                    rows[t][j] += syn.boost * (e1[j] + e2[j]) * v
    return tuple(tuple(r) for r in rows)


def weighted_breakdown(
    instance: PlanningInstance,
    plan: Plan,
    weights: Sequence[float],
    *,
    include_synergies: bool = True,
) -> tuple[float, ...]:
    """Collapse period_breakdown with criterion weights into one series."""
    rows = period_breakdown(instance, plan, include_synergies=include_synergies)
    return tuple(sum(w * v for w, v in zip(weights, row)) for row in rows)


def objective_to_json(spec: ObjectiveSpec) -> dict:
    doc: dict = {"kind": spec.kind}
    if spec.weights is not None:
        doc["weights"] = list(spec.weights)
    if spec.capacity is not None:
        doc["capacity"] = {
            "weights": list(spec.capacity.weights),
            "pairs": [[j, jp, w] for (j, jp), w in sorted(spec.capacity.pair_weights.items())],
            "bonus": list(spec.capacity.bonus_weights),
        }
    if spec.normalization is not None:
        doc["normalization"] = [list(b) for b in spec.normalization]
    return doc


def objective_from_json(doc) -> ObjectiveSpec:
    try:
        kind = doc["kind"]
        weights = tuple(float(w) for w in doc["weights"]) if "weights" in doc else None
        capacity = None
        if "capacity" in doc:
            cdoc = doc["capacity"]
            capacity = Capacity2Additive(
                weights=tuple(float(w) for w in cdoc["weights"]),
                pair_weights={(int(j), int(jp)): float(w) for j, jp, w in cdoc.get("pairs", [])},
                bonus_weights=tuple(float(w) for w in cdoc.get("bonus", [])),
            )
        normalization = (
            tuple((float(lo), float(hi)) for lo, hi in doc["normalization"])
            if doc.get("normalization") is not None
            else None
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed objective document: {exc}") from exc
    return ObjectiveSpec(kind=kind, weights=weights, capacity=capacity, normalization=normalization)
