"""Iterative elicitation sessions: generate plans, collect rankings, fit, repeat.

A session owns the instance, catalogs of budget schedules and objective specs,
and an ordered list of iterations. Every mutation appends one event to a JSON
Lines log (when the session is file-backed) and the log can be replayed:
re-executing the recorded commands must reproduce every recorded score table
and fitted total error, which the replay verifies.

Mutations are serialized through a per-session lock; converged sessions reject
further mutations.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import instanceio
from .cards import CardRanking, RankingError, ScoreTable, merge, score
from .fitting import FitItem, FitRequest, RegressionResult, fit
from .instanceio import InstanceDocument, plan_from_json, plan_to_json
from .lp import SolveOptions
from .model import Capacity2Additive, Plan, contribution
from .optimizer import (
    ObjectiveSpec,
    ScenarioSpec,
    check_feasible,
    evaluate_plan,
    objective_from_json,
    objective_to_json,
    optimize,
)

__all__ = [
    "SessionError",
    "ReplayError",
    "GridCell",
    "GeneratedPlan",
    "Iteration",
    "Session",
]


class SessionError(RuntimeError):
    pass


class ReplayError(RuntimeError):
    """Replaying an event log produced results that differ from the record."""


@dataclass(frozen=True)
class GridCell:
    """One scenario of a generation grid, by catalog ids plus extras."""

    budget: str
    objective: str
    synergy: bool = True
    required: tuple[tuple[str, ...], ...] = ()
    forbidden: tuple[tuple[str, str, str, str], ...] = ()
    min_two_per_building: bool = False
    precedences: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        doc: dict = {"budget": self.budget, "objective": self.objective, "synergy": self.synergy}
        if self.required:
            doc["required"] = [list(g) for g in self.required]
        if self.forbidden:
            doc["forbidden"] = [list(p) for p in self.forbidden]
        if self.min_two_per_building:
            doc["min_two_per_building"] = True
        if self.precedences:
            doc["precedences"] = [list(p) for p in self.precedences]
        return doc

    @staticmethod
    def from_json(doc: Mapping) -> "GridCell":
        return GridCell(
            budget=str(doc["budget"]),
            objective=str(doc["objective"]),
            synergy=bool(doc.get("synergy", True)),
            required=tuple(tuple(g) for g in doc.get("required", [])),
            forbidden=tuple(tuple(p) for p in doc.get("forbidden", [])),
            min_two_per_building=bool(doc.get("min_two_per_building", False)),
            precedences=tuple(tuple(p) for p in doc.get("precedences", [])),
        )


@dataclass
class GeneratedPlan:
    plan_id: str
    plan: Plan
    provenance: list[str]  # scenario ids, merged on dedup
    objective_values: dict[str, float]  # scenario id -> value under that objective
    cells: list[dict] = field(default_factory=list)  # originating grid cells, JSON form


@dataclass
class Iteration:
    index: int
    plans: list[GeneratedPlan] = field(default_factory=list)
    curated: list[str] | None = None
    rankings: dict[str, CardRanking] = field(default_factory=dict)
    scores: dict[str, ScoreTable] = field(default_factory=dict)
    fits: dict[str, RegressionResult] = field(default_factory=dict)
    comments: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def plan_ids(self) -> list[str]:
        return [gp.plan_id for gp in self.plans]

    def curated_plans(self) -> list[GeneratedPlan]:
        if self.curated is None:
            return list(self.plans)
        by_id = {gp.plan_id: gp for gp in self.plans}
        return [by_id[i] for i in self.curated]


class Session:
    """One decision-aiding session over a fixed instance."""

    def __init__(
        self,
        document: InstanceDocument,
        objectives: Mapping[str, ObjectiveSpec],
        log_path=None,
        solve_options: SolveOptions | None = None,
    ):
        self.document = document
        self.instance = document.instance
        self.objectives: dict[str, ObjectiveSpec] = dict(objectives)
        self.iterations: list[Iteration] = []
        self.status = "structuring"
        self.accepted: str | None = None
        self.log_path = log_path
        self.solve_options = solve_options or SolveOptions()
        self._lock = threading.RLock()
        self._plan_seq = 0
        for name, spec in self.objectives.items():
            spec.validate(len(self.instance.criteria))

    # -- construction and persistence ---------------------------------------

    @classmethod
    def create(
        cls,
        document: InstanceDocument,
        objectives: Mapping[str, ObjectiveSpec],
        log_path=None,
        solve_options: SolveOptions | None = None,
    ) -> "Session":
        session = cls(document, objectives, log_path, solve_options)
        session._append(
            "init",
            {
                "instance": session._instance_doc_json(),
                "objectives": {k: objective_to_json(v) for k, v in objectives.items()},
            },
        )
        return session

    def _instance_doc_json(self) -> dict:
        # round-trip the parsed document so the log is self-contained
        inst = self.instance
        return {
            "name": self.document.name,
            "criteria": list(inst.criteria),
            "periods": inst.periods,
            "discount": {"factors": list(inst.discount)},
            "budgets": {
                k: [instanceio.money_str(c) for c in v] for k, v in self.document.budgets.items()
            },
            "facilities": [
                {
                    "id": f.facility,
                    "label": f.label,
                    "locations": [
                        {
                            "id": o.location,
                            "cost": instanceio.money_str(o.cost),
                            **({"building": o.building} if o.building else {}),
                            "evaluations": {
                                c: o.evaluations[j] for j, c in enumerate(inst.criteria)
                            },
                        }
                        for o in f.options
                    ],
                }
                for f in inst.facilities
            ],
            "exclusions": [list(e) for e in inst.exclusions],
            "precedences": [list(p) for p in inst.precedences],
            "synergies": [
                {"first": list(s.first), "second": list(s.second), "boost": s.boost}
                for s in inst.synergies
            ],
        }

    def _append(self, event: str, payload: dict) -> None:
        if self.log_path is None:
            return
        record = {"event": event, "ts": time.strftime("%Y-%m-%dT%H:%M:%S"), **payload}
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- guards --------------------------------------------------------------

    def _mutable(self) -> None:
        if self.status == "converged":
            raise SessionError("session is converged and rejects further mutations")

    def _iteration(self, index: int) -> Iteration:
        for it in self.iterations:
            if it.index == index:
                return it
        raise SessionError(f"no iteration {index}")

    def known_plan(self, plan_id: str, up_to: int | None = None) -> GeneratedPlan:
        for it in self.iterations:
            if up_to is not None and it.index > up_to:
                continue
            for gp in it.plans:
                if gp.plan_id == plan_id:
                    return gp
        raise SessionError(f"unknown plan id {plan_id!r}")

    def resolve_cell(self, cell: GridCell) -> ScenarioSpec:
        if cell.objective not in self.objectives:
            raise SessionError(
                f"unknown objective {cell.objective!r}; have {sorted(self.objectives)}"
            )
        return ScenarioSpec(
            budget_id=cell.budget,
            budgets=self.document.schedule(cell.budget),
            objective_id=cell.objective,
            objective=self.objectives[cell.objective],
            synergy=cell.synergy,
            required_groups=cell.required,
            forbidden_pairs=cell.forbidden,
            min_two_per_building=cell.min_two_per_building,
            extra_precedences=cell.precedences,
        )

    # -- the four loop operations --------------------------------------------

    def generate(self, grid: Sequence[GridCell], _expect: dict | None = None) -> Iteration:
        """One optimize per grid cell; identical assignment sets collapse."""
        with self._lock:
            self._mutable()
            if not grid:
                raise SessionError("empty scenario grid")
            iteration = Iteration(index=len(self.iterations) + 1)
            by_key: dict[frozenset, GeneratedPlan] = {}
            for cell in grid:
                scenario = self.resolve_cell(cell)
                plan, report = optimize(self.instance, scenario, self.solve_options)
                if plan is None:
                    iteration.warnings.append(f"scenario {scenario.id} is {report.status}")
                    continue
                violations = check_feasible(self.instance, scenario, plan)
                if violations:
                    raise SessionError(f"generated plan violates {violations[0].detail}")
                value = evaluate_plan(
                    self.instance, plan, scenario.objective, include_synergies=scenario.synergy
                )
                key = plan.key()
                if key in by_key:
                    by_key[key].provenance.append(scenario.id)
                    by_key[key].objective_values[scenario.id] = value
                    by_key[key].cells.append(cell.to_json())
                else:
                    self._plan_seq += 1
                    gp = GeneratedPlan(
                        plan_id=f"x{self._plan_seq}",
                        plan=plan,
                        provenance=[scenario.id],
                        objective_values={scenario.id: value},
                        cells=[cell.to_json()],
                    )
                    by_key[key] = gp
                    iteration.plans.append(gp)
            if not iteration.plans:
                iteration.warnings.append("all scenarios in the grid were infeasible")
            self.iterations.append(iteration)
            self.status = "awaiting-ranking"
            result = {
                "plans": [
                    {
                        "id": gp.plan_id,
                        "plan": plan_to_json(gp.plan),
                        "provenance": list(gp.provenance),
                        "objective_values": dict(gp.objective_values),
                        "cells": list(gp.cells),
                    }
                    for gp in iteration.plans
                ],
                "warnings": list(iteration.warnings),
            }
            if _expect is not None and _expect != result:
                raise ReplayError(f"generate(iteration {iteration.index}) diverged from the log")
            self._append(
                "generate",
                {
                    "iteration": iteration.index,
                    "grid": [c.to_json() for c in grid],
                    "result": result,
                },
            )
            return iteration

    def import_plans(self, plans: Mapping[str, Plan], iteration: int | None = None) -> Iteration:
        """Register externally supplied (manual) plans as an iteration's plan set."""
        with self._lock:
            self._mutable()
            if iteration is None:
                it = Iteration(index=len(self.iterations) + 1)
                self.iterations.append(it)
            else:
                it = self._iteration(iteration)
            existing = {gp.plan_id for i2 in self.iterations for gp in i2.plans}
            for plan_id, plan in plans.items():
                if plan_id in existing:
                    raise SessionError(f"plan id {plan_id!r} already present")
                if plan_id.startswith("x") and plan_id[1:].isdigit():
                    self._plan_seq = max(self._plan_seq, int(plan_id[1:]))
                it.plans.append(
                    GeneratedPlan(plan_id=plan_id, plan=plan, provenance=["manual"], objective_values={})
                )
            self.status = "awaiting-ranking"
            self._append(
                "import",
                {
                    "iteration": it.index,
                    "plans": [
                        {"id": pid, "plan": plan_to_json(p)} for pid, p in plans.items()
                    ],
                },
            )
            return it

    def curate(self, iteration: int, plan_ids: Sequence[str]) -> None:
        """Mark which deduplicated plans go to the decision maker."""
        with self._lock:
            self._mutable()
            it = self._iteration(iteration)
            known = set(it.plan_ids())
            missing = [p for p in plan_ids if p not in known]
            if missing:
                raise SessionError(f"cannot curate unknown plans {missing}")
            it.curated = list(dict.fromkeys(plan_ids))
            self._append("curate", {"iteration": iteration, "plans": it.curated})

    def comment(self, iteration: int, text: str) -> None:
        with self._lock:
            self._mutable()
            self._iteration(iteration).comments.append(text)
            self._append("comment", {"iteration": iteration, "text": text})

    def submit_ranking(
        self,
        iteration: int,
        rankings: Mapping[str, CardRanking],
        merges: Sequence[Mapping] = (),
        _expect: dict | None = None,
    ) -> dict[str, ScoreTable]:
        """Score the named rankings (plus bridge merges); resubmission replaces."""
        with self._lock:
            self._mutable()
            it = self._iteration(iteration)
            all_rankings = dict(rankings)
            for m in merges:
                try:
                    merged = merge(
                        all_rankings[m["lower"]], all_rankings[m["upper"]], int(m["bridge"])
                    )
                except KeyError as exc:
                    raise SessionError(f"merge references unknown ranking {exc}") from exc
                all_rankings[str(m["name"])] = merged
            for name, ranking in all_rankings.items():
                for item in ranking.items:
                    self.known_plan(item, up_to=iteration)
            tables = {name: score(r) for name, r in all_rankings.items()}
            it.rankings = all_rankings
            it.scores = tables
            result = {"scores": {name: t.to_json() for name, t in tables.items()}}
            if _expect is not None and _expect != result:
                raise ReplayError(f"submit_ranking(iteration {iteration}) diverged from the log")
            self._append(
                "rank",
                {
                    "iteration": iteration,
                    "rankings": {n: r.to_json() for n, r in rankings.items()},
                    "merges": [dict(m) for m in merges],
                    "result": result,
                },
            )
            return tables

    def fit_scores(
        self,
        iteration: int,
        requests: Sequence[Mapping],
        _expect: dict | None = None,
    ) -> dict[str, RegressionResult]:
        """Run regression fits against stored score tables.

        Each request names a score table and a family and may ask for min-max
        normalization over the iteration's curated plans, a syn column, and
        registration of the fitted parameters as a new objective spec.
        """
        with self._lock:
            self._mutable()
            if not requests:
                raise SessionError("nothing to advance: empty fit-request list")
            it = self._iteration(iteration)
            results: dict[str, RegressionResult] = {}
            registered: dict[str, str] = {}
            for spec in requests:
                name = str(spec.get("name") or spec["score_table"])
                table_name = str(spec["score_table"])
                if table_name not in it.scores:
                    raise SessionError(f"no score table {table_name!r} on iteration {iteration}")
                table = it.scores[table_name]
                use_syn = bool(spec.get("syn", False))
                normalize = str(spec.get("normalize", "none"))
                pool = it.curated_plans()
                bounds = None
                if normalize == "min-max":
                    vectors = [
                        contribution(self.instance, gp.plan).values for gp in pool
                    ]
                    bounds = tuple(
                        (min(v[j] for v in vectors), max(v[j] for v in vectors))
                        for j in range(len(self.instance.criteria))
                    )
                items = []
                for item_id in table.scores:
                    gp = self.known_plan(item_id, up_to=iteration)
                    g = contribution(self.instance, gp.plan)
                    items.append(
                        FitItem(
                            item=item_id,
                            contributions=g.values,
                            syn=g.syn if use_syn else None,
                        )
                    )
                request = FitRequest(
                    items=tuple(items),
                    scores=dict(table.scores),
                    family=str(spec.get("family", "choquet-2additive")),
                    breakpoints=(
                        tuple(tuple(float(x) for x in bp) for bp in spec["breakpoints"])
                        if spec.get("breakpoints")
                        else None
                    ),
                    total_value=float(spec.get("total_value", 1.0)),
                    scaling=str(spec.get("scaling", "multiplicative")),
                    bounds=bounds,
                )
                result = fit(request)
                results[name] = result
                it.fits[name] = result
                register_as = spec.get("register_as")
                if register_as:
                    self.objectives[str(register_as)] = self._objective_from_fit(result)
                    registered[name] = str(register_as)
            self.status = "fitted"
            result_doc = {
                "fits": {n: r.to_json() for n, r in results.items()},
                "registered": {
                    n: {"id": oid, "objective": objective_to_json(self.objectives[oid])}
                    for n, oid in registered.items()
                },
            }
            if _expect is not None and _expect != result_doc:
                raise ReplayError(f"fit(iteration {iteration}) diverged from the log")
            self._append(
                "fit",
                {
                    "iteration": iteration,
                    "requests": [dict(s) for s in requests],
                    "result": result_doc,
                },
            )
            return results

    def _objective_from_fit(self, result: RegressionResult) -> ObjectiveSpec:
        if result.capacity is not None:
            spec = ObjectiveSpec(
                kind="choquet", capacity=result.capacity, normalization=result.normalization
            )
        elif result.weights is not None:
            if result.bonus:
                # a weight vector plus syn bonus is an additive capacity with a bonus term
                cap = Capacity2Additive(
                    weights=result.weights, bonus_weights=(result.bonus,)
                )
                spec = ObjectiveSpec(
                    kind="choquet", capacity=cap, normalization=result.normalization
                )
            else:
                spec = ObjectiveSpec(
                    kind="weighted-sum", weights=result.weights, normalization=result.normalization
                )
        else:
            raise SessionError("piecewise fits are not registrable as optimizer objectives")
        spec.validate(len(self.instance.criteria))
        return spec

    def fit_and_advance(
        self,
        iteration: int,
        requests: Sequence[Mapping],
        next_grid: Sequence[GridCell],
    ) -> Iteration:
        """Fit value functions, register them, generate the next round of plans."""
        self.fit_scores(iteration, requests)
        return self.generate(next_grid)

    def accept(self, plan_id: str) -> None:
        with self._lock:
            self._mutable()
            self.known_plan(plan_id)
            self.accepted = plan_id
            self.status = "converged"
            self._append("accept", {"plan": plan_id})

    # -- replay ---------------------------------------------------------------

    @classmethod
    def replay(cls, log_path, verify: bool = True, solve_options: SolveOptions | None = None) -> "Session":
        """Re-execute a persisted command log; with verify, recorded results must match."""
        with open(log_path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        if not events or events[0]["event"] != "init":
            raise ReplayError("log does not start with an init event")
        head = events[0]
        document = instanceio.load_instance_document(head["instance"])
        objectives = {k: objective_from_json(v) for k, v in head["objectives"].items()}
        session = cls(document, objectives, log_path=None, solve_options=solve_options)
        for ev in events[1:]:
            kind = ev["event"]
            if kind == "generate":
                session.generate(
                    [GridCell.from_json(c) for c in ev["grid"]],
                    _expect=ev["result"] if verify else None,
                )
            elif kind == "import":
                session.import_plans(
                    {p["id"]: plan_from_json(p["plan"]) for p in ev["plans"]},
                    iteration=None if ev["iteration"] > len(session.iterations) else ev["iteration"],
                )
            elif kind == "curate":
                session.curate(ev["iteration"], ev["plans"])
            elif kind == "comment":
                session.comment(ev["iteration"], ev["text"])
            elif kind == "rank":
                session.submit_ranking(
                    ev["iteration"],
                    {n: CardRanking.from_json(r) for n, r in ev["rankings"].items()},
                    ev.get("merges", ()),
                    _expect=ev["result"] if verify else None,
                )
            elif kind == "fit":
                session.fit_scores(
                    ev["iteration"],
                    ev["requests"],
                    _expect=ev["result"] if verify else None,
                )
            elif kind == "accept":
                session.accept(ev["plan"])
            else:
                raise ReplayError(f"unknown event type {kind!r}")
        return session

    @classmethod
    def load(cls, log_path, solve_options: SolveOptions | None = None) -> "Session":
        """Rebuild session state from the recorded results without re-solving.

        Use :meth:`replay` when the record itself should be re-verified.
        """
        with open(log_path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        if not events or events[0]["event"] != "init":
            raise ReplayError("log does not start with an init event")
        head = events[0]
        document = instanceio.load_instance_document(head["instance"])
        objectives = {k: objective_from_json(v) for k, v in head["objectives"].items()}
        session = cls(document, objectives, log_path=None, solve_options=solve_options)
        for ev in events[1:]:
            kind = ev["event"]
            if kind == "generate":
                it = Iteration(index=ev["iteration"])
                for p in ev["result"]["plans"]:
                    it.plans.append(
                        GeneratedPlan(
                            plan_id=p["id"],
                            plan=plan_from_json(p["plan"]),
                            provenance=list(p["provenance"]),
                            objective_values=dict(p["objective_values"]),
                            cells=list(p.get("cells", [])),
                        )
                    )
                    pid = p["id"]
                    if pid.startswith("x") and pid[1:].isdigit():
                        session._plan_seq = max(session._plan_seq, int(pid[1:]))
                it.warnings = list(ev["result"].get("warnings", []))
                session.iterations.append(it)
                session.status = "awaiting-ranking"
            elif kind == "import":
                if ev["iteration"] > len(session.iterations):
                    it = Iteration(index=ev["iteration"])
                    session.iterations.append(it)
                else:
                    it = session._iteration(ev["iteration"])
                for p in ev["plans"]:
                    pid = p["id"]
                    if pid.startswith("x") and pid[1:].isdigit():
                        session._plan_seq = max(session._plan_seq, int(pid[1:]))
                    it.plans.append(
                        GeneratedPlan(
                            plan_id=pid,
                            plan=plan_from_json(p["plan"]),
                            provenance=["manual"],
                            objective_values={},
                        )
                    )
                session.status = "awaiting-ranking"
            elif kind == "curate":
                session._iteration(ev["iteration"]).curated = list(ev["plans"])
            elif kind == "comment":
                session._iteration(ev["iteration"]).comments.append(ev["text"])
            elif kind == "rank":
                it = session._iteration(ev["iteration"])
                rankings = {n: CardRanking.from_json(r) for n, r in ev["rankings"].items()}
                for m in ev.get("merges", ()):
                    rankings[str(m["name"])] = merge(
                        rankings[m["lower"]], rankings[m["upper"]], int(m["bridge"])
                    )
                it.rankings = rankings
                it.scores = {
                    n: ScoreTable({k: int(v) for k, v in t.items()})
                    for n, t in ev["result"]["scores"].items()
                }
            elif kind == "fit":
                it = session._iteration(ev["iteration"])
                for n, rdoc in ev["result"]["fits"].items():
                    it.fits[n] = RegressionResult.from_json(rdoc)
                for reg in ev["result"].get("registered", {}).values():
                    session.objectives[reg["id"]] = objective_from_json(reg["objective"])
                session.status = "fitted"
            elif kind == "accept":
                session.accepted = ev["plan"]
                session.status = "converged"
            else:
                raise ReplayError(f"unknown event type {kind!r}")
        session.log_path = log_path
        return session

    # -- projections -----------------------------------------------------------

    def export_iteration_csv(self, iteration: int, curated_only: bool = False) -> str:
        it = self._iteration(iteration)
        pool = it.curated_plans() if curated_only else it.plans
        return instanceio.plan_table_csv(
            self.instance, [(gp.plan_id, gp.plan) for gp in pool]
        )
