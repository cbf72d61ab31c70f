"""Instance / plan / ranking JSON formats, schema validation, table export.

Money fields accept an integer (cents) or a decimal string in whole currency
units ("212175" or "212175.50"); thousands separators are rejected to avoid
locale ambiguity. The discount is either a closed form {"base": 1.10} meaning
v(t) = base**-t, or an explicit per-period factor list.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Mapping

import jsonschema

from .model import (
    FacilitySpec,
    InstanceError,
    LocationOption,
    Plan,
    PlanningInstance,
    SynergySpec,
)

__all__ = [
    "FormatError",
    "InstanceDocument",
    "INSTANCE_SCHEMA",
    "RANKING_SCHEMA",
    "parse_money",
    "money_str",
    "load_instance_document",
    "load_instance_file",
    "plan_to_json",
    "plan_from_json",
    "plan_table_csv",
]


class FormatError(ValueError):
    """Input document rejected: schema violation or unresolvable reference."""


MONEY = {
    "oneOf": [
        {"type": "integer", "minimum": 0},
        {"type": "string", "pattern": r"^\d+(\.\d{1,2})?$"},
    ]
}

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["criteria", "periods", "discount", "budgets", "facilities"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "criteria": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "periods": {"type": "integer", "minimum": 1},
        "discount": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["base"],
                    "additionalProperties": False,
                    "properties": {"base": {"type": "number", "exclusiveMinimum": 0}},
                },
                {
                    "type": "object",
                    "required": ["factors"],
                    "additionalProperties": False,
                    "properties": {
                        "factors": {"type": "array", "items": {"type": "number"}}
                    },
                },
            ]
        },
        "budgets": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {"type": "array", "items": MONEY},
        },
        "facilities": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "locations"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "label": {"type": "string"},
                    "locations": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["id", "cost", "evaluations"],
                            "additionalProperties": False,
                            "properties": {
                                "id": {"type": "string"},
                                "cost": MONEY,
                                "building": {"type": "string"},
                                "evaluations": {
                                    "type": "object",
                                    "additionalProperties": {"type": "number"},
                                },
                            },
                        },
                    },
                },
            },
        },
        "exclusions": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 4,
                "maxItems": 4,
            },
        },
        "precedences": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "synergies": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["first", "second", "boost"],
                "additionalProperties": False,
                "properties": {
                    "first": {
                        "type": "array",
                        "items": {"type": "string"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "second": {
                        "type": "array",
                        "items": {"type": "string"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "boost": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}

RANKING_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["classes"],
    "additionalProperties": False,
    "properties": {
        "classes": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        },
        "blanks": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "zero_gap": {"type": "integer", "minimum": 0},
    },
}


def parse_money(value) -> int:
    """Integer -> cents; decimal string -> whole currency units. No separators."""
    if isinstance(value, bool):
        raise FormatError(f"not a money value: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise FormatError("money must be nonnegative")
        return value
    if isinstance(value, str):
        if "," in value or "_" in value or " " in value:
            raise FormatError(f"thousands separators are not accepted: {value!r}")
        try:
            d = Decimal(value)
        except InvalidOperation as exc:
            raise FormatError(f"not a money value: {value!r}") from exc
        cents = d * 100
        if cents != int(cents) or cents < 0:
            raise FormatError(f"money has sub-cent precision: {value!r}")
        return int(cents)
    raise FormatError(f"not a money value: {value!r}")


def money_str(cents: int) -> str:
    whole, frac = divmod(cents, 100)
    return f"{whole}.{frac:02d}" if frac else str(whole)


@dataclass(frozen=True)
class InstanceDocument:
    """A parsed instance file: the instance plus its named budget schedules."""

    instance: PlanningInstance
    budgets: Mapping[str, tuple[int, ...]]
    name: str = ""

    def schedule(self, budget_id: str) -> tuple[int, ...]:
        if budget_id not in self.budgets:
            raise FormatError(
                f"unknown budget schedule {budget_id!r}; have {sorted(self.budgets)}"
            )
        return self.budgets[budget_id]


def load_instance_document(doc: Mapping) -> InstanceDocument:
    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"instance document invalid: {exc.message}") from exc
    criteria = tuple(doc["criteria"])
    if len(set(criteria)) != len(criteria):
        raise FormatError("duplicate criterion names")
    periods = doc["periods"]
    disc = doc["discount"]
    if "base" in disc:
        discount = tuple(float(disc["base"]) ** -t for t in range(periods))
    else:
        discount = tuple(float(v) for v in disc["factors"])
        if len(discount) != periods:
            raise FormatError(
                f"discount lists {len(discount)} factors for {periods} periods"
            )
    budgets = {}
    for name, sched in doc["budgets"].items():
        if len(sched) != periods:
            raise FormatError(
                f"budget schedule {name!r} has {len(sched)} entries for {periods} periods"
            )
        budgets[name] = tuple(parse_money(v) for v in sched)
    facilities = []
    for fac in doc["facilities"]:
        options = []
        for loc in fac["locations"]:
            evals = loc["evaluations"]
            missing = [c for c in criteria if c not in evals]
            if missing:
                raise FormatError(
                    f"{fac['id']}@{loc['id']}: missing evaluations for {missing}"
                )
            extra = [c for c in evals if c not in criteria]
            if extra:
                raise FormatError(f"{fac['id']}@{loc['id']}: unknown criteria {extra}")
            options.append(
                LocationOption(
                    location=loc["id"],
                    cost=parse_money(loc["cost"]),
                    evaluations=tuple(float(evals[c]) for c in criteria),
                    building=loc.get("building"),
                )
            )
        facilities.append(
            FacilitySpec(facility=fac["id"], options=tuple(options), label=fac.get("label", ""))
        )
    first_schedule = next(iter(budgets.values()))
    try:
        instance = PlanningInstance(
            facilities=tuple(facilities),
            criteria=criteria,
            periods=periods,
            budgets=first_schedule,
            discount=discount,
            exclusions=tuple(tuple(e) for e in doc.get("exclusions", [])),
            precedences=tuple(tuple(p) for p in doc.get("precedences", [])),
            synergies=tuple(
                SynergySpec(
                    first=tuple(s["first"]), second=tuple(s["second"]), boost=float(s["boost"])
                )
                for s in doc.get("synergies", [])
            ),
        )
    except (InstanceError, ValueError) as exc:
        raise FormatError(str(exc)) from exc
    return InstanceDocument(instance=instance, budgets=budgets, name=doc.get("name", ""))


def load_instance_file(path) -> InstanceDocument:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"instance file is not valid JSON: {exc}") from exc
    return load_instance_document(doc)


def plan_to_json(plan: Plan) -> dict:
    return {
        "assignments": [
            {"facility": a.facility, "location": a.location, "period": a.period}
            for a in plan.assignments
        ],
        "provenance": plan.provenance,
    }


def plan_from_json(doc: Mapping) -> Plan:
    try:
        triples = [
            (str(a["facility"]), str(a["location"]), int(a["period"]))
            for a in doc["assignments"]
        ]
        return Plan.of(triples, provenance=str(doc.get("provenance", "manual")))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed plan document: {exc}") from exc


UNSELECTED = "×"  # the multiplication sign used in the printed plan tables


def plan_table_csv(instance: PlanningInstance, plans: list[tuple[str, Plan]]) -> str:
    """One row per plan: location/period cell per facility, x-mark when unselected."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["plan"] + [spec.facility for spec in instance.facilities])
    for name, plan in plans:
        cells = []
        for spec in instance.facilities:
            a = plan.assignment_for(spec.facility)
            cells.append(f"{a.location}t{a.period}" if a else UNSELECTED)
        writer.writerow([name] + cells)
    return buf.getvalue()
