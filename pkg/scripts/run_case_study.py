#!/usr/bin/env python3
"""Drive a full three-round elicitation on the Ecovillage fixture and record
the session event log used by the replay tests.

Round 1 generates the 2-budget x 5-weight-vector x synergy-on/off grid,
curates the eight highlighted scenario winners, takes the two per-budget
card rankings plus a seven-card bridge, and fits three capacities (syn column,
min-max normalized contributions). Round 2 optimizes those capacities under
both budgets with a kitchen requirement and tailoring-first precedences, plus
two residence-required cells. Round 3 explores co-location bans and the
min-two-functions-per-building rule, then accepts the compact plan.

Plan identity intentionally tolerates alternate optima: rankings are built
from whatever distinct plans the scenarios produce, ordered by their
equal-weight value.
"""

import sys
import time
from pathlib import Path

from planaid.cards import CardRanking
from planaid.instanceio import load_instance_file
from planaid.optimizer import ObjectiveSpec, evaluate_plan
from planaid.session import GridCell, Session

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
LOG = FIXTURES / "case_study.events.jsonl"

WEIGHTS = {
    "w1": (0.25, 0.25, 0.25, 0.25),
    "w2": (0.997, 0.001, 0.001, 0.001),
    "w3": (0.001, 0.997, 0.001, 0.001),
    "w4": (0.001, 0.001, 0.997, 0.001),
    "w5": (0.001, 0.001, 0.001, 0.997),
}

# the eight scenario cells whose winners go to the decision maker, round 1
HIGHLIGHTED = [
    ("B1", "w1", True),
    ("B1", "w5", False),
    ("B1", "w4", False),
    ("B1", "w3", False),
    ("B2", "w3", True),
    ("B2", "w1", True),
    ("B2", "w5", False),
    ("B2", "w4", False),
]

KITCHENS = ("KIT-WWO", "KIT-GUE")
RESIDENCES = ("RES-WWO", "ROM-GUE")
TAILOR_FIRST = (("TAI-LAB", "RES-WWO"), ("TAI-LAB", "WOO-LAB"))


def ranked(session, ids, ascending=True):
    equal = ObjectiveSpec("weighted-sum", (0.25,) * 4)
    values = {
        pid: evaluate_plan(session.instance, session.known_plan(pid).plan, equal)
        for pid in ids
    }
    return sorted(ids, key=lambda p: (values[p], p), reverse=not ascending)


def ranking_from(ids, blanks_pattern, zero_gap):
    blanks = tuple(blanks_pattern[: max(0, len(ids) - 1)])
    blanks += (0,) * (len(ids) - 1 - len(blanks))
    return CardRanking(tuple((p,) for p in ids), blanks, zero_gap)


def main() -> int:
    t0 = time.time()
    if LOG.exists():
        LOG.unlink()
    document = load_instance_file(FIXTURES / "ecovillage.json")
    objectives = {name: ObjectiveSpec("weighted-sum", w) for name, w in WEIGHTS.items()}
    session = Session.create(document, objectives, log_path=LOG)

    grid = [
        GridCell(budget, weight, synergy)
        for budget in ("B1", "B2")
        for weight in WEIGHTS
        for synergy in (True, False)
    ]
    it1 = session.generate(grid)
    print(f"round 1: {len(grid)} scenarios -> {len(it1.plans)} distinct plans")

    by_cell = {}
    for gp in it1.plans:
        for scenario_id in gp.provenance:
            by_cell[scenario_id] = gp.plan_id
    curated = []
    for budget, weight, synergy in HIGHLIGHTED:
        sid = f"{budget},{weight},SG{1 if synergy else 2}"
        pid = by_cell[sid]
        if pid not in curated:
            curated.append(pid)
    session.curate(1, curated)
    print(f"curated {len(curated)} plans: {curated}")
    session.comment(
        1,
        "tailoring workshop must open at the start; guest kitchen early is fine, "
        "the reverse is not; recreational room preferred in the upper borough",
    )

    b1_plans = [p for p in curated if any(s.startswith("B1") for s in session.known_plan(p).provenance)]
    b2_plans = [p for p in curated if p not in b1_plans]
    r100 = ranking_from(ranked(session, b1_plans), (0, 2, 3), zero_gap=5)
    r50 = ranking_from(ranked(session, b2_plans), (3, 2, 5), zero_gap=2)
    tables = session.submit_ranking(
        1,
        {"R50": r50, "R100": r100},
        merges=[{"lower": "R50", "upper": "R100", "bridge": 7, "name": "RTot"}],
    )
    print("RTot scores:", tables["RTot"].to_json())

    fits = session.fit_scores(
        1,
        [
            {
                "name": name,
                "score_table": name,
                "family": "choquet-2additive",
                "syn": True,
                "normalize": "min-max",
                "register_as": f"w{name}",
            }
            for name in ("R50", "R100", "RTot")
        ],
    )
    for name, result in fits.items():
        print(f"fit {name}: total error {result.total_error:.6g}")

    base = dict(required=(KITCHENS,), precedences=TAILOR_FIRST, synergy=True)
    round2 = [
        GridCell("B1", "wR50", **base),
        GridCell("B1", "wR100", **base),
        GridCell("B1", "wRTot", **base),
        GridCell("B1", "wRTot", required=(KITCHENS, RESIDENCES), precedences=TAILOR_FIRST),
        GridCell("B2", "wR50", **base),
        GridCell("B2", "wR100", **base),
        GridCell("B2", "wRTot", **base),
        GridCell("B2", "wRTot", required=(KITCHENS, RESIDENCES), precedences=TAILOR_FIRST),
    ]
    it2 = session.generate(round2)
    print(f"round 2: {len(round2)} scenarios -> {len(it2.plans)} plans; warnings: {it2.warnings}")
    session.comment(
        2,
        "preferred plan keeps catering in the upper borough; recreational room in "
        "the pavilion is too far out; want at least two functions per touched building",
    )

    round3 = [
        GridCell(
            "B1", "wRTot",
            required=(KITCHENS,), precedences=TAILOR_FIRST,
            forbidden=(("WOO-LAB", "l1", "ROM-REC", "l1"),),
        ),
        GridCell(
            "B1", "wRTot",
            required=(KITCHENS,), precedences=TAILOR_FIRST, min_two_per_building=True,
        ),
        GridCell(
            "B2", "wRTot",
            required=(KITCHENS,), precedences=TAILOR_FIRST, min_two_per_building=True,
        ),
    ]
    it3 = session.generate(round3)
    print(f"round 3: {len(round3)} scenarios -> {len(it3.plans)} plans")

    min_two_b1 = next(
        gp.plan_id
        for gp in it3.plans
        if any("min2" in s and s.startswith("B1") for s in gp.provenance)
    )
    session.accept(min_two_b1)
    print(f"accepted {min_two_b1}; elapsed {time.time() - t0:.1f}s; log at {LOG}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
