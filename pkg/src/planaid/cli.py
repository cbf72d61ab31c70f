"""Command-line entry point for batch runs, fixtures and reproduction scripts.

Exit codes are a stable contract: 0 ok, 2 usage error, 3 infeasible or empty
result, 4 input error (unreadable file, schema violation, unresolved id).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import instanceio
from .cards import CardRanking, RankingError, merge, score
from .fitting import FitError, FitRequest, fit, result_table_csv
from .instanceio import FormatError, load_instance_file, plan_table_csv, plan_to_json
from .lp import write_lp_file
from .model import contribution
from .optimizer import ObjectiveSpec, ScenarioSpec, evaluate_plan, objective_from_json, optimize
from .session import GridCell, Session, SessionError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4

FAMILY_FLAGS = {
    "ws": "weighted-sum",
    "weighted-sum": "weighted-sum",
    "piecewise": "piecewise-linear",
    "piecewise-linear": "piecewise-linear",
    "choquet": "choquet-2additive",
    "choquet-2additive": "choquet-2additive",
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}")


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        weights = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise CliError(f"bad weight list {text!r}: {exc}")
    return weights


def _scenario_from_args(docm, args) -> ScenarioSpec:
    if args.weights:
        objective = ObjectiveSpec("weighted-sum", _parse_weights(args.weights))
        objective_id = f"w({args.weights})"
    elif args.objective:
        objective = objective_from_json(_read_json(args.objective))
        objective_id = args.objective
    else:
        n = len(docm.instance.criteria)
        objective = ObjectiveSpec("weighted-sum", (1.0 / n,) * n)
        objective_id = "equal-weights"
    required = tuple(tuple(g.split("+")) for g in args.require or ())
    forbidden = []
    for spec in args.forbid or ():
        parts = spec.split(",")
        if len(parts) != 4:
            raise CliError(f"--forbid wants FACILITY,LOC,FACILITY,LOC, got {spec!r}")
        forbidden.append(tuple(parts))
    precedences = []
    for spec in args.precede or ():
        parts = spec.split(",")
        if len(parts) != 2:
            raise CliError(f"--precede wants EARLIER,LATER, got {spec!r}")
        precedences.append(tuple(parts))
    try:
        budgets = docm.schedule(args.budget)
    except FormatError as exc:
        raise CliError(str(exc))
    scenario = ScenarioSpec(
        budget_id=args.budget,
        budgets=budgets,
        objective_id=objective_id,
        objective=objective,
        synergy=args.synergy != "off",
        required_groups=required,
        forbidden_pairs=tuple(forbidden),
        min_two_per_building=args.min_two,
        extra_precedences=tuple(precedences),
    )
    try:
        scenario.validate(docm.instance)
    except Exception as exc:
        raise CliError(f"bad scenario: {exc}")
    return scenario


def cmd_solve(args) -> int:
    try:
        docm = load_instance_file(args.instance)
    except FormatError as exc:
        raise CliError(str(exc))
    scenario = _scenario_from_args(docm, args)
    from .optimizer import assemble

    if args.dump_lp:
        write_lp_file(assemble(docm.instance, scenario).lp, args.dump_lp)
    plan, report = optimize(docm.instance, scenario)
    if plan is None:
        print(f"scenario {scenario.id}: {report.status}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if not plan.assignments:
        print(f"scenario {scenario.id}: optimal plan is empty", file=sys.stderr)
        return EXIT_INFEASIBLE
    value = evaluate_plan(docm.instance, plan, scenario.objective, scenario.synergy)
    print(plan_table_csv(docm.instance, [("plan", plan)]).rstrip())
    print(f"objective {value:.6f}  nodes {report.nodes}  scenario {scenario.id}")
    print()
    doc = plan_to_json(plan)
    doc["objective"] = value
    doc["contributions"] = list(contribution(docm.instance, plan).values)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_score(args) -> int:
    def load_ranking(path) -> CardRanking:
        try:
            return CardRanking.from_json(_read_json(path))
        except RankingError as exc:
            raise CliError(str(exc))

    try:
        if args.merge:
            lower = load_ranking(args.merge[0])
            upper = load_ranking(args.merge[1])
            ranking = merge(lower, upper, args.bridge)
        else:
            if not args.ranking:
                raise CliError("need a ranking file or --merge", EXIT_USAGE)
            ranking = load_ranking(args.ranking)
        table = score(ranking)
    except RankingError as exc:
        raise CliError(str(exc))
    print("item,score")
    for cls in ranking.classes:
        for item in cls:
            print(f"{item},{table[item]}")
    return EXIT_OK


def cmd_fit(args) -> int:
    doc = _read_json(args.items)
    if args.scores:
        doc = dict(doc)
        doc["scores"] = _read_json(args.scores)
    family = FAMILY_FLAGS.get(args.family)
    if family is None:
        raise CliError(f"unknown family {args.family!r}", EXIT_USAGE)
    try:
        request = FitRequest.from_json(
            doc,
            family=family,
            scaling=args.mode,
            normalize="min-max" if args.normalize else doc.get("normalize", "none"),
        )
        result = fit(request)
    except FitError as exc:
        raise CliError(str(exc))
    if args.format in ("json", "both"):
        print(json.dumps(result.to_json(), indent=2, sort_keys=True))
    if args.format in ("csv", "both"):
        print(result_table_csv(result, request).rstrip())
    return EXIT_OK


def _load_session(args) -> Session:
    try:
        return Session.load(args.log)
    except OSError as exc:
        raise CliError(f"cannot read session log: {exc}")
    except Exception as exc:
        raise CliError(f"broken session log: {exc}")


def cmd_session(args) -> int:
    if args.session_cmd == "init":
        try:
            docm = load_instance_file(args.instance)
        except FormatError as exc:
            raise CliError(str(exc))
        objectives = {}
        if args.objectives:
            for name, spec in _read_json(args.objectives).items():
                objectives[name] = objective_from_json(spec)
        else:
            n = len(docm.instance.criteria)
            objectives["equal"] = ObjectiveSpec("weighted-sum", (1.0 / n,) * n)
        Session.create(docm, objectives, log_path=args.log)
        print(f"session log started at {args.log}")
        return EXIT_OK

    session = _load_session(args)
    session.log_path = args.log
    try:
        if args.session_cmd == "generate":
            grid = [GridCell.from_json(c) for c in _read_json(args.grid)]
            it = session.generate(grid)
            if not it.plans:
                print("; ".join(it.warnings), file=sys.stderr)
                return EXIT_INFEASIBLE
            print(session.export_iteration_csv(it.index).rstrip())
            return EXIT_OK
        if args.session_cmd == "curate":
            session.curate(args.iteration, args.plans.split(","))
            return EXIT_OK
        if args.session_cmd == "rank":
            rankings = {}
            for spec in args.ranking:
                name, _, path = spec.partition("=")
                if not path:
                    raise CliError(f"--ranking wants NAME=FILE, got {spec!r}", EXIT_USAGE)
                rankings[name] = CardRanking.from_json(_read_json(path))
            merges = []
            for spec in args.merge or ():
                parts = spec.split(",")
                if len(parts) != 4:
                    raise CliError(
                        f"--merge wants LOWER,UPPER,BRIDGE,NAME, got {spec!r}", EXIT_USAGE
                    )
                merges.append(
                    {"lower": parts[0], "upper": parts[1], "bridge": int(parts[2]), "name": parts[3]}
                )
            tables = session.submit_ranking(args.iteration, rankings, merges)
            for name in sorted(tables):
                print(f"[{name}]")
                for item, value in tables[name].items():
                    print(f"{item},{value}")
            return EXIT_OK
        if args.session_cmd == "fit":
            requests = _read_json(args.request)
            results = session.fit_scores(args.iteration, requests)
            for name, result in results.items():
                print(f"{name}: total_error={result.total_error!r}")
            return EXIT_OK
        if args.session_cmd == "comment":
            session.comment(args.iteration, args.text)
            return EXIT_OK
        if args.session_cmd == "accept":
            if not any(it.plans for it in session.iterations):
                raise CliError("session has no plans to accept", EXIT_INFEASIBLE)
            session.accept(args.plan)
            print(f"accepted {args.plan}; session converged")
            return EXIT_OK
        if args.session_cmd == "export":
            it = session._iteration(args.iteration)
            print(session.export_iteration_csv(args.iteration).rstrip())
            return EXIT_OK
    except (SessionError, RankingError, FitError) as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE if "no iteration" in str(exc) else EXIT_INPUT)
    raise CliError(f"unknown session subcommand {args.session_cmd!r}", EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="planaid",
        description="facility planning with card-ranking elicitation and value-function fitting",
    )
    top.add_argument(
        "--seed",
        type=int,
        default=None,
        help="reserved; the solver is deterministic and this flag is a documented no-op",
    )
    sub = top.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="optimize one scenario on an instance file")
    p.add_argument("instance")
    p.add_argument("--budget", required=True, help="budget schedule id from the instance file")
    p.add_argument("--weights", help="comma-separated criterion weights (weighted sum)")
    p.add_argument("--objective", help="objective spec JSON file (weighted sum or capacity)")
    p.add_argument("--synergy", choices=("on", "off"), default="on")
    p.add_argument("--require", action="append", help="facility group, e.g. KIT-WWO+KIT-GUE")
    p.add_argument("--forbid", action="append", help="co-location ban FACILITY,LOC,FACILITY,LOC")
    p.add_argument("--precede", action="append", help="EARLIER,LATER facility pair")
    p.add_argument("--min-two", action="store_true", help="min two functions per used building")
    p.add_argument("--dump-lp", help="write the assembled program in LP format")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("score", help="score a card ranking (optionally merge two)")
    p.add_argument("ranking", nargs="?")
    p.add_argument("--merge", nargs=2, metavar=("LOWER", "UPPER"))
    p.add_argument("--bridge", type=int, default=0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit", help="fit a value function to scored items")
    p.add_argument("items", help="JSON file with items (and usually scores)")
    p.add_argument("--scores", help="separate scores JSON file")
    p.add_argument("--family", default="ws", help="ws | piecewise | choquet")
    p.add_argument("--mode", choices=("multiplicative", "affine"), default="multiplicative")
    p.add_argument("--normalize", action="store_true", help="min-max rescale contributions")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("session", help="manage a file-backed elicitation session")
    ss = p.add_subparsers(dest="session_cmd", required=True)
    q = ss.add_parser("init")
    q.add_argument("--instance", required=True)
    q.add_argument("--log", required=True)
    q.add_argument("--objectives", help="JSON file: name -> objective spec")
    q = ss.add_parser("generate")
    q.add_argument("--log", required=True)
    q.add_argument("--grid", required=True, help="JSON list of grid cells")
    q = ss.add_parser("curate")
    q.add_argument("--log", required=True)
    q.add_argument("--iteration", type=int, required=True)
    q.add_argument("--plans", required=True, help="comma-separated plan ids")
    q = ss.add_parser("rank")
    q.add_argument("--log", required=True)
    q.add_argument("--iteration", type=int, required=True)
    q.add_argument("--ranking", action="append", required=True, help="NAME=FILE")
    q.add_argument("--merge", action="append", help="LOWER,UPPER,BRIDGE,NAME")
    q = ss.add_parser("fit")
    q.add_argument("--log", required=True)
    q.add_argument("--iteration", type=int, required=True)
    q.add_argument("--request", required=True, help="JSON list of fit requests")
    q = ss.add_parser("comment")
    q.add_argument("--log", required=True)
    q.add_argument("--iteration", type=int, required=True)
    q.add_argument("--text", required=True)
    q = ss.add_parser("accept")
    q.add_argument("--log", required=True)
    q.add_argument("--plan", required=True)
    q = ss.add_parser("export")
    q.add_argument("--log", required=True)
    q.add_argument("--iteration", type=int, required=True)
    q.add_argument("--format", choices=("csv",), default="csv")
    p.set_defaults(func=cmd_session)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
