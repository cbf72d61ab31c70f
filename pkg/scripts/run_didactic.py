#!/usr/bin/env python3
"""Run the six-project worked example end to end: score the card layout, then
fit all three value-function families and print their per-item tables."""

import json
import sys
from pathlib import Path

from planaid.cards import CardRanking, score
from planaid.fitting import FitRequest, fit, result_table_csv

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> int:
    with open(FIXTURES / "didactic_ranking.json") as fh:
        ranking = CardRanking.from_json(json.load(fh))
    table = score(ranking)
    print("card scores:")
    for cls in ranking.classes:
        for item in cls:
            print(f"  {item}: {table[item]}")

    with open(FIXTURES / "didactic.json") as fh:
        doc = json.load(fh)

    for family, extra in (
        ("weighted-sum", {}),
        ("piecewise-linear", {}),
        ("choquet-2additive", {}),
    ):
        request = FitRequest.from_json(doc, family=family, **extra)
        result = fit(request)
        print(f"\n=== {family} ===")
        if result.weights is not None:
            print("weights:", [round(w, 4) for w in result.weights])
        if result.capacity is not None:
            print("capacity singletons:", [round(w, 4) for w in result.capacity.weights])
            print(
                "capacity pairs:",
                {k: round(v, 4) for k, v in result.capacity.pair_weights.items()},
            )
        if result.marginals is not None:
            for j, row in enumerate(result.marginals):
                print(f"marginals u{j + 1}:", [round(v, 4) for v in row])
        print(f"k = {result.scale:.6g}, total error = {result.total_error:.6g}")
        print(result_table_csv(result, request).rstrip())
    return 0


if __name__ == "__main__":
    sys.exit(main())
