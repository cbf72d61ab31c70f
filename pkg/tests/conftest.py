import json
from pathlib import Path

import pytest

from planaid.instanceio import load_instance_document, load_instance_file

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# didactic data: six projects on three criteria, card scores from the worked ranking
DIDACTIC_EVALS = {
    "P1": (80.0, 50.0, 75.0),
    "P2": (60.0, 60.0, 60.0),
    "P3": (60.0, 80.0, 50.0),
    "P4": (70.0, 60.0, 70.0),
    "P5": (50.0, 70.0, 60.0),
    "P6": (90.0, 50.0, 40.0),
}
DIDACTIC_SCORES = {"P5": 31, "P2": 35, "P3": 37, "P6": 44, "P4": 46, "P1": 51}


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ecovillage():
    return load_instance_file(FIXTURES / "ecovillage.json")


@pytest.fixture(scope="session")
def didactic_doc():
    with open(FIXTURES / "didactic.json") as fh:
        return json.load(fh)


def tiny_instance_doc(synergy: bool = True) -> dict:
    """Three facilities, two locations, three periods; small enough to enumerate."""
    doc = {
        "criteria": ["A", "B"],
        "periods": 3,
        "discount": {"factors": [1.0, 0.5, 0.25]},
        "budgets": {"lo": [4000, 4000, 4000], "hi": [10000, 10000, 10000]},
        "facilities": [
            {
                "id": f"F{i}",
                "locations": [
                    {
                        "id": "l1",
                        "cost": (20 + 10 * i) * 100,
                        "building": "X",
                        "evaluations": {"A": 10.0 * (i + 1), "B": 5.0 * (3 - i)},
                    },
                    {
                        "id": "l2",
                        "cost": (25 + 10 * i) * 100,
                        "building": "Y",
                        "evaluations": {"A": 8.0 * (i + 1), "B": 6.0 * (3 - i)},
                    },
                ],
            }
            for i in range(3)
        ],
    }
    if synergy:
        doc["synergies"] = [{"first": ["F0", "l1"], "second": ["F1", "l1"], "boost": 0.5}]
    return doc


@pytest.fixture()
def tiny_document():
    return load_instance_document(tiny_instance_doc())
