import json

import pytest
from fastapi.testclient import TestClient

from planaid.api import create_app
from planaid.model import Plan, contribution, choquet_value
from planaid.optimizer import evaluate_plan, objective_from_json, period_breakdown

from conftest import tiny_instance_doc


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(str(tmp_path)))


@pytest.fixture()
def session_id(client):
    r = client.post("/sessions", json={"instance": tiny_instance_doc()})
    assert r.status_code == 201
    return r.json()["session_id"]


def grid_body(*cells):
    return {"grid": [dict(c) for c in cells]}


CELL = {"budget": "hi", "objective": "equal", "synergy": True}


def test_create_session_and_fetch(client, session_id):
    r = client.get(f"/sessions/{session_id}")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "structuring"
    assert body["criteria"] == ["A", "B"]


def test_malformed_json_is_400(client):
    r = client.post("/sessions", content=b"{oops", headers={"content-type": "application/json"})
    assert r.status_code == 400
    assert r.json()["code"] == "bad-json"


def test_schema_violation_is_422(client):
    r = client.post("/sessions", json={"instance": {"periods": 2}})
    assert r.status_code == 422
    body = r.json()
    assert set(body) == {"code", "message", "details"}


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/generate", json=grid_body(CELL)).status_code == 404
    assert client.get("/sessions/nope").status_code == 404


def test_generate_then_rank_then_fit_then_accept(client, session_id):
    r = client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL))
    assert r.status_code == 200
    plans = r.json()["plans"]
    assert plans and r.json()["pending_ranking"] is True
    pid = plans[0]["id"]

    r = client.post(
        f"/sessions/{session_id}/rankings",
        json={"iteration": 1, "rankings": {"R": {"classes": [[pid]], "blanks": [], "zero_gap": 4}}},
    )
    assert r.status_code == 200
    assert r.json()["scores"]["R"] == {pid: 5}

    r = client.post(
        f"/sessions/{session_id}/fits",
        json={
            "iteration": 1,
            "requests": [
                {"score_table": "R", "family": "weighted-sum", "register_as": "fitted"}
            ],
        },
    )
    assert r.status_code == 200
    assert "R" in r.json()["fits"]

    r = client.post(f"/sessions/{session_id}/accept", json={"plan": pid})
    assert r.status_code == 200
    assert r.json()["status"] == "converged"

    r = client.get(f"/sessions/{session_id}")
    assert r.json()["status"] == "converged"
    assert r.json()["accepted"] == pid


def test_ranking_errors_are_422(client, session_id):
    client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL))
    r = client.post(
        f"/sessions/{session_id}/rankings",
        json={"iteration": 1, "rankings": {"R": {"classes": [["ghost"]], "blanks": [], "zero_gap": 0}}},
    )
    assert r.status_code == 422
    r = client.post(
        f"/sessions/{session_id}/rankings",
        json={
            "iteration": 1,
            "rankings": {"R": {"classes": [["a"], ["a"]], "blanks": [0], "zero_gap": 0}},
        },
    )
    assert r.status_code == 422


def test_converged_mutations_409(client, session_id):
    r = client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL))
    pid = r.json()["plans"][0]["id"]
    client.post(f"/sessions/{session_id}/accept", json={"plan": pid})
    assert (
        client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL)).status_code == 409
    )
    assert (
        client.post(
            f"/sessions/{session_id}/rankings", json={"iteration": 1, "rankings": {}}
        ).status_code
        == 409
    )


def test_accept_unknown_plan_404(client, session_id):
    client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL))
    assert client.post(f"/sessions/{session_id}/accept", json={"plan": "zz"}).status_code == 404


def test_view_values_match_model_reevaluation(client, session_id):
    client.post(
        f"/sessions/{session_id}/generate",
        json=grid_body(CELL, {"budget": "lo", "objective": "equal", "synergy": False}),
    )
    view = client.get(f"/sessions/{session_id}").json()
    from planaid.instanceio import load_instance_document

    document = load_instance_document(tiny_instance_doc())
    inst = document.instance
    for plan_view in view["iterations"][0]["plans"]:
        plan = Plan.of(
            [(a["facility"], a["location"], a["period"]) for a in plan_view["assignments"]]
        )
        g = contribution(inst, plan)
        assert plan_view["contributions"] == pytest.approx(list(g.values), abs=1e-9)
        rows = period_breakdown(inst, plan)
        for got, want in zip(plan_view["breakdown"], rows):
            assert got == pytest.approx(list(want), abs=1e-9)
        # recorded per-scenario objective values equal model-core re-evaluation
        for cell in plan_view["cells"]:
            spec = objective_from_json({"kind": "weighted-sum", "weights": [0.5, 0.5]})
            value = evaluate_plan(inst, plan, spec, include_synergies=cell["synergy"])
            key = f"{cell['budget']},equal,SG{1 if cell['synergy'] else 2}"
            assert plan_view["objective_values"][key] == pytest.approx(value, abs=1e-9)


def test_every_mutation_appends_one_event(client, tmp_path):
    r = client.post("/sessions", json={"instance": tiny_instance_doc()})
    sid = r.json()["session_id"]
    log = tmp_path / f"{sid}.jsonl"

    def count():
        return sum(1 for _ in open(log))

    assert count() == 1  # init
    client.post(f"/sessions/{sid}/generate", json=grid_body(CELL))
    assert count() == 2
    view = client.get(f"/sessions/{sid}").json()
    assert count() == 2  # GET never mutates
    pid = view["iterations"][0]["plans"][0]["id"]
    client.post(
        f"/sessions/{sid}/rankings",
        json={"iteration": 1, "rankings": {"R": {"classes": [[pid]], "blanks": [], "zero_gap": 0}}},
    )
    assert count() == 3
    client.post(f"/sessions/{sid}/curate", json={"iteration": 1, "plans": [pid]})
    assert count() == 4
    client.post(f"/sessions/{sid}/comments", json={"iteration": 1, "text": "note"})
    assert count() == 5
    client.post(f"/sessions/{sid}/accept", json={"plan": pid})
    assert count() == 6


def test_sessions_reload_from_disk(client, tmp_path):
    r = client.post("/sessions", json={"instance": tiny_instance_doc()})
    sid = r.json()["session_id"]
    client.post(f"/sessions/{sid}/generate", json=grid_body(CELL))
    fresh = TestClient(create_app(str(tmp_path)))
    view = fresh.get(f"/sessions/{sid}")
    assert view.status_code == 200
    assert view.json()["iterations"][0]["plans"]


def test_openapi_exposed(client):
    doc = client.get("/openapi.json").json()
    paths = set(doc["paths"])
    assert {"/sessions", "/sessions/{sid}", "/sessions/{sid}/generate"} <= paths


def test_static_openapi_matches_app(client, fixtures_dir):
    import json
    from pathlib import Path

    static = json.loads((Path(fixtures_dir).parent / "openapi.json").read_text())
    assert static == client.app.openapi()


def test_ecovillage_instance_accepted(client, fixtures_dir):
    instance = json.loads((fixtures_dir / "ecovillage.json").read_text())
    r = client.post("/sessions", json={"instance": instance})
    assert r.status_code == 201


def test_long_generate_returns_job_and_polls(client, session_id, monkeypatch):
    import time

    import planaid.api as api_module
    from planaid.session import Session

    monkeypatch.setattr(api_module, "GENERATE_SYNC_SECONDS", 0.05)
    original = Session.generate

    def slow_generate(self, grid, _expect=None):
        time.sleep(0.5)  # guarantee the solve outlives the sync window
        return original(self, grid, _expect)

    monkeypatch.setattr(Session, "generate", slow_generate)
    r = client.post(f"/sessions/{session_id}/generate", json=grid_body(CELL))
    assert r.status_code == 202
    job_url = r.json()["job"]
    for _attempt in range(100):
        poll = client.get(job_url)
        if poll.status_code == 200:
            assert poll.json()["plans"]
            break
        assert poll.status_code == 202
        time.sleep(0.1)
    else:
        raise AssertionError("job never completed")
    assert client.get(f"/sessions/{session_id}/jobs/nope").status_code == 404
