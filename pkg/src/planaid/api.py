"""HTTP facade over sessions for the browser companion.

JSON in, JSON out; error bodies are {"code", "message", "details": [...]}. A
generate call that exceeds two seconds of wall time returns 202 plus a poll
URL instead of blocking (larger instances can take minutes). Sessions persist
as event-log files under the service's data directory; one mutation at a time
per session, reads are unrestricted. No authentication: deploy behind a
reverse proxy if exposure matters.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .cards import CardRanking, RankingError
from .fitting import FitError
from .instanceio import FormatError, load_instance_document
from .model import contribution
from .optimizer import ObjectiveSpec, objective_from_json
from .optimizer import period_breakdown
from .session import GridCell, ReplayError, Session, SessionError

GENERATE_SYNC_SECONDS = 2.0


def _error(status: int, code: str, message: str, details: list | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details or []},
    )


@dataclass
class _Job:
    status: str = "pending"  # pending | done | error
    result: Any = None
    error: str | None = None
    event: threading.Event = field(default_factory=threading.Event)


class ServiceState:
    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, dict[str, _Job]] = {}
        self._lock = threading.Lock()
        for name in sorted(os.listdir(data_dir)):
            if name.endswith(".jsonl"):
                sid = name[: -len(".jsonl")]
                try:
                    self.sessions[sid] = Session.load(os.path.join(data_dir, name))
                except (ReplayError, FormatError, json.JSONDecodeError):
                    continue  # skip broken logs; they stay on disk untouched

    def create(self, document, objectives) -> str:
        with self._lock:
            sid = uuid.uuid4().hex[:12]
            path = os.path.join(self.data_dir, f"{sid}.jsonl")
            self.sessions[sid] = Session.create(document, objectives, log_path=path)
            return sid

    def get(self, sid: str) -> Session | None:
        return self.sessions.get(sid)


def create_app(data_dir: str | None = None) -> FastAPI:
    app = FastAPI(
        title="planaid service",
        description="facility planning with card-ranking elicitation",
        version="0.1.0",
    )
    state = ServiceState(data_dir or os.environ.get("PLANAID_DATA_DIR", "./sessions"))
    app.state.service = state

    async def read_body(request: Request):
        raw = await request.body()
        try:
            return json.loads(raw) if raw else {}
        except json.JSONDecodeError as exc:
            raise _BadJson(str(exc))

    class _BadJson(Exception):
        def __init__(self, detail):
            self.detail = detail

    @app.exception_handler(_BadJson)
    async def _bad_json_handler(request, exc):
        return _error(400, "bad-json", "request body is not valid JSON", [exc.detail])

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(state.sessions)}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await read_body(request)
        if not isinstance(body, dict) or "instance" not in body:
            return _error(422, "missing-field", "body must carry an 'instance' document")
        try:
            document = load_instance_document(body["instance"])
        except FormatError as exc:
            return _error(422, "bad-instance", str(exc))
        try:
            objectives = {
                name: objective_from_json(spec)
                for name, spec in body.get("objectives", {}).items()
            }
            if not objectives:
                n = len(document.instance.criteria)
                objectives = {"equal": ObjectiveSpec("weighted-sum", (1.0 / n,) * n)}
            sid = state.create(document, objectives)
        except Exception as exc:
            return _error(422, "bad-objectives", str(exc))
        return {"session_id": sid}

    def _session_or_none(sid: str) -> Session | None:
        return state.get(sid)

    @app.post("/sessions/{sid}/generate")
    async def generate(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        if session.status == "converged":
            return _error(409, "converged", "session is converged and rejects mutations")
        body = await read_body(request)
        try:
            grid = [GridCell.from_json(c) for c in body.get("grid", [])]
        except (KeyError, TypeError) as exc:
            return _error(422, "bad-grid", f"malformed grid cell: {exc}")
        if not grid:
            return _error(422, "bad-grid", "grid is empty")
        job = _Job()

        def work():
            try:
                iteration = session.generate(grid)
                job.result = _iteration_view(session, iteration)
                job.status = "done"
            except Exception as exc:  # surfaced through the job
                job.error = str(exc)
                job.status = "error"
            job.event.set()

        thread = threading.Thread(target=work, daemon=True)
        thread.start()
        job.event.wait(GENERATE_SYNC_SECONDS)
        if job.status == "done":
            return job.result
        if job.status == "error":
            return _error(422, "generate-failed", job.error)
        jid = uuid.uuid4().hex[:8]
        state.jobs.setdefault(sid, {})[jid] = job
        return JSONResponse(
            status_code=202,
            content={"job": f"/sessions/{sid}/jobs/{jid}", "status": "pending"},
        )

    @app.get("/sessions/{sid}/jobs/{jid}")
    def poll_job(sid: str, jid: str):
        job = state.jobs.get(sid, {}).get(jid)
        if job is None:
            return _error(404, "unknown-job", f"no job {jid} on session {sid}")
        if job.status == "pending":
            return JSONResponse(status_code=202, content={"status": "pending"})
        if job.status == "error":
            return _error(422, "generate-failed", job.error)
        return job.result

    @app.post("/sessions/{sid}/rankings")
    async def submit_rankings(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        if session.status == "converged":
            return _error(409, "converged", "session is converged and rejects mutations")
        body = await read_body(request)
        try:
            iteration = int(body["iteration"])
            rankings = {
                name: CardRanking.from_json(doc)
                for name, doc in body.get("rankings", {}).items()
            }
            tables = session.submit_ranking(iteration, rankings, body.get("merges", ()))
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "bad-ranking", f"malformed ranking payload: {exc}")
        except (RankingError, SessionError) as exc:
            return _error(422, "bad-ranking", str(exc))
        return {"scores": {name: table.to_json() for name, table in tables.items()}}

    @app.post("/sessions/{sid}/fits")
    async def run_fits(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        if session.status == "converged":
            return _error(409, "converged", "session is converged and rejects mutations")
        body = await read_body(request)
        try:
            iteration = int(body["iteration"])
            results = session.fit_scores(iteration, body.get("requests", []))
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "bad-fit", f"malformed fit payload: {exc}")
        except (FitError, SessionError) as exc:
            return _error(422, "bad-fit", str(exc))
        return {"fits": {name: result.to_json() for name, result in results.items()}}

    @app.post("/sessions/{sid}/curate")
    async def curate(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        if session.status == "converged":
            return _error(409, "converged", "session is converged and rejects mutations")
        body = await read_body(request)
        try:
            session.curate(int(body["iteration"]), list(body["plans"]))
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "bad-curate", f"malformed curate payload: {exc}")
        except SessionError as exc:
            return _error(422, "bad-curate", str(exc))
        return {"ok": True}

    @app.post("/sessions/{sid}/comments")
    async def comment(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        if session.status == "converged":
            return _error(409, "converged", "session is converged and rejects mutations")
        body = await read_body(request)
        try:
            session.comment(int(body["iteration"]), str(body["text"]))
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, "bad-comment", f"malformed comment payload: {exc}")
        except SessionError as exc:
            return _error(422, "bad-comment", str(exc))
        return {"ok": True}

    @app.post("/sessions/{sid}/accept")
    async def accept(sid: str, request: Request):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        body = await read_body(request)
        try:
            session.accept(str(body["plan"]))
        except (KeyError, TypeError) as exc:
            return _error(422, "bad-accept", f"malformed accept payload: {exc}")
        except SessionError as exc:
            if "unknown plan" in str(exc):
                return _error(404, "unknown-plan", str(exc))
            return _error(409, "converged", str(exc))
        return session_view(sid, session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = _session_or_none(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid}")
        return session_view(sid, session)

    return app


def _plan_view(session: Session, gp) -> dict:
    instance = session.instance
    g = contribution(instance, gp.plan)
    rows = period_breakdown(instance, gp.plan)
    spend = [0] * instance.periods
    for a in gp.plan.assignments:
        spend[a.period] += instance.facility(a.facility).option(a.location).cost
    track = []
    acc = 0
    for t in range(instance.periods):
        acc += spend[t]
        track.append(acc)
    return {
        "id": gp.plan_id,
        "assignments": [
            {"facility": a.facility, "location": a.location, "period": a.period}
            for a in gp.plan.assignments
        ],
        "provenance": list(gp.provenance),
        "cells": list(gp.cells),
        "objective_values": dict(gp.objective_values),
        "contributions": list(g.values),
        "syn": g.syn,
        "breakdown": [list(row) for row in rows],
        "budget_track": track,
    }


def _iteration_view(session: Session, iteration) -> dict:
    return {
        "index": iteration.index,
        "plans": [_plan_view(session, gp) for gp in iteration.plans],
        "curated": iteration.curated,
        "rankings": {n: r.to_json() for n, r in iteration.rankings.items()},
        "scores": {n: t.to_json() for n, t in iteration.scores.items()},
        "fits": {n: r.to_json() for n, r in iteration.fits.items()},
        "comments": list(iteration.comments),
        "warnings": list(iteration.warnings),
        "pending_ranking": not iteration.scores,
    }


def session_view(sid: str, session: Session) -> dict:
    return {
        "session_id": sid,
        "status": session.status,
        "accepted": session.accepted,
        "criteria": list(session.instance.criteria),
        "periods": session.instance.periods,
        "budgets": {k: list(v) for k, v in session.document.budgets.items()},
        "objectives": sorted(session.objectives),
        "iterations": [_iteration_view(session, it) for it in session.iterations],
    }
