"""HTTP front end.

Thin JSON layer over Session: datasets are uploaded once, sessions wrap a
dataset plus a mined tactic set, and every adjustment flows through the
preview/apply cycle.  Mining runs in background threads exposed as polled
jobs because a remine on a large dataset can take minutes; local fine-tuning
responds inline.  All state lives in process memory; applied sessions are
additionally written to data_dir so an analysis can be inspected after the
fact.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Any, Optional

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import io
from .config import ServiceConfig, load_config
from .constraints import ConstraintError, is_global
from .cover import cover, shared_index
from .miner import MinerConfig
from .model import Dataset, ValidationError, validate_dataset
from .nlp import ParseError, context_from_session, parse
from .projection import project
from .session import Session, SessionError, StaleVersionError


class _Store:
    """Mutable service state shared across requests."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.lock = threading.Lock()
        self.datasets: dict[str, Dataset] = {}
        self.sessions: dict[str, Session] = {}
        self.session_dataset: dict[str, str] = {}
        self.session_locks: dict[str, threading.Lock] = {}
        self.previews: dict[str, tuple[str, Any]] = {}
        self.jobs: dict[str, dict] = {}
        self.counters = {"dataset": 0, "session": 0, "job": 0}

    def next_id(self, kind: str, prefix: str) -> str:
        with self.lock:
            self.counters[kind] += 1
            return f"{prefix}-{self.counters[kind]}"


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def _tactic_doc(t, schema, stats=None) -> dict:
    doc = io.tactic_to_doc(t, schema)
    doc["length"] = len(t)
    if stats is not None:
        doc["freq"] = stats.freq
        doc["win_rate"] = stats.win_rate
        doc["importance"] = stats.importance
        doc["index_histogram"] = {
            str(start): list(wl) for start, wl in sorted(stats.index_histogram.items())
        }
    return doc


def _diff_doc(diff, schema) -> dict:
    return {
        "constraint": io.constraint_to_doc(diff.constraint),
        "removed": list(diff.removed),
        "added": [
            _tactic_doc(t, schema, diff.added_stats.get(t.id)) for t in diff.added
        ],
        "old_score": diff.old_score,
        "new_score": diff.new_score,
        "base_version": diff.base_version,
        "reason": diff.reason,
    }


def _state_doc(session: Session) -> dict:
    schema = session.dataset.schema
    doc: dict[str, Any] = {
        "session_id": session.id,
        "version": session.version,
        "mined": session.mined,
        "globals": [io.constraint_to_doc(c) for c in session.global_constraints],
        "can_undo": bool(session.history),
    }
    if session.mined:
        stats = session.stats()
        doc["score"] = session.score()
        doc["tactics"] = [
            _tactic_doc(t, schema, stats.get(t.id)) for t in session.tactics
        ]
    else:
        doc["score"] = None
        doc["tactics"] = []
    return doc


def _projection_doc(session: Session, channel: str) -> dict:
    model = session.projection
    if model is None:
        raise SessionError("session has no projection yet", code="VALIDATION")
    stats = session.stats()
    points = []
    for t in session.tactics:
        p = project(model, t, stats[t.id], size_channel=channel)
        points.append({
            "tactic_id": p.tactic_id,
            "angle": p.angle,
            "radius": p.radius,
            "size": p.size,
            "win_rate": p.win_rate,
        })
    return {"channel": channel, "points": points}


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    if config is None:
        config = load_config()
    store = _Store(config)
    app = FastAPI(title="tacmine", version="0.1.0")
    app.state.store = store

    # -- error translation --------------------------------------------------

    @app.exception_handler(ParseError)
    async def _on_parse_error(request: Request, exc: ParseError):
        status = 422 if exc.code == "UNPARSED" else 400
        return _error_response(status, exc.code, exc.message, nearest=list(exc.nearest))

    @app.exception_handler(StaleVersionError)
    async def _on_stale(request: Request, exc: StaleVersionError):
        return _error_response(
            409, "STALE_VERSION", str(exc), expected=exc.expected, actual=exc.actual
        )

    @app.exception_handler(SessionError)
    async def _on_session_error(request: Request, exc: SessionError):
        status = 404 if exc.code == "NOT_FOUND" else 400
        return _error_response(status, exc.code, str(exc))

    @app.exception_handler(ConstraintError)
    async def _on_constraint_error(request: Request, exc: ConstraintError):
        return _error_response(400, exc.code, str(exc))

    @app.exception_handler(ValidationError)
    async def _on_validation_error(request: Request, exc: ValidationError):
        extra = {}
        if exc.rally_id is not None:
            extra["rally_id"] = exc.rally_id
        if exc.where:
            extra["where"] = exc.where
        return _error_response(422, "INVALID_DATASET", exc.message, **extra)

    # -- helpers ------------------------------------------------------------

    def _dataset(dataset_id: str) -> Dataset:
        d = store.datasets.get(dataset_id)
        if d is None:
            raise SessionError(f"unknown dataset {dataset_id}", code="NOT_FOUND")
        return d

    def _session(session_id: str) -> Session:
        s = store.sessions.get(session_id)
        if s is None:
            raise SessionError(f"unknown session {session_id}", code="NOT_FOUND")
        return s

    def _session_lock(session_id: str) -> threading.Lock:
        return store.session_locks[session_id]

    def _start_job(fn) -> str:
        job_id = store.next_id("job", "job")
        store.jobs[job_id] = {"status": "running", "result": None, "error": None}
        record = store.jobs[job_id]

        def run():
            try:
                record["result"] = fn()
                record["status"] = "done"
            except (ParseError, ConstraintError, SessionError, ValidationError) as exc:
                record["error"] = {"code": getattr(exc, "code", "ERROR"), "message": str(exc)}
                record["status"] = "error"
            except Exception as exc:  # surface, do not kill the thread silently
                record["error"] = {"code": "INTERNAL", "message": repr(exc)}
                record["status"] = "error"

        threading.Thread(target=run, daemon=True).start()
        return job_id

    def _persist(session_id: str) -> None:
        session = store.sessions[session_id]
        out = Path(store.config.data_dir) / "sessions"
        out.mkdir(parents=True, exist_ok=True)
        schema = session.dataset.schema
        doc = {
            "format": "tacmine-session",
            "version": 1,
            "session_id": session_id,
            "dataset_id": store.session_dataset.get(session_id),
            "state_version": session.version,
            "globals": [io.constraint_to_doc(c) for c in session.global_constraints],
            "next_tactic_id": session.next_tactic_id,
            "tactics": io.tactic_set_to_doc(session.tactic_set(), schema,
                                            score=session.score()),
        }
        path = out / f"{session_id}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def _store_preview(session_id: str, diff) -> str:
        preview_id = "pv-" + uuid.uuid4().hex[:12]
        store.previews[preview_id] = (session_id, diff)
        return preview_id

    def _preview_payload(session: Session, preview_id: str, diff) -> dict:
        return {"preview_id": preview_id, "diff": _diff_doc(diff, session.dataset.schema)}

    # -- endpoints ----------------------------------------------------------

    @app.get("/health")
    async def health():
        return {"status": "ok", "service": "tacmine", "version": "0.1.0"}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(doc: dict = Body(...)):
        dataset = validate_dataset(doc)
        dataset_id = store.next_id("dataset", "ds")
        store.datasets[dataset_id] = dataset
        return {
            "dataset_id": dataset_id,
            "n_rallies": len(dataset.rallies),
            "k": dataset.schema.k,
        }

    @app.get("/datasets")
    async def list_datasets():
        return {
            "datasets": [
                {"dataset_id": did, "n_rallies": len(d.rallies), "k": d.schema.k}
                for did, d in sorted(store.datasets.items())
            ]
        }

    @app.get("/datasets/{dataset_id}")
    async def dataset_info(dataset_id: str):
        d = _dataset(dataset_id)
        return {
            "dataset_id": dataset_id,
            "n_rallies": len(d.rallies),
            "focal_player": d.focal_player,
            "schema": {
                "features": [
                    {"name": f.name, "values": list(f.values)} for f in d.schema.features
                ]
            },
        }

    @app.get("/datasets/{dataset_id}/rallies/{rally_id}")
    async def rally_info(dataset_id: str, rally_id: int):
        d = _dataset(dataset_id)
        try:
            r = d.rally(rally_id)
        except KeyError:
            raise SessionError(f"unknown rally {rally_id}", code="NOT_FOUND") from None
        return {
            "id": r.id,
            "server": r.server,
            "winner": r.winner,
            "events": [
                [d.schema.features[f].values[v] for f, v in enumerate(ev)]
                for ev in r.events
            ],
        }

    @app.post("/sessions", status_code=202)
    async def create_session(payload: dict = Body(...)):
        dataset_id = payload.get("dataset_id")
        if not dataset_id:
            raise SessionError("dataset_id is required", code="VALIDATION")
        dataset = _dataset(dataset_id)
        session_id = store.next_id("session", "sess")
        cfg = store.config
        miner_config = MinerConfig(
            seed=int(payload.get("seed", cfg.default_seed)),
            max_iterations=int(payload.get("max_iterations", cfg.max_iterations)),
            candidates_per_iteration=int(
                payload.get("candidates_per_iteration", cfg.candidates_per_iteration)
            ),
            max_tactic_length=int(payload.get("max_tactic_length", cfg.max_tactic_length)),
        )
        from .cover import MetricParams

        params = MetricParams(
            alpha=float(payload.get("alpha", cfg.alpha)),
            beta=float(payload.get("beta", cfg.beta)),
        )
        session = Session(session_id, dataset, base_params=params, config=miner_config)
        store.sessions[session_id] = session
        store.session_dataset[session_id] = dataset_id
        store.session_locks[session_id] = threading.Lock()

        def mine():
            with _session_lock(session_id):
                session.initial_mine()
            return _state_doc(session)

        job_id = _start_job(mine)
        return {"session_id": session_id, "job_id": job_id}

    @app.get("/jobs/{job_id}")
    async def job_status(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            raise SessionError(f"unknown job {job_id}", code="NOT_FOUND")
        return job

    @app.get("/sessions/{session_id}")
    async def session_state(session_id: str):
        return _state_doc(_session(session_id))

    @app.get("/sessions/{session_id}/projection")
    async def session_projection(session_id: str, channel: str = Query("freq")):
        return _projection_doc(_session(session_id), channel)

    @app.get("/sessions/{session_id}/tactics/{tactic_id}/usages")
    async def tactic_usages(session_id: str, tactic_id: int):
        session = _session(session_id)
        ts = session.tactic_set()
        try:
            length = len(ts.by_id(tactic_id))
        except KeyError:
            raise SessionError(f"unknown tactic {tactic_id}", code="NOT_FOUND") from None
        d = session.dataset
        result = cover(d, session.tactics, index=shared_index(d))
        usages = []
        for t, us in zip(session.tactics, result.usages):
            if t.id != tactic_id:
                continue
            for u in us:
                rally = d.rally(u.rally_id)
                usages.append({
                    "rally_id": u.rally_id,
                    "start": u.start,
                    "length": length,
                    "winner": rally.winner,
                    "focal_won": rally.winner == d.focal_player,
                })
        return {"tactic_id": tactic_id, "usages": usages}

    @app.post("/sessions/{session_id}/preview")
    async def preview(session_id: str, payload: dict = Body(...)):
        session = _session(session_id)
        doc = payload.get("constraint")
        if doc is None:
            raise SessionError("constraint is required", code="VALIDATION")
        constraint = io.constraint_from_doc(doc)
        if is_global(constraint):
            def run():
                with _session_lock(session_id):
                    diff = session.preview(constraint)
                preview_id = _store_preview(session_id, diff)
                return _preview_payload(session, preview_id, diff)

            return {"job_id": _start_job(run)}
        with _session_lock(session_id):
            diff = session.preview(constraint)
        preview_id = _store_preview(session_id, diff)
        return _preview_payload(session, preview_id, diff)

    @app.post("/sessions/{session_id}/suggest")
    async def suggest(session_id: str, payload: dict = Body(...)):
        session = _session(session_id)
        text = payload.get("text", "")
        selected = tuple(int(x) for x in payload.get("selected_ids", ()))
        parsed = parse(text, context_from_session(session, selected))
        parsed_doc = {
            "constraint": io.constraint_to_doc(parsed.constraint),
            "confidence": parsed.confidence,
            "template": parsed.template,
            "slot_spans": {
                name: [list(span) for span in spans]
                for name, spans in parsed.slot_spans.items()
            },
        }
        if is_global(parsed.constraint):
            constraint = parsed.constraint

            def run():
                with _session_lock(session_id):
                    diff = session.preview(constraint)
                preview_id = _store_preview(session_id, diff)
                return _preview_payload(session, preview_id, diff)

            return {"parsed": parsed_doc, "job_id": _start_job(run)}
        with _session_lock(session_id):
            diff = session.preview(parsed.constraint)
        preview_id = _store_preview(session_id, diff)
        response = _preview_payload(session, preview_id, diff)
        response["parsed"] = parsed_doc
        return response

    @app.post("/sessions/{session_id}/apply")
    async def apply(session_id: str, payload: dict = Body(...)):
        session = _session(session_id)
        preview_id = payload.get("preview_id")
        entry = store.previews.get(preview_id or "")
        if entry is None or entry[0] != session_id:
            raise SessionError(f"unknown preview {preview_id}", code="NOT_FOUND")
        _, diff = entry
        base_version = payload.get("base_version")
        if base_version is not None and int(base_version) != diff.base_version:
            raise StaleVersionError(expected=int(base_version), actual=diff.base_version)
        with _session_lock(session_id):
            session.apply(diff)
            store.previews = {
                pid: (sid, d) for pid, (sid, d) in store.previews.items()
                if sid != session_id
            }
            _persist(session_id)
        return _state_doc(session)

    @app.post("/sessions/{session_id}/undo")
    async def undo(session_id: str):
        session = _session(session_id)
        with _session_lock(session_id):
            entry = session.undo()
            _persist(session_id)
        return {
            "undone": io.constraint_to_doc(entry.constraint),
            "state": _state_doc(session),
        }

    @app.post("/sessions/{session_id}/pin")
    async def pin(session_id: str, payload: dict = Body(...)):
        session = _session(session_id)
        tactic_id = payload.get("tactic_id")
        if tactic_id is None:
            raise SessionError("tactic_id is required", code="VALIDATION")
        with _session_lock(session_id):
            session.pin(int(tactic_id), bool(payload.get("pinned", True)))
        return _state_doc(session)

    @app.get("/sessions/{session_id}/history")
    async def history(session_id: str):
        session = _session(session_id)
        return {
            "entries": [
                {
                    "constraint": io.constraint_to_doc(e.constraint),
                    "removed": list(e.removed),
                    "added": list(e.added_ids),
                    "old_score": e.old_score,
                    "new_score": e.new_score,
                }
                for e in session.history
            ]
        }

    @app.get("/sessions/{session_id}/export")
    async def export(session_id: str):
        session = _session(session_id)
        schema = session.dataset.schema
        return {
            "format": "tacmine-session",
            "version": 1,
            "session_id": session.id,
            "dataset_id": store.session_dataset.get(session_id),
            "state_version": session.version,
            "globals": [io.constraint_to_doc(c) for c in session.global_constraints],
            "next_tactic_id": session.next_tactic_id,
            "tactics": io.tactic_set_to_doc(session.tactic_set(), schema,
                                            score=session.score()),
            "history": [
                {
                    "constraint": io.constraint_to_doc(e.constraint),
                    "removed": list(e.removed),
                    "added": list(e.added_ids),
                }
                for e in session.history
            ],
        }

    return app


def serve(config: Optional[ServiceConfig] = None) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    if config is None:
        config = load_config()
    uvicorn.run(create_app(config), host=config.host, port=config.port)
