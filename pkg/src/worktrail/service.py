"""HTTP service over one workspace: the boundary the browser explorer uses.

A single writer lock serializes every mutation; reads take the same lock
briefly to see a consistent structure. Mutations return the committed
records plus all cascade validation reports in one response, and bump the
workspace revision by exactly one; clients long-poll ``/api/changes`` to
hear "workspace changed, revision N" and refetch what they display.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import persistence
from .commands import execute
from .domain import working_matrix
from .errors import WorktrailError
from .replay import (
    actions_between,
    diff_states,
    recover_session,
    replay_best_effort,
    state_hash,
)
from .sankey import build_graph, range_selection, render_svg
from .validation import validate
from .workspace import Workspace


class WorkspaceService:
    """Owns the workspace, the writer lock, and change notification."""

    def __init__(self, ws: Workspace, storage_dir: str | Path | None = None):
        self.ws = ws
        self.storage_dir = Path(storage_dir) if storage_dir else None
        self.lock = threading.RLock()
        self.changed = threading.Condition()

    def mutate(self, op: str, payload: dict) -> dict:
        with self.lock:
            result = execute(self.ws, op, payload)
            if self.storage_dir is not None:
                persistence.save_workspace(self.ws, self.storage_dir)
            revision = self.ws.revision
        with self.changed:
            self.changed.notify_all()
        return {"revision": revision, **result.to_dict()}

    def wait_for_change(self, after: int, timeout: float) -> int:
        deadline = time.monotonic() + timeout
        with self.changed:
            while self.ws.revision <= after:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self.changed.wait(remaining)
        return self.ws.revision


def _error_response(exc: WorktrailError) -> JSONResponse:
    codes = {
        "UnknownRef": 404,
        "FrozenVersion": 409,
        "ConfirmationRequired": 409,
        "RevertUnavailable": 409,
    }
    return JSONResponse(
        status_code=codes.get(exc.kind, 400), content={"error": exc.to_payload()}
    )


def _sanitized_report(ws: Workspace, unit_id: str) -> dict | None:
    """Cached report with the undo-last-edit offer stripped unless that edit
    is still revertible (nothing committed since)."""
    report = ws.report_cache.get(unit_id)
    if report is None:
        return None
    report = dict(report)
    offer = report.get("undo_last_edit")
    fresh = (
        ws.last_edit is not None
        and ws.last_edit["revision"] == ws.revision
        and offer is not None
        and offer.get("target") == ws.last_edit["ref"]
    )
    if not fresh:
        report["undo_last_edit"] = None
    return report


def unit_payload(ws: Workspace, unit_id: str) -> dict:
    unit = ws.units[unit_id]
    history = ws.effective_history(unit_id)
    local_ids = {r.id for r in unit.local_actions}
    return {
        "id": unit.id,
        "name": unit.name,
        "session": unit.session_id,
        "branch_parent": (
            {"unit": unit.branch_parent.unit_id, "prefix_len": unit.branch_parent.prefix_len}
            if unit.branch_parent
            else None
        ),
        "bookmarked": unit.bookmarked,
        "broken": unit.broken,
        "starred": bool(ws.live_annotations(unit.id)),
        "annotations": [a.to_dict() for a in ws.live_annotations(unit.id)],
        "history": [
            {**r.to_dict(), "inherited": r.id not in local_ids} for r in history
        ],
        "report": _sanitized_report(ws, unit.id),
    }


def session_payload(ws: Workspace, session_id: str) -> dict:
    s = ws.sessions[session_id]
    return {
        "id": s.id,
        "display_name": s.display_name,
        "base_name": s.base_name,
        "version": s.version,
        "parent": s.parent_id,
        "frozen": s.frozen,
        "units": list(s.unit_ids),
        "starred": bool(ws.live_annotations(s.id)),
        "annotations": [a.to_dict() for a in ws.live_annotations(s.id)],
    }


def create_app(service: WorkspaceService, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="worktrail", docs_url=None, redoc_url=None)

    @app.exception_handler(WorktrailError)
    async def engine_error(request: Request, exc: WorktrailError):
        return _error_response(exc)

    def ws() -> Workspace:
        return service.ws

    @app.get("/api/workspace")
    def get_workspace():
        with service.lock:
            w = ws()
            return {
                "project": w.project_name,
                "metadata": w.metadata,
                "domain": w.domain.name,
                "revision": w.revision,
                "sessions": [session_payload(w, sid) for sid in sorted(w.sessions, key=_num)],
                "units": {uid: unit_payload(w, uid) for uid in sorted(w.units, key=_num)},
            }

    @app.get("/api/revision")
    def get_revision():
        return {"revision": ws().revision}

    @app.get("/api/changes")
    def get_changes(after: int = 0, timeout: float = 25.0):
        revision = service.wait_for_change(after, min(timeout, 60.0))
        return {"revision": revision}

    @app.get("/api/sessions")
    def list_sessions():
        with service.lock:
            return [session_payload(ws(), sid) for sid in sorted(ws().sessions, key=_num)]

    @app.post("/api/sessions")
    def create_session(body: dict):
        return service.mutate("create-session", body)

    @app.post("/api/sessions/{sid}/save")
    def save_session(sid: str, body: dict | None = None):
        return service.mutate("save-session", {"session": sid, **(body or {})})

    @app.post("/api/sessions/{sid}/branch")
    def branch_session(sid: str, body: dict):
        return service.mutate("branch-session", {"session": sid, **body})

    @app.post("/api/sessions/{sid}/units")
    def create_unit(sid: str, body: dict):
        return service.mutate("create-unit", {"session": sid, **body})

    @app.get("/api/sessions/{sid}/recover")
    def recover(sid: str, cache: bool = True):
        with service.lock:
            return recover_session(ws(), sid, use_cache=cache)

    @app.get("/api/units/{uid}")
    def get_unit(uid: str):
        with service.lock:
            unit = ws().resolve_unit(uid)
            return unit_payload(ws(), unit.id)

    @app.post("/api/units/{uid}/branch")
    def branch_unit(uid: str, body: dict):
        return service.mutate("branch-unit", {"origin": uid, **body})

    @app.post("/api/units/{uid}/actions")
    def append_action(uid: str, body: dict):
        return service.mutate("append-action", {"unit": uid, **body})

    @app.get("/api/units/{uid}/replay")
    def replay_unit(uid: str, up_to: str | None = None):
        with service.lock:
            w = ws()
            unit = w.resolve_unit(uid)
            state, failures = replay_best_effort(w, unit.id, up_to)
            return {
                "unit": unit.id,
                "state": state.to_dict(),
                "hash": state_hash(state),
                "status": "broken" if failures else "ok",
                "failures": [f.to_dict() for f in failures],
            }

    @app.get("/api/units/{uid}/view")
    def view_unit(uid: str):
        """State plus the working matrix, for the unit canvas."""
        with service.lock:
            w = ws()
            unit = w.resolve_unit(uid)
            state, failures = replay_best_effort(w, unit.id)
            matrix, row_ids, columns = working_matrix(w.domain, state)
            return {
                "unit": unit.id,
                "state": state.to_dict(),
                "status": "broken" if failures else "ok",
                "matrix": matrix,
                "rows": row_ids,
                "columns": columns,
            }

    @app.get("/api/units/{uid}/validate")
    def validate_unit(uid: str):
        with service.lock:
            w = ws()
            unit = w.resolve_unit(uid)
            return validate(w, unit.id).to_dict()

    @app.post("/api/validate")
    def validate_all():
        with service.lock:
            w = ws()
            return [validate(w, uid).to_dict() for uid in sorted(w.units, key=_num)]

    @app.post("/api/edits")
    def post_edit(body: dict):
        command = body.pop("command", None)
        op = f"edit-{command}"
        from .commands import MUTATING_OPS

        if op not in MUTATING_OPS:
            raise HTTPException(status_code=400, detail=f"unknown edit command: {command}")
        return service.mutate(op, body)

    @app.post("/api/fixes/apply")
    def apply_fix(body: dict):
        return service.mutate("apply-fix", body)

    @app.post("/api/annotations")
    def annotate(body: dict):
        return service.mutate("annotate", body)

    @app.delete("/api/annotations/{aid}")
    def delete_annotation(aid: str):
        return service.mutate("delete-annotation", {"annotation": aid})

    @app.post("/api/bookmarks")
    def bookmark(body: dict):
        return service.mutate("set-bookmark", body)

    @app.get("/api/graph")
    def graph(level: str = "session", focus: str | None = None):
        with service.lock:
            return build_graph(ws(), level, focus).to_dict()

    @app.get("/api/graph.svg")
    def graph_svg(level: str = "session", focus: str | None = None):
        with service.lock:
            svg = render_svg(build_graph(ws(), level, focus))
        from fastapi.responses import Response

        return Response(content=svg, media_type="image/svg+xml")

    @app.get("/api/actions-between")
    def between(a: str, b: str):
        with service.lock:
            w = ws()
            records = actions_between(w, a, b)
            return {"a": a, "b": b, "records": [r.to_dict() for r in records]}

    @app.get("/api/range-selection")
    def range_sel(level: str, start: str, end: str, focus: str | None = None):
        with service.lock:
            w = ws()
            g = build_graph(w, level, focus)
            return range_selection(w, g, start, end)

    @app.get("/api/diff")
    def diff(a: str, b: str):
        with service.lock:
            w = ws()
            sa, _ = replay_best_effort(w, w.resolve_unit(a).id)
            sb, _ = replay_best_effort(w, w.resolve_unit(b).id)
            return {"a": a, "b": b, "diff": diff_states(sa, sb)}

    @app.get("/api/log")
    def event_log():
        with service.lock:
            return list(ws().event_log)

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def _num(ref: str) -> int:
    return int(ref[1:])


def serve(ws: Workspace, host: str, port: int, storage_dir=None, static_dir=None) -> None:
    import uvicorn

    service = WorkspaceService(ws, storage_dir)
    app = create_app(service, static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


__all__ = ["WorkspaceService", "create_app", "serve", "unit_payload", "session_payload"]
