"""Workspace persistence: a structured-text document plus an event log.

The event log is the source of truth: replaying it from genesis rebuilds an
identical workspace (same ids, same timestamps, same states). The document
file is a checkpoint cache that loads fast and diffs cleanly: UTF-8 JSON
with sorted keys and LF newlines.

A workspace on disk is a directory::

    <workspace>/workspace.json   checkpoint document
    <workspace>/events.jsonl     append-only command log
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .commands import execute, new_workspace
from .domain import get_domain
from .errors import FormatError
from .model import (
    ActionRecord,
    Annotation,
    BranchPoint,
    Session,
    Snapshot,
    Unit,
)
from .workspace import Clipboard, Workspace

FORMAT_VERSION = 1
DOC_NAME = "workspace.json"
LOG_NAME = "events.jsonl"


def _session_to_dict(s: Session) -> dict:
    return {
        "id": s.id,
        "base_name": s.base_name,
        "version": s.version,
        "parent": s.parent_id,
        "frozen": s.frozen,
        "created_ts": s.created_ts,
        "units": list(s.unit_ids),
        "session_actions": [r.to_dict() for r in s.session_actions],
        "annotations": list(s.annotation_ids),
        "baseline_record_ids": sorted(s.baseline_record_ids),
        "snapshot": s.snapshot.to_dict() if s.snapshot else None,
    }


def _session_from_dict(d: dict) -> Session:
    return Session(
        id=d["id"],
        base_name=d["base_name"],
        version=d["version"],
        parent_id=d["parent"],
        frozen=d["frozen"],
        created_ts=d["created_ts"],
        unit_ids=list(d["units"]),
        session_actions=[ActionRecord.from_dict(r) for r in d["session_actions"]],
        annotation_ids=list(d["annotations"]),
        baseline_record_ids=set(d["baseline_record_ids"]),
        snapshot=Snapshot.from_dict(d["snapshot"]) if d.get("snapshot") else None,
    )


def _unit_to_dict(u: Unit) -> dict:
    return {
        "id": u.id,
        "name": u.name,
        "session": u.session_id,
        "branch_parent": (
            {"unit": u.branch_parent.unit_id, "prefix_len": u.branch_parent.prefix_len}
            if u.branch_parent
            else None
        ),
        "local_actions": [r.to_dict() for r in u.local_actions],
        "annotations": list(u.annotation_ids),
        "bookmarked": u.bookmarked,
        "broken": u.broken,
    }


def _unit_from_dict(d: dict) -> Unit:
    bp = d.get("branch_parent")
    return Unit(
        id=d["id"],
        name=d["name"],
        session_id=d["session"],
        branch_parent=BranchPoint(bp["unit"], bp["prefix_len"]) if bp else None,
        local_actions=[ActionRecord.from_dict(r) for r in d["local_actions"]],
        annotation_ids=list(d["annotations"]),
        bookmarked=d["bookmarked"],
        broken=d["broken"],
    )


def log_lines(ws: Workspace) -> list[str]:
    return [json.dumps(e, sort_keys=True, separators=(",", ":")) for e in ws.event_log]


def log_checksum(lines: list[str]) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def workspace_to_doc(ws: Workspace) -> dict:
    lines = log_lines(ws)
    return {
        "format_version": FORMAT_VERSION,
        "project": {"name": ws.project_name, "metadata": ws.metadata},
        "domain": ws.domain.name,
        "revision": ws.revision,
        "counters": dict(ws.counters),
        "root_session": ws.root_session_id,
        "sessions": [_session_to_dict(ws.sessions[sid]) for sid in sorted(ws.sessions, key=_num)],
        "units": [_unit_to_dict(ws.units[uid]) for uid in sorted(ws.units, key=_num)],
        "annotations": [ws.annotations[aid].to_dict() for aid in sorted(ws.annotations, key=_num)],
        "deleted_records": {k: ws.deleted_records[k] for k in sorted(ws.deleted_records, key=_num)},
        "clipboard": (
            {"records": [r.to_dict() for r in ws.clipboard.records], "src_unit": ws.clipboard.src_unit}
            if ws.clipboard
            else None
        ),
        "report_cache": {k: ws.report_cache[k] for k in sorted(ws.report_cache, key=_num)},
        "last_edit": ws.last_edit,
        "event_log": {"entries": len(lines), "checksum": log_checksum(lines)},
    }


def _num(ref: str) -> int:
    return int(ref[1:])


def workspace_from_doc(doc: dict) -> Workspace:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported workspace format version: {version!r}")
    domain = get_domain(doc["domain"])
    ws = Workspace.__new__(Workspace)
    ws.project_name = doc["project"]["name"]
    ws.metadata = dict(doc["project"]["metadata"])
    ws.domain = domain
    from .model import ActionTypeRegistry

    ws.registry = ActionTypeRegistry()
    ws.registry.add_domain(domain.capabilities, domain.action_types)
    from .workspace import wall_clock_ms

    ws.clock = wall_clock_ms
    ws._ts_override = None
    ws.counters = dict(doc["counters"])
    ws.revision = doc["revision"]
    ws.sessions = {}
    ws.units = {}
    ws.annotations = {}
    ws.deleted_records = dict(doc["deleted_records"])
    ws.clipboard = None
    if doc.get("clipboard"):
        ws.clipboard = Clipboard(
            [ActionRecord.from_dict(r) for r in doc["clipboard"]["records"]],
            doc["clipboard"]["src_unit"],
        )
    ws.report_cache = dict(doc["report_cache"])
    ws.last_edit = doc.get("last_edit")
    ws.event_log = []
    ws.root_session_id = doc["root_session"]
    ws._record_owner = {}
    ws._children = {}
    for sd in doc["sessions"]:
        s = _session_from_dict(sd)
        ws.sessions[s.id] = s
        for r in s.session_actions:
            ws._record_owner[r.id] = ("session", s.id)
    for ud in doc["units"]:
        u = _unit_from_dict(ud)
        ws.units[u.id] = u
        for r in u.local_actions:
            ws._record_owner[r.id] = ("unit", u.id)
    for u in ws.units.values():  # children in unit-creation order
        if u.branch_parent:
            ws._children.setdefault(u.branch_parent.unit_id, []).append(u.id)
    for uid in sorted(ws._children, key=_num):
        ws._children[uid].sort(key=_num)
    for ad in doc["annotations"]:
        ann = Annotation.from_dict(ad)
        ws.annotations[ann.id] = ann
    return ws


def dump_doc(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_workspace(ws: Workspace, path: str | Path) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / DOC_NAME).write_text(dump_doc(workspace_to_doc(ws)), encoding="utf-8", newline="\n")
    (root / LOG_NAME).write_text(
        "".join(line + "\n" for line in log_lines(ws)), encoding="utf-8", newline="\n"
    )
    return root


def load_workspace(path: str | Path) -> Workspace:
    root = Path(path)
    doc_path = root / DOC_NAME
    if not doc_path.exists():
        raise FormatError(f"no workspace document at {doc_path}")
    try:
        doc = json.loads(doc_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"workspace document parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    ws = workspace_from_doc(doc)
    log_path = root / LOG_NAME
    if log_path.exists():
        lines = [ln for ln in log_path.read_text(encoding="utf-8").splitlines() if ln]
        expect = doc.get("event_log", {})
        if expect.get("entries") != len(lines) or expect.get("checksum") != log_checksum(lines):
            raise FormatError("event log does not match the workspace checkpoint (checksum mismatch)")
        ws.event_log = [json.loads(ln) for ln in lines]
    return ws


def replay_log(entries: list[dict]) -> Workspace:
    """Rebuild a workspace by running the logged commands from genesis.
    Allocated ids are checked against the log as replay integrity."""
    if not entries or entries[0]["op"] != "init":
        raise FormatError("event log must start with an init entry")
    head = entries[0]
    p = head["payload"]
    ws = new_workspace(
        project=p["project"],
        base_session=p["base_session"],
        domain=p["domain"],
        metadata=p.get("metadata"),
        author=p.get("author", "analyst"),
        clock=lambda: head["ts"],
    )
    ws.sessions[ws.root_session_id].created_ts = head["ts"]
    for entry in entries[1:]:
        execute(ws, entry["op"], entry["payload"], ts=entry["ts"], expect_ids=entry["result_ids"])
    return ws


def replay_log_file(path: str | Path) -> Workspace:
    log_path = Path(path) / LOG_NAME if Path(path).is_dir() else Path(path)
    lines = [ln for ln in log_path.read_text(encoding="utf-8").splitlines() if ln]
    return replay_log([json.loads(ln) for ln in lines])
