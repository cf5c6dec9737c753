"""Shared command layer: one dispatch point for every mutating operation.

The CLI, the HTTP service, fixture scripts, and event-log replay all execute
through :func:`execute`, so semantics cannot drift between surfaces. Each
committed command appends one event-log entry, bumps the workspace revision
by exactly one, and runs the dependency checker synchronously; the result
bundles the committed records with every cascade validation report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import edits
from .domain import get_domain
from .errors import IntegrityError, UnknownRef
from .model import ActionRecord
from .replay import compute_snapshot
from .validation import ValidationReport, cascade_validate, validate, commit_report
from .workspace import Workspace

DEFAULT_AUTHOR = "analyst"


@dataclass
class CommandResult:
    op: str
    ids: dict[str, list[str]] = field(default_factory=dict)
    records: list[ActionRecord] = field(default_factory=list)
    reports: list[ValidationReport] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "ids": self.ids,
            "records": [r.to_dict() for r in self.records],
            "reports": [r.to_dict() for r in self.reports],
            "extra": self.extra,
        }


def new_workspace(
    project: str,
    base_session: str = "session",
    domain: str = "tabular",
    metadata: dict | None = None,
    clock=None,
    author: str = DEFAULT_AUTHOR,
) -> Workspace:
    ws = Workspace(
        project_name=project,
        domain=get_domain(domain),
        base_session=base_session,
        metadata=metadata,
        clock=clock,
    )
    entry = {
        "seq": 1,
        "ts": ws.sessions[ws.root_session_id].created_ts,
        "op": "init",
        "payload": {
            "project": project,
            "base_session": base_session,
            "domain": domain,
            "metadata": dict(metadata or {}),
            "author": author,
        },
        "result_ids": {"sessions": [ws.root_session_id]},
    }
    ws.event_log.append(entry)
    ws.revision = 1
    return ws


def _validate_fresh_units(ws: Workspace, unit_ids: list[str]) -> list[ValidationReport]:
    reports = []
    for uid in unit_ids:
        report = validate(ws, uid)
        commit_report(ws, report)
        reports.append(report)
    return reports


def execute(
    ws: Workspace,
    op: str,
    payload: dict,
    ts: int | None = None,
    expect_ids: dict | None = None,
) -> CommandResult:
    """Run one mutating command. ``ts`` pins the clock (used by log replay);
    ``expect_ids`` asserts the ids the command allocates (replay integrity)."""
    author = payload.get("author", DEFAULT_AUTHOR)
    # One timestamp per command: every clock read inside the transaction sees
    # the same value, so log replay reproduces records bit-for-bit.
    ts_value = ts if ts is not None else ws.clock()
    ws._ts_override = ts_value
    try:
        result = _dispatch(ws, op, payload, author)
    finally:
        ws._ts_override = None
    ws.revision += 1
    entry = {
        "seq": len(ws.event_log) + 1,
        "ts": ts_value,
        "op": op,
        "payload": payload,
        "result_ids": result.ids,
    }
    ws.event_log.append(entry)
    if expect_ids is not None and expect_ids != result.ids:
        raise IntegrityError(
            f"log replay diverged at seq {entry['seq']}: {expect_ids} != {result.ids}"
        )
    return result


def _dispatch(ws: Workspace, op: str, payload: dict, author: str) -> CommandResult:
    handler = _HANDLERS.get(op)
    if handler is None:
        raise UnknownRef(f"unknown operation: {op}")
    return handler(ws, payload, author)


def _op_create_unit(ws: Workspace, p: dict, author: str) -> CommandResult:
    unit = ws.create_unit(p["session"], p["name"], author)
    reports = _validate_fresh_units(ws, [unit.id])
    return CommandResult(
        "create-unit", ids={"units": [unit.id]}, reports=reports, extra={"unit": unit.id}
    )


def _op_branch_unit(ws: Workspace, p: dict, author: str) -> CommandResult:
    unit = ws.branch_unit(p["origin"], p["name"], author)
    reports = _validate_fresh_units(ws, [unit.id])
    return CommandResult(
        "branch-unit", ids={"units": [unit.id]}, reports=reports, extra={"unit": unit.id}
    )


def _op_append(ws: Workspace, p: dict, author: str) -> CommandResult:
    rec = ws.append_action(p["unit"], p["type"], p.get("params", {}), author)
    unit = ws.resolve_unit(p["unit"])
    edits.note_append_revert(ws, rec, unit.id, [unit.id])
    reports = cascade_validate(ws, [rec.id], [unit.id], trigger=rec.id, edit_revertible=True)
    return CommandResult(
        "append-action", ids={"records": [rec.id]}, records=[rec], reports=reports
    )


def _op_annotate(ws: Workspace, p: dict, author: str) -> CommandResult:
    ann = ws.annotate(p["target"], p["text"], author)
    return CommandResult(
        "annotate",
        ids={"annotations": [ann.id], "records": [ann.record_id]},
        records=[ws.find_record(ann.record_id)],
        extra={"annotation": ann.id},
    )


def _op_delete_annotation(ws: Workspace, p: dict, author: str) -> CommandResult:
    ann = ws.delete_annotation(p["annotation"], author)
    return CommandResult("delete-annotation", ids={"annotations": [ann.id]})


def _op_bookmark(ws: Workspace, p: dict, author: str) -> CommandResult:
    unit = ws.set_bookmark(p["unit"], bool(p.get("value", True)), author)
    return CommandResult("set-bookmark", ids={"units": [unit.id]})


def _op_save_session(ws: Workspace, p: dict, author: str) -> CommandResult:
    parent = ws.resolve_session(p["session"])
    ws.check_unfrozen(parent)
    snapshot = compute_snapshot(ws, parent.id, label=parent.display_name)
    child = ws.save_session(parent.id, author, snapshot)
    reports = _validate_fresh_units(ws, list(child.unit_ids))
    return CommandResult(
        "save-session",
        ids={"sessions": [child.id], "units": list(child.unit_ids)},
        reports=reports,
        extra={"session": child.id, "display_name": child.display_name},
    )


def _op_branch_session(ws: Workspace, p: dict, author: str) -> CommandResult:
    child = ws.branch_session(p["session"], p["base_name"], author)
    reports = _validate_fresh_units(ws, list(child.unit_ids))
    return CommandResult(
        "branch-session",
        ids={"sessions": [child.id], "units": list(child.unit_ids)},
        reports=reports,
        extra={"session": child.id, "display_name": child.display_name},
    )


def _op_create_session(ws: Workspace, p: dict, author: str) -> CommandResult:
    session = ws.create_session(p["base_name"], author)
    return CommandResult(
        "create-session",
        ids={"sessions": [session.id]},
        extra={"session": session.id, "display_name": session.display_name},
    )


def _edit_result(ws: Workspace, op: str, outcome: edits.EditOutcome) -> CommandResult:
    reports = cascade_validate(
        ws,
        outcome.touched,
        outcome.affected,
        trigger=outcome.history_record.id,
        edit_revertible=True,
        force_walk=outcome.structural,
    )
    return CommandResult(
        op,
        ids={
            "records": [outcome.history_record.id]
            + [r.id for r in outcome.new_records],
        },
        records=[outcome.history_record] + outcome.new_records,
        reports=reports,
    )


def _op_undo(ws, p, author):
    return _edit_result(ws, "edit-undo", edits.undo(ws, p["unit"], author))


def _op_redo(ws, p, author):
    return _edit_result(ws, "edit-redo", edits.redo(ws, p["unit"], p.get("record"), author))


def _op_selective_undo(ws, p, author):
    return _edit_result(
        ws, "edit-selective-undo", edits.selective_undo(ws, p["unit"], p["record"], author)
    )


def _op_skip(ws, p, author):
    return _edit_result(ws, "edit-skip", edits.skip(ws, p["unit"], p["record"], author))


def _op_unskip(ws, p, author):
    return _edit_result(ws, "edit-unskip", edits.unskip(ws, p["unit"], p["record"], author))


def _op_delete(ws, p, author):
    return _edit_result(
        ws,
        "edit-delete",
        edits.delete_action(ws, p["unit"], p["record"], author, confirm=bool(p.get("confirm"))),
    )


def _op_insert(ws, p, author):
    return _edit_result(
        ws,
        "edit-insert",
        edits.insert_action(ws, p["unit"], p["type"], p.get("params", {}), int(p["at"]), author),
    )


def _op_copy(ws, p, author):
    return _edit_result(
        ws,
        "edit-copy",
        edits.copy_range(ws, p["src"], p["first"], p["last"], p["dst"], int(p["at"]), author),
    )


def _op_move(ws, p, author):
    return _edit_result(
        ws,
        "edit-move",
        edits.move_range(ws, p["src"], p["first"], p["last"], p["dst"], int(p["at"]), author),
    )


def _op_cut(ws, p, author):
    return _edit_result(ws, "edit-cut", edits.cut_range(ws, p["src"], p["first"], p["last"], author))


def _op_paste(ws, p, author):
    return _edit_result(ws, "edit-paste", edits.paste(ws, p["dst"], int(p["at"]), author))


def _op_apply_fix(ws: Workspace, p: dict, author: str) -> CommandResult:
    kind = p["kind"]
    if kind == "redo-record":
        return _edit_result(ws, "apply-fix", edits.redo(ws, p["unit"], p["target"], author))
    if kind == "unskip-record":
        return _edit_result(ws, "apply-fix", edits.unskip(ws, p["unit"], p["target"], author))
    if kind == "undo-last-edit":
        outcome = edits.revert_last_edit(ws, author, expected_ref=p.get("target"))
        reports = []
        for uid in outcome.affected:
            report = validate(ws, uid, trigger=outcome.history_record.id)
            commit_report(ws, report)
            reports.append(report)
        return CommandResult(
            "apply-fix",
            ids={"records": [outcome.history_record.id]},
            records=[outcome.history_record],
            reports=reports,
        )
    raise UnknownRef(f"unknown fix kind: {kind}")


_HANDLERS = {
    "create-unit": _op_create_unit,
    "branch-unit": _op_branch_unit,
    "append-action": _op_append,
    "annotate": _op_annotate,
    "delete-annotation": _op_delete_annotation,
    "set-bookmark": _op_bookmark,
    "save-session": _op_save_session,
    "branch-session": _op_branch_session,
    "create-session": _op_create_session,
    "edit-undo": _op_undo,
    "edit-redo": _op_redo,
    "edit-selective-undo": _op_selective_undo,
    "edit-skip": _op_skip,
    "edit-unskip": _op_unskip,
    "edit-delete": _op_delete,
    "edit-insert": _op_insert,
    "edit-copy": _op_copy,
    "edit-move": _op_move,
    "edit-cut": _op_cut,
    "edit-paste": _op_paste,
    "apply-fix": _op_apply_fix,
}

MUTATING_OPS = sorted(_HANDLERS)
