"""History editing: undo, redo, selective undo, skip, delete, insert, and
copy/move/cut/paste of action ranges between units.

Edits follow the script/replay model: they flip record statuses or
restructure local lists and leave state recomputation to the replay engine.
Every edit appends exactly one history-category record to the unit it acts
on, and records an inverse (a list of primitive steps) so the engine can
offer "undo the last action" when an edit just broke a pipeline.

Status flips on inherited records mutate the shared record and therefore
every unit inheriting it; physical removal is reserved for records local to
the edited unit. Moving a record out of a shared (inherited) prefix flips it
to undone at the origin and inserts a fresh copy at the destination, so
sibling branches see an explicit status change instead of a silently
restructured history.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    BadRange,
    BadStatus,
    ConfirmationRequired,
    EmptyClipboard,
    EmptyUndoStack,
    NothingToRedo,
    SharedPrefixDelete,
    UnknownRef,
    WorktrailError,
)
from .model import ActionCategory, ActionRecord, RecordStatus, Unit
from .validation import validate
from .workspace import Clipboard, Workspace


class RevertUnavailable(WorktrailError):
    kind = "RevertUnavailable"


@dataclass
class EditOutcome:
    history_record: ActionRecord
    touched: list[str]  # record ids whose status/position changed
    affected: list[str]  # unit ids to re-validate
    new_records: list[ActionRecord] = field(default_factory=list)
    # structural edits relocate records, so cached reports (and their failure
    # positions) cannot be trusted even when no touched type needs checking
    structural: bool = False


def _set_last_edit(ws: Workspace, hist: ActionRecord, unit_id: str, inverse: list, affected: list[str]) -> None:
    ws.last_edit = {
        "ref": hist.id,
        "unit": unit_id,
        "inverse": inverse,
        "affected": list(affected),
        "revision": ws.revision + 1,  # the revision this edit commits as
    }


def note_append_revert(ws: Workspace, rec: ActionRecord, unit_id: str, affected: list[str]) -> None:
    """Make a plain append revertible: reverting deactivates the appended
    record (the record itself stays, histories are append-only)."""
    _set_last_edit(ws, rec, unit_id, [["status", rec.id, RecordStatus.UNDONE.value]], affected)


def _flip(rec: ActionRecord, to: RecordStatus, inverse: list) -> None:
    inverse.append(["status", rec.id, rec.status.value])
    rec.status = to


def _locate(ws: Workspace, unit: Unit, record_id: str) -> tuple[int, ActionRecord]:
    idx = ws.record_in_history(unit.id, record_id)
    if idx is None:
        raise UnknownRef(f"record {record_id} not in history of unit {unit.id}")
    return idx, ws.effective_history(unit.id)[idx]


def undo(ws: Workspace, unit_ref: str, author: str) -> EditOutcome:
    """Tail undo: deactivate the unit's most recent active local action
    (history bookkeeping records are not undo targets)."""
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    target = next(
        (
            r
            for r in reversed(unit.local_actions)
            if r.status == RecordStatus.ACTIVE and r.category != ActionCategory.HISTORY
        ),
        None,
    )
    if target is None:
        raise EmptyUndoStack(f"unit {unit.id} has no active local action to undo")
    ws.check_record_mutable(target.id)
    inverse: list = []
    _flip(target, RecordStatus.UNDONE, inverse)
    affected = ws.units_sharing(target.id)
    hist = ws.log_record("unit", unit.id, "undo", {"record": target.id}, author)
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [target.id], affected)


def selective_undo(ws: Workspace, unit_ref: str, record_id: str, author: str) -> EditOutcome:
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    _, rec = _locate(ws, unit, record_id)
    if rec.status != RecordStatus.ACTIVE:
        raise BadStatus(f"record {record_id} is already {rec.status.value}")
    ws.check_record_mutable(rec.id)
    affected = ws.units_sharing(rec.id)
    inverse: list = []
    _flip(rec, RecordStatus.UNDONE, inverse)
    hist = ws.log_record("unit", unit.id, "selective-undo", {"record": rec.id}, author)
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [rec.id], affected)


def redo(ws: Workspace, unit_ref: str, record_id: str | None, author: str) -> EditOutcome:
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    if record_id is None:
        record_id = _latest_undone(ws, unit)
        if record_id is None:
            raise NothingToRedo(f"unit {unit.id} has nothing undone to redo")
    _, rec = _locate(ws, unit, record_id)
    if rec.status == RecordStatus.ACTIVE:
        raise BadStatus(f"record {record_id} is active already")
    if rec.status == RecordStatus.SKIPPED:
        raise BadStatus(f"record {record_id} is skipped; unskip it instead")
    ws.check_record_mutable(rec.id)
    affected = ws.units_sharing(rec.id)
    inverse: list = []
    _flip(rec, RecordStatus.ACTIVE, inverse)
    hist = ws.log_record("unit", unit.id, "redo", {"record": rec.id}, author)
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [rec.id], affected)


def _latest_undone(ws: Workspace, unit: Unit) -> str | None:
    """Most recently undone record, read off the unit's own edit trail."""
    for r in reversed(unit.local_actions):
        if r.category != ActionCategory.HISTORY or r.type_name not in ("undo", "selective-undo"):
            continue
        target_id = r.params.get("record")
        try:
            target = ws.find_record(target_id)
        except UnknownRef:
            continue
        if target.status == RecordStatus.UNDONE:
            return target_id
    return None


def skip(ws: Workspace, unit_ref: str, record_id: str, author: str) -> EditOutcome:
    return _flip_op(ws, unit_ref, record_id, author, "skip", RecordStatus.ACTIVE, RecordStatus.SKIPPED)


def unskip(ws: Workspace, unit_ref: str, record_id: str, author: str) -> EditOutcome:
    return _flip_op(ws, unit_ref, record_id, author, "unskip", RecordStatus.SKIPPED, RecordStatus.ACTIVE)


def _flip_op(
    ws: Workspace,
    unit_ref: str,
    record_id: str,
    author: str,
    op: str,
    want: RecordStatus,
    to: RecordStatus,
) -> EditOutcome:
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    _, rec = _locate(ws, unit, record_id)
    if rec.status != want:
        raise BadStatus(f"record {record_id} is {rec.status.value}, expected {want.value}")
    ws.check_record_mutable(rec.id)
    affected = ws.units_sharing(rec.id)
    inverse: list = []
    _flip(rec, to, inverse)
    hist = ws.log_record("unit", unit.id, op, {"record": rec.id}, author)
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [rec.id], affected)


def delete_action(
    ws: Workspace, unit_ref: str, record_id: str, author: str, confirm: bool = False
) -> EditOutcome:
    """Physically remove a record local to the unit. Inherited records can
    only be status-flipped. A delete whose validation verdict would be
    broken requires ``confirm``; the structure is untouched otherwise."""
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    if ws.record_in_history(unit.id, record_id) is None:
        raise UnknownRef(f"record {record_id} not in history of unit {unit.id}")
    local_index = next((i for i, r in enumerate(unit.local_actions) if r.id == record_id), None)
    if local_index is None:
        raise SharedPrefixDelete(
            f"record {record_id} is inherited; flip its status instead of deleting"
        )
    ws.check_record_mutable(record_id)
    affected = ws.units_sharing(record_id)
    rec, shifted = ws.remove_local(unit, local_index)
    would_break = any(validate(ws, uid).status == "broken" for uid in affected)
    if would_break and not confirm:
        ws.restore_local(unit, local_index, rec, shifted)
        raise ConfirmationRequired(
            f"deleting {record_id} breaks a pipeline; pass confirm to proceed"
        )
    ws.deleted_records[rec.id] = {
        "record": rec.to_dict(),
        "unit": unit.id,
        "local_index": local_index,
        "deleted_at": ws.now(),
        "author": author,
    }
    inverse: list = [
        ["insert-local", unit.id, local_index, rec.to_dict(), shifted],
        ["unarchive", rec.id],
    ]
    hist = ws.log_record(
        "unit", unit.id, "delete-action", {"record": rec.id, "type": rec.type_name}, author
    )
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [rec.id], affected, structural=True)


def insert_action(
    ws: Workspace, unit_ref: str, type_name: str, params: dict, at_index: int, author: str
) -> EditOutcome:
    """Insert a new action mid-history (at a local position)."""
    unit = ws.resolve_unit(unit_ref)
    ws.check_unfrozen(ws.sessions[unit.session_id])
    if not 0 <= at_index <= len(unit.local_actions):
        raise BadRange(f"insertion index {at_index} out of range")
    ws.check_insert_position(unit, at_index)
    # Reuse append-side checks, then relocate the record.
    rec = ws.append_action(unit.id, type_name, params, author)
    unit.local_actions.pop()
    ws._record_owner.pop(rec.id, None)
    ws.insert_local(unit, at_index, rec)
    inverse: list = [["remove-local", unit.id, at_index]]
    affected = ws.units_sharing(rec.id)
    hist = ws.log_record(
        "unit", unit.id, "paste-actions", {"inserted": [rec.id], "at": at_index}, author,
        note="insert",
    )
    _set_last_edit(ws, hist, unit.id, inverse, affected)
    return EditOutcome(hist, [rec.id], affected, new_records=[rec], structural=True)


def _resolve_range(
    ws: Workspace, unit: Unit, first_id: str, last_id: str
) -> list[tuple[int, ActionRecord]]:
    eff = ws.effective_history(unit.id)
    by_id = {r.id: i for i, r in enumerate(eff)}
    if first_id not in by_id or last_id not in by_id:
        raise UnknownRef(f"range endpoints not in history of unit {unit.id}")
    i, j = sorted((by_id[first_id], by_id[last_id]))
    return [(k, eff[k]) for k in range(i, j + 1)]


def _split_travel(
    ws: Workspace, unit: Unit, rng: list[tuple[int, ActionRecord]]
) -> tuple[list[ActionRecord], set[str]]:
    """Non-history records of the range, plus which of them are local to the
    unit. History bookkeeping records never travel."""
    travel = [r for _, r in rng if r.category != ActionCategory.HISTORY]
    if not travel:
        raise BadRange("selected range contains no transferable records")
    local_ids = {r.id for r in unit.local_actions}
    return travel, {r.id for r in travel if r.id in local_ids}


def _clone(ws: Workspace, rec: ActionRecord, note: str, status: RecordStatus) -> ActionRecord:
    return ActionRecord(
        id=ws._next_id("a"),
        type_name=rec.type_name,
        category=rec.category,
        params=dict(rec.params),
        ts=rec.ts,  # provenance: original timestamps travel with the action
        author=rec.author,
        status=status,
        note=note,
    )


def _check_same_unit_overlap(
    unit: Unit, local_ids: set[str], at_index: int
) -> tuple[int, int]:
    positions = [i for i, r in enumerate(unit.local_actions) if r.id in local_ids]
    if not positions:
        return -1, -1
    lo, hi = min(positions), max(positions)
    if lo < at_index <= hi:
        raise BadRange("insertion position overlaps the selected range")
    return lo, hi


def copy_range(
    ws: Workspace,
    src_ref: str,
    first_id: str,
    last_id: str,
    dst_ref: str,
    at_index: int,
    author: str,
) -> EditOutcome:
    """Duplicate a contiguous range into ``dst``. Copies are fresh active
    records with the original parameters; the source is never mutated."""
    src = ws.resolve_unit(src_ref)
    dst = ws.resolve_unit(dst_ref)
    ws.check_unfrozen(ws.sessions[dst.session_id])
    rng = _resolve_range(ws, src, first_id, last_id)
    travel, local_ids = _split_travel(ws, src, rng)
    if not 0 <= at_index <= len(dst.local_actions):
        raise BadRange(f"insertion index {at_index} out of range")
    if src.id == dst.id:
        _check_same_unit_overlap(src, local_ids, at_index)
    ws.check_insert_position(dst, at_index)
    clones = [
        _clone(ws, r, note=f"copied from {src.id}:{r.id}", status=RecordStatus.ACTIVE)
        for r in travel
    ]
    inverse: list = []
    for k, rec in enumerate(clones):
        ws.insert_local(dst, at_index + k, rec)
        inverse.append(["remove-local", dst.id, at_index + k])
    hist = ws.log_record(
        "unit",
        dst.id,
        "copy-actions",
        {"source": src.id, "records": [r.id for r in travel], "inserted": [c.id for c in clones], "at": at_index},
        author,
    )
    affected = _union_sharing(ws, [c.id for c in clones])
    _set_last_edit(ws, hist, dst.id, inverse, affected)
    return EditOutcome(hist, [c.id for c in clones], affected, new_records=clones, structural=True)


def _union_sharing(ws: Workspace, record_ids: list[str]) -> list[str]:
    out: list[str] = []
    for rid in record_ids:
        for uid in ws.units_sharing(rid):
            if uid not in out:
                out.append(uid)
    return out


def _extract(
    ws: Workspace,
    src: Unit,
    travel: list[ActionRecord],
    local_ids: set[str],
    note: str,
    inverse: list,
) -> list[ActionRecord]:
    """Take the travelling records out of ``src``: local ones are physically
    removed (and reused), inherited ones are flipped to undone and cloned.
    All preconditions are checked before the first mutation."""
    for rec in travel:
        ws.check_record_mutable(rec.id)  # owner live, no frozen sharers
    outgoing: dict[str, ActionRecord] = {}
    local_travel = [r for r in travel if r.id in local_ids]
    for rec in reversed(local_travel):
        idx = next(i for i, r in enumerate(src.local_actions) if r.id == rec.id)
        _, shifted = ws.remove_local(src, idx)
        inverse.append(["insert-local", src.id, idx, rec.to_dict(), shifted])
        outgoing[rec.id] = rec
    for rec in travel:
        if rec.id in local_ids:
            continue
        clone = _clone(ws, rec, note=f"{note} {src.id}:{rec.id}", status=rec.status)
        if rec.status == RecordStatus.ACTIVE:
            _flip(rec, RecordStatus.UNDONE, inverse)
        outgoing[rec.id] = clone
    return [outgoing[r.id] for r in travel]


def move_range(
    ws: Workspace,
    src_ref: str,
    first_id: str,
    last_id: str,
    dst_ref: str,
    at_index: int,
    author: str,
) -> EditOutcome:
    src = ws.resolve_unit(src_ref)
    dst = ws.resolve_unit(dst_ref)
    ws.check_unfrozen(ws.sessions[src.session_id])
    ws.check_unfrozen(ws.sessions[dst.session_id])
    rng = _resolve_range(ws, src, first_id, last_id)
    travel, local_ids = _split_travel(ws, src, rng)
    if not 0 <= at_index <= len(dst.local_actions):
        raise BadRange(f"insertion index {at_index} out of range")
    pre_affected = _union_sharing(ws, [r.id for r in travel])
    adjusted = at_index
    if src.id == dst.id:
        lo, hi = _check_same_unit_overlap(src, local_ids, at_index)
        if lo >= 0 and at_index > hi:
            adjusted = at_index - len([r for r in travel if r.id in local_ids])
    ws.check_insert_position(dst, adjusted)
    inverse: list = []
    arrivals = _extract(ws, src, travel, local_ids, note="moved from", inverse=inverse)
    for k, rec in enumerate(arrivals):
        ws.insert_local(dst, adjusted + k, rec)
        inverse.append(["remove-local", dst.id, adjusted + k])
    hist = ws.log_record(
        "unit",
        dst.id,
        "move-actions",
        {"source": src.id, "records": [r.id for r in travel], "inserted": [a.id for a in arrivals], "at": at_index},
        author,
    )
    affected = list(dict.fromkeys(pre_affected + _union_sharing(ws, [a.id for a in arrivals])))
    _set_last_edit(ws, hist, dst.id, inverse, affected)
    touched = [a.id for a in arrivals] + [r.id for r in travel if r.id not in local_ids]
    return EditOutcome(hist, touched, affected, new_records=arrivals, structural=True)


def cut_range(ws: Workspace, src_ref: str, first_id: str, last_id: str, author: str) -> EditOutcome:
    src = ws.resolve_unit(src_ref)
    ws.check_unfrozen(ws.sessions[src.session_id])
    rng = _resolve_range(ws, src, first_id, last_id)
    travel, local_ids = _split_travel(ws, src, rng)
    pre_affected = _union_sharing(ws, [r.id for r in travel])
    inverse: list = [["clipboard", _clipboard_dict(ws.clipboard)]]
    if ws.clipboard is not None:
        # a new cut displaces unpasted records; tombstone them so their ids
        # stay resolvable
        for rec in ws.clipboard.records:
            ws.deleted_records[rec.id] = {
                "record": rec.to_dict(),
                "unit": ws.clipboard.src_unit,
                "local_index": None,
                "deleted_at": ws.now(),
                "author": author,
            }
            inverse.append(["unarchive", rec.id])
    arrivals = _extract(ws, src, travel, local_ids, note="cut from", inverse=inverse)
    ws.clipboard = Clipboard(arrivals, src.id)
    hist = ws.log_record(
        "unit", src.id, "cut-actions", {"records": [r.id for r in travel]}, author
    )
    _set_last_edit(ws, hist, src.id, inverse, pre_affected)
    touched = [r.id for r in travel]  # removed locals included: src re-walks
    return EditOutcome(hist, touched, pre_affected, new_records=arrivals, structural=True)


def paste(ws: Workspace, dst_ref: str, at_index: int, author: str) -> EditOutcome:
    clip = ws.clipboard
    if clip is None or not clip.records:
        raise EmptyClipboard("nothing has been cut")
    dst = ws.resolve_unit(dst_ref)
    ws.check_unfrozen(ws.sessions[dst.session_id])
    if not 0 <= at_index <= len(dst.local_actions):
        raise BadRange(f"insertion index {at_index} out of range")
    ws.check_insert_position(dst, at_index)
    inverse: list = [["clipboard", _clipboard_dict(clip)]]
    for k, rec in enumerate(clip.records):
        ws.insert_local(dst, at_index + k, rec)
        inverse.append(["remove-local", dst.id, at_index + k])
    ws.clipboard = None
    hist = ws.log_record(
        "unit", dst.id, "paste-actions",
        {"inserted": [r.id for r in clip.records], "at": at_index, "source": clip.src_unit},
        author,
    )
    affected = _union_sharing(ws, [r.id for r in clip.records])
    _set_last_edit(ws, hist, dst.id, inverse, affected)
    return EditOutcome(
        hist, [r.id for r in clip.records], affected, new_records=list(clip.records), structural=True
    )


def _clipboard_dict(clip: Clipboard | None) -> dict | None:
    if clip is None:
        return None
    return {"records": [r.to_dict() for r in clip.records], "src_unit": clip.src_unit}


def _clipboard_from_dict(d: dict | None) -> Clipboard | None:
    if d is None:
        return None
    return Clipboard([ActionRecord.from_dict(r) for r in d["records"]], d["src_unit"])


def revert_last_edit(ws: Workspace, author: str, expected_ref: str | None = None) -> EditOutcome:
    """Apply the stored inverse of the most recent edit. Only valid while
    nothing else has committed since (the offer is made in that window)."""
    le = ws.last_edit
    if le is None:
        raise RevertUnavailable("no edit to revert")
    if le["revision"] != ws.revision:
        raise RevertUnavailable("a later operation superseded the last edit")
    if expected_ref is not None and expected_ref != le["ref"]:
        raise RevertUnavailable(f"the last edit is {le['ref']}, not {expected_ref}")
    for step in reversed(le["inverse"]):
        kind = step[0]
        if kind == "status":
            rec = ws.find_record(step[1])
            rec.status = RecordStatus(step[2])
        elif kind == "insert-local":
            record = ActionRecord.from_dict(step[3])
            ws.restore_local(ws.units[step[1]], step[2], record, step[4])
            ws.deleted_records.pop(record.id, None)
        elif kind == "remove-local":
            unit = ws.units[step[1]]
            removed, _ = ws.remove_local(unit, step[2])
            # Keep reverted insertions resolvable: ids are never lost.
            ws.deleted_records[removed.id] = {
                "record": removed.to_dict(),
                "unit": unit.id,
                "local_index": step[2],
                "deleted_at": ws.now(),
                "author": author,
            }
        elif kind == "unarchive":
            ws.deleted_records.pop(step[1], None)
        elif kind == "clipboard":
            ws.clipboard = _clipboard_from_dict(step[1])
    affected = list(le["affected"])
    hist = ws.log_record("unit", le["unit"], "revert-edit", {"edit": le["ref"]}, author)
    ws.last_edit = None
    return EditOutcome(hist, [], affected)
