"""Broken-pipeline detection, fix suggestion, and cascading validation.

The checker walks a unit's active, override-filtered history keeping a set
of satisfied capabilities: a record whose requirements are met contributes
its provided capabilities; one whose requirements are unmet is recorded as a
failure and contributes nothing (mirroring execution, where it would never
run). Superseded records are filtered out first, since only the final action
of an override group affects the replayed state, so an unmet requirement on
a superseded record cannot break anything.

``validate`` is pure; callers commit the resulting report (broken flag plus
cache) inside the mutation transaction via :func:`commit_report`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Iterable, TYPE_CHECKING

from .errors import WorktrailError
from .model import RecordStatus
from .replay import runnable_sequence

if TYPE_CHECKING:
    from .workspace import Workspace

OK = "ok"
WARN = "warn"
BROKEN = "broken"

REDO_RECORD = "redo-record"
UNSKIP_RECORD = "unskip-record"
UNDO_LAST_EDIT = "undo-last-edit"


@dataclass
class Failure:
    index: int  # position in the unit's effective history
    record_id: str
    capability: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuggestedFix:
    kind: str
    target: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ValidationReport:
    unit_id: str
    status: str
    failures: list[Failure] = field(default_factory=list)
    suggestion: SuggestedFix | None = None
    undo_last_edit: SuggestedFix | None = None
    trigger: str | None = None

    def to_dict(self) -> dict:
        return {
            "unit": self.unit_id,
            "status": self.status,
            "failures": [f.to_dict() for f in self.failures],
            "suggestion": self.suggestion.to_dict() if self.suggestion else None,
            "undo_last_edit": self.undo_last_edit.to_dict() if self.undo_last_edit else None,
            "trigger": self.trigger,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ValidationReport:
        return cls(
            unit_id=d["unit"],
            status=d["status"],
            failures=[Failure(**f) for f in d.get("failures", [])],
            suggestion=SuggestedFix(**d["suggestion"]) if d.get("suggestion") else None,
            undo_last_edit=(
                SuggestedFix(**d["undo_last_edit"]) if d.get("undo_last_edit") else None
            ),
            trigger=d.get("trigger"),
        )


def classify(ws: Workspace, type_name: str) -> bool:
    """Does performing/editing an action of this type need the detection
    pass? Unit and annotation creation/deletion never can break a pipeline;
    analysis actions and history edits can."""
    t = ws.registry.get(type_name)
    return bool(t and t.needs_dependency_check)


def _capability_failures(ws: Workspace, unit_id: str) -> list[Failure]:
    """Walk the active, override-filtered history keeping the satisfied
    capability set. A failed record contributes nothing (it never runs)."""
    failures: list[Failure] = []
    satisfied: set[str] = set()
    for idx, rec in runnable_sequence(ws, unit_id):
        t = ws.registry.get(rec.type_name)
        if t is None:
            continue
        missing = sorted(t.requires - satisfied)
        if missing:
            failures.append(Failure(idx, rec.id, missing[0]))
        else:
            satisfied |= t.provides
    return failures


def validate(ws: Workspace, unit_ref: str, trigger: str | None = None) -> ValidationReport:
    unit = ws.resolve_unit(unit_ref)
    failures = _capability_failures(ws, unit.id)
    suggestion = None
    if failures:
        suggestion = suggest_alternative(ws, unit.id, failures[0].capability, failures[0].index)
    if not failures:
        status = OK
    elif suggestion is not None:
        status = WARN
    else:
        status = BROKEN
    return ValidationReport(unit.id, status, failures, suggestion, trigger=trigger)


def suggest_alternative(
    ws: Workspace, unit_ref: str, missing: str, at_index: int
) -> SuggestedFix | None:
    """Most recent undone/skipped record before the failure that provides
    the missing capability and whose reactivation heals the whole unit.

    Candidates owned by frozen versions are skipped, and each candidate is
    trial-activated and re-walked before being suggested: a returned fix,
    applied, always re-validates clean."""
    unit = ws.resolve_unit(unit_ref)
    history = ws.effective_history(unit.id)[:at_index]
    for rec in reversed(history):
        if rec.status not in (RecordStatus.UNDONE, RecordStatus.SKIPPED):
            continue
        t = ws.registry.get(rec.type_name)
        if t is None or missing not in t.provides:
            continue
        try:
            ws.check_record_mutable(rec.id)
        except WorktrailError:
            continue  # a fix must be appliable
        kind = REDO_RECORD if rec.status == RecordStatus.UNDONE else UNSKIP_RECORD
        prior = rec.status
        rec.status = RecordStatus.ACTIVE
        try:
            heals = not _capability_failures(ws, unit.id)
        finally:
            rec.status = prior
        if heals:
            return SuggestedFix(kind, rec.id)
    return None


def commit_report(ws: Workspace, report: ValidationReport) -> None:
    ws.units[report.unit_id].broken = report.status == BROKEN
    ws.report_cache[report.unit_id] = report.to_dict()


def cached_status(ws: Workspace, unit_id: str) -> str:
    cached = ws.report_cache.get(unit_id)
    return cached["status"] if cached else OK


def cached_report(ws: Workspace, unit_id: str, trigger: str | None) -> ValidationReport:
    cached = ws.report_cache.get(unit_id)
    if cached:
        report = ValidationReport.from_dict(cached)
        report.trigger = trigger
        # an undo-last-edit offer is only valid in the revision that made it
        report.undo_last_edit = None
        return report
    return ValidationReport(unit_id, OK, trigger=trigger)


def _is_final_on_leaf(ws: Workspace, record_id: str) -> bool:
    owner = ws.record_owner_unit(record_id)
    if owner is None:
        return False
    eff = ws.effective_history(owner.id)
    if not eff or eff[-1].id != record_id:
        return False
    return len(ws.units_sharing(record_id)) == 1  # nothing inherits it


def cascade_validate(
    ws: Workspace,
    touched_record_ids: list[str],
    affected_unit_ids: Iterable[str],
    trigger: str | None = None,
    edit_revertible: bool = False,
    force_walk: bool = False,
) -> list[ValidationReport]:
    """Re-validate every unit whose effective history includes a touched
    record; flags and caches are committed atomically with the edit.

    When no touched record's type needs the detection pass (annotation or
    management bookkeeping), or the touch is confined to the final action of
    a leaf unit that was previously clean, the walks are skipped and reports
    echo the cached status. Structural edits (records relocated) force the
    walk regardless, since cached failure positions go stale.
    """
    affected = list(dict.fromkeys(affected_unit_ids))
    needs_walk = force_walk or any(
        classify(ws, ws.find_record(rid).type_name) for rid in touched_record_ids
    )
    if needs_walk and not force_walk and len(touched_record_ids) == 1:
        # Deactivating the final action of a leaf unit cannot break anything:
        # nothing is downstream of it and its own requirements stop mattering.
        # Activations (append/redo/unskip) always walk - the touched record's
        # own requirements need checking.
        rid = touched_record_ids[0]
        owner = ws.record_owner_unit(rid)
        if (
            owner is not None
            and affected == [owner.id]
            and ws.find_record(rid).status != RecordStatus.ACTIVE
            and _is_final_on_leaf(ws, rid)
            and cached_status(ws, owner.id) == OK
        ):
            needs_walk = False
    if not needs_walk:
        return [cached_report(ws, uid, trigger) for uid in affected]

    reports = []
    for uid in affected:
        pre_status = cached_status(ws, uid)
        report = validate(ws, uid, trigger=trigger)
        if (
            report.failures
            and edit_revertible
            and pre_status == OK
            and ws.last_edit is not None
        ):
            report.undo_last_edit = SuggestedFix(UNDO_LAST_EDIT, ws.last_edit["ref"])
        commit_report(ws, report)
        reports.append(report)
    return reports
