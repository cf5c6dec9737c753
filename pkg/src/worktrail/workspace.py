"""The workspace: one project's session tree, units, and action histories.

Mutating operations live here as methods; the command layer in
:mod:`worktrail.commands` wraps them with event logging, revision bumps, and
dependency validation. All mutations are serialized by that layer
(single-writer), so methods here can assume exclusive access.

Branch storage is prefix-sharing: a branched unit keeps a reference to its
origin plus the number of effective records it inherits. Inserting into or
deleting from a shared region shifts every inheriting descendant's prefix
length so their views stay aligned; status flips on shared records are
visible to every sharer by construction.
"""

from __future__ import annotations

import time
from typing import Any, Callable

from .domain import DomainPlugin
from .errors import (
    DuplicateName,
    FrozenVersion,
    IntegrityError,
    SchemaViolation,
    UnknownRef,
    UnregisteredType,
)
from .model import (
    ActionCategory,
    ActionRecord,
    ActionType,
    ActionTypeRegistry,
    Annotation,
    BranchPoint,
    RecordStatus,
    Session,
    Snapshot,
    Unit,
)


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class Clipboard:
    def __init__(self, records: list[ActionRecord], src_unit: str):
        self.records = records
        self.src_unit = src_unit


class Workspace:
    def __init__(
        self,
        project_name: str,
        domain: DomainPlugin,
        base_session: str = "session",
        metadata: dict | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.project_name = project_name
        self.metadata = dict(metadata or {})
        self.domain = domain
        self.registry = ActionTypeRegistry()
        self.registry.add_domain(domain.capabilities, domain.action_types)
        self.clock = clock or wall_clock_ms
        self._ts_override: int | None = None

        self.counters: dict[str, int] = {"s": 0, "u": 0, "a": 0, "n": 0}
        self.revision = 0
        self.sessions: dict[str, Session] = {}
        self.units: dict[str, Unit] = {}
        self.annotations: dict[str, Annotation] = {}
        self.deleted_records: dict[str, dict] = {}
        self.clipboard: Clipboard | None = None
        self.report_cache: dict[str, dict] = {}
        self.last_edit: dict | None = None
        self.event_log: list[dict] = []

        self._record_owner: dict[str, tuple[str, str]] = {}  # id -> (kind, owner id)
        self._children: dict[str, list[str]] = {}  # unit id -> branched unit ids

        root = Session(
            id=self._next_id("s"), base_name=base_session, version=0, created_ts=self.now()
        )
        self.sessions[root.id] = root
        self.root_session_id = root.id

    # ------------------------------------------------------------------
    # ids, clocks, lookups
    # ------------------------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self.counters[prefix] += 1
        return f"{prefix}{self.counters[prefix]}"

    def now(self) -> int:
        return self._ts_override if self._ts_override is not None else self.clock()

    def resolve_session(self, ref: str) -> Session:
        if ref in self.sessions:
            return self.sessions[ref]
        for s in self.sessions.values():
            if s.display_name == ref:
                return s
        raise UnknownRef(f"unknown session: {ref}")

    def resolve_unit(self, ref: str) -> Unit:
        if ref in self.units:
            return self.units[ref]
        matches = [u for u in self.units.values() if u.name == ref]
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise UnknownRef(f"unit name {ref!r} is ambiguous; use its id")
        raise UnknownRef(f"unknown unit: {ref}")

    def resolve_node(self, ref: str) -> tuple[str, Any]:
        try:
            return "unit", self.resolve_unit(ref)
        except UnknownRef:
            return "session", self.resolve_session(ref)

    def find_record(self, record_id: str) -> ActionRecord:
        owner = self._record_owner.get(record_id)
        if owner is not None:
            kind, oid = owner
            pool = self.units[oid].local_actions if kind == "unit" else (
                self.sessions[oid].session_actions
            )
            for r in pool:
                if r.id == record_id:
                    return r
            raise IntegrityError(f"owner index stale for {record_id}")
        if self.clipboard is not None:
            for r in self.clipboard.records:
                if r.id == record_id:
                    return r
        if record_id in self.deleted_records:
            return ActionRecord.from_dict(self.deleted_records[record_id]["record"])
        raise UnknownRef(f"unknown record: {record_id}")

    def record_owner_unit(self, record_id: str) -> Unit | None:
        owner = self._record_owner.get(record_id)
        if owner and owner[0] == "unit":
            return self.units[owner[1]]
        return None

    def session_of_record(self, record_id: str) -> Session | None:
        owner = self._record_owner.get(record_id)
        if owner is None:
            return None
        kind, oid = owner
        return self.sessions[self.units[oid].session_id] if kind == "unit" else self.sessions[oid]

    # ------------------------------------------------------------------
    # effective history
    # ------------------------------------------------------------------

    def inherited_prefix(self, unit_id: str) -> list[ActionRecord]:
        unit = self.units[unit_id]
        if unit.branch_parent is None:
            return []
        parent_eff = self.effective_history(unit.branch_parent.unit_id)
        if unit.branch_parent.prefix_len > len(parent_eff):
            raise IntegrityError(
                f"{unit_id}: prefix {unit.branch_parent.prefix_len} exceeds parent history"
            )
        return parent_eff[: unit.branch_parent.prefix_len]

    def effective_history(self, unit_id: str) -> list[ActionRecord]:
        """Inherited prefixes concatenated with local actions; includes
        undone and skipped records (the complete history)."""
        unit = self.units[unit_id]
        return self.inherited_prefix(unit_id) + list(unit.local_actions)

    def effective_len(self, unit_id: str) -> int:
        unit = self.units[unit_id]
        base = unit.branch_parent.prefix_len if unit.branch_parent else 0
        return base + len(unit.local_actions)

    def record_in_history(self, unit_id: str, record_id: str) -> int | None:
        for i, r in enumerate(self.effective_history(unit_id)):
            if r.id == record_id:
                return i
        return None

    def units_sharing(self, record_id: str) -> list[str]:
        """Owning unit plus every branch descendant whose inherited prefix
        still covers the record's effective position."""
        owner = self.record_owner_unit(record_id)
        if owner is None:
            return []
        pos = self.record_in_history(owner.id, record_id)
        if pos is None:
            raise IntegrityError(f"{record_id} missing from its owner's history")
        out = [owner.id]

        def walk(uid: str) -> None:
            for child_id in self._children.get(uid, ()):  # creation order
                child = self.units[child_id]
                if child.branch_parent and child.branch_parent.prefix_len > pos:
                    out.append(child_id)
                    walk(child_id)

        walk(owner.id)
        return out

    # ------------------------------------------------------------------
    # low-level local-list surgery (keeps descendant prefixes aligned)
    # ------------------------------------------------------------------

    def _shift_descendant_prefixes(
        self, unit_id: str, eff_pos: int, delta: int, shifted: list[str]
    ) -> None:
        for child_id in self._children.get(unit_id, ()):  # direct branches
            child = self.units[child_id]
            if child.branch_parent and child.branch_parent.prefix_len > eff_pos:
                child.branch_parent.prefix_len += delta
                shifted.append(child_id)
                self._shift_descendant_prefixes(child_id, eff_pos, delta, shifted)

    def insert_local(self, unit: Unit, local_index: int, record: ActionRecord) -> list[str]:
        inherited = unit.branch_parent.prefix_len if unit.branch_parent else 0
        unit.local_actions.insert(local_index, record)
        self._record_owner[record.id] = ("unit", unit.id)
        shifted: list[str] = []
        self._shift_descendant_prefixes(unit.id, inherited + local_index, +1, shifted)
        return shifted

    def remove_local(self, unit: Unit, local_index: int) -> tuple[ActionRecord, list[str]]:
        """Pop a local record, shrinking the prefix window of every
        descendant that inherited it; the shifted unit ids are returned so
        an exact inverse can restore them (a descendant whose window now
        ends at the removal point is indistinguishable by position alone)."""
        inherited = unit.branch_parent.prefix_len if unit.branch_parent else 0
        record = unit.local_actions.pop(local_index)
        self._record_owner.pop(record.id, None)
        shifted: list[str] = []
        self._shift_descendant_prefixes(unit.id, inherited + local_index, -1, shifted)
        return record, shifted

    def restore_local(self, unit: Unit, local_index: int, record: ActionRecord, shifted: list[str]) -> None:
        """Exact inverse of :meth:`remove_local`."""
        unit.local_actions.insert(local_index, record)
        self._record_owner[record.id] = ("unit", unit.id)
        for uid in shifted:
            bp = self.units[uid].branch_parent
            if bp is not None:
                bp.prefix_len += 1

    # ------------------------------------------------------------------
    # freezing
    # ------------------------------------------------------------------

    def check_unfrozen(self, session: Session) -> None:
        if session.frozen:
            raise FrozenVersion(f"session {session.display_name} is a saved version")

    def check_record_mutable(self, record_id: str) -> None:
        """A record can be touched only while its owner and every unit
        inheriting it are live: a frozen version's effective history is
        immutable even where it shares records with live units."""
        session = self.session_of_record(record_id)
        if session is None:
            raise UnknownRef(f"record {record_id} is not part of any live history")
        self.check_unfrozen(session)
        owner = self.record_owner_unit(record_id)
        if owner is not None:
            for uid in self.units_sharing(record_id):
                self.check_unfrozen(self.sessions[self.units[uid].session_id])

    def check_insert_position(self, unit: Unit, local_index: int) -> None:
        """Inserting inside a prefix shared with a frozen version would
        rewrite its history; reject such positions."""
        inherited = unit.branch_parent.prefix_len if unit.branch_parent else 0
        eff_pos = inherited + local_index

        def walk(uid: str, pos: int) -> None:
            for child_id in self._children.get(uid, ()):
                child = self.units[child_id]
                if child.branch_parent and child.branch_parent.prefix_len > pos:
                    self.check_unfrozen(self.sessions[child.session_id])
                    walk(child_id, pos)

        walk(unit.id, eff_pos)

    # ------------------------------------------------------------------
    # record logging
    # ------------------------------------------------------------------

    def log_record(
        self,
        scope_kind: str,
        scope_id: str,
        type_name: str,
        params: dict,
        author: str,
        note: str | None = None,
    ) -> ActionRecord:
        t = self.registry.get(type_name)
        if t is None:
            raise UnregisteredType(f"unregistered action type: {type_name}")
        rec = ActionRecord(
            id=self._next_id("a"),
            type_name=type_name,
            category=t.category,
            params=params,
            ts=self.now(),
            author=author,
            note=note,
        )
        if scope_kind == "unit":
            unit = self.units[scope_id]
            unit.local_actions.append(rec)
            self._record_owner[rec.id] = ("unit", scope_id)
        else:
            self.sessions[scope_id].session_actions.append(rec)
            self._record_owner[rec.id] = ("session", scope_id)
        return rec

    # ------------------------------------------------------------------
    # history-core operations
    # ------------------------------------------------------------------

    def create_unit(self, session_ref: str, name: str, author: str) -> Unit:
        session = self.resolve_session(session_ref)
        self.check_unfrozen(session)
        unit = Unit(id=self._next_id("u"), name=name, session_id=session.id)
        self.units[unit.id] = unit
        session.unit_ids.append(unit.id)
        self.log_record("session", session.id, "create-unit", {"unit": unit.id, "name": name}, author)
        return unit

    def branch_unit(self, origin_ref: str, name: str, author: str) -> Unit:
        origin = self.resolve_unit(origin_ref)
        session = self.sessions[origin.session_id]
        self.check_unfrozen(session)
        unit = Unit(
            id=self._next_id("u"),
            name=name,
            session_id=session.id,
            branch_parent=BranchPoint(origin.id, self.effective_len(origin.id)),
        )
        self.units[unit.id] = unit
        session.unit_ids.append(unit.id)
        self._children.setdefault(origin.id, []).append(unit.id)
        self.log_record(
            "session", session.id, "branch-unit", {"unit": unit.id, "origin": origin.id, "name": name}, author
        )
        return unit

    def append_action(self, unit_ref: str, type_name: str, params: dict, author: str) -> ActionRecord:
        unit = self.resolve_unit(unit_ref)
        self.check_unfrozen(self.sessions[unit.session_id])
        t = self.registry.get(type_name)
        if t is None:
            raise UnregisteredType(f"unregistered action type: {type_name}")
        if type_name not in self.domain.type_names:
            raise SchemaViolation(
                f"{type_name} is engine-internal; it cannot be appended directly"
            )
        self.registry.validate_params(type_name, params)
        problem = self.domain.param_check(type_name, params)
        if problem:
            raise SchemaViolation(f"{type_name}: {problem}")
        return self.log_record("unit", unit.id, type_name, dict(params), author)

    def annotate(self, target_ref: str, text: str, author: str) -> Annotation:
        if not text.strip():
            raise SchemaViolation("annotation text must be non-empty")
        kind, node = self.resolve_node(target_ref)
        session = self.sessions[node.session_id] if kind == "unit" else node
        self.check_unfrozen(session)
        rec = self.log_record(
            kind, node.id, "create-annotation", {"target": node.id}, author
        )
        ann = Annotation(
            id=self._next_id("n"),
            text=text,
            author=author,
            ts=rec.ts,
            attached_to=node.id,
            record_id=rec.id,
        )
        rec.params["annotation"] = ann.id
        self.annotations[ann.id] = ann
        node.annotation_ids.append(ann.id)
        return ann

    def delete_annotation(self, annotation_id: str, author: str) -> Annotation:
        ann = self.annotations.get(annotation_id)
        if ann is None or ann.deleted:
            raise UnknownRef(f"unknown annotation: {annotation_id}")
        kind, node = self.resolve_node(ann.attached_to)
        session = self.sessions[node.session_id] if kind == "unit" else node
        self.check_unfrozen(session)
        ann.deleted = True
        self.log_record(kind, node.id, "delete-annotation", {"annotation": ann.id}, author)
        return ann

    def live_annotations(self, node_id: str) -> list[Annotation]:
        kind, node = self.resolve_node(node_id)
        out = []
        for aid in node.annotation_ids:
            ann = self.annotations[aid]
            if ann.deleted:
                continue
            if ann.record_id is not None:
                try:
                    rec = self.find_record(ann.record_id)
                except UnknownRef:
                    continue
                if rec.status != RecordStatus.ACTIVE:
                    continue
            out.append(ann)
        return out

    def set_bookmark(self, unit_ref: str, value: bool, author: str) -> Unit:
        unit = self.resolve_unit(unit_ref)
        self.check_unfrozen(self.sessions[unit.session_id])
        unit.bookmarked = bool(value)
        self.log_record(
            "session", unit.session_id, "set-bookmark", {"unit": unit.id, "value": bool(value)}, author
        )
        return unit

    # ------------------------------------------------------------------
    # session versioning
    # ------------------------------------------------------------------

    def _owned_record_ids(self, session: Session) -> set[str]:
        ids = {r.id for r in session.session_actions}
        for uid in session.unit_ids:
            ids |= {r.id for r in self.units[uid].local_actions}
        return ids

    def save_session(self, session_ref: str, author: str, snapshot: Snapshot) -> Session:
        """Freeze ``session`` behind a snapshot and continue on a deep copy.

        ``snapshot`` is computed by the caller (state engine) against the
        parent before the copy, so the stored states are exactly what the
        frozen version replays to.
        """
        parent = self.resolve_session(session_ref)
        self.check_unfrozen(parent)
        child = Session(
            id=self._next_id("s"),
            base_name=parent.base_name,
            version=parent.version + 1,
            parent_id=parent.id,
            created_ts=self.now(),
        )
        self.sessions[child.id] = child
        self._copy_units_into(parent, child)
        parent.snapshot = snapshot
        parent.frozen = True
        child.baseline_record_ids = self._owned_record_ids(child)
        self.log_record("session", child.id, "save-session", {"parent": parent.id}, author)
        return child

    def branch_session(self, session_ref: str, new_base_name: str, author: str) -> Session:
        origin = self.resolve_session(session_ref)
        if any(s.base_name == new_base_name for s in self.sessions.values()):
            raise DuplicateName(f"session base name already used: {new_base_name}")
        child = Session(
            id=self._next_id("s"),
            base_name=new_base_name,
            version=0,
            parent_id=origin.id,
            created_ts=self.now(),
        )
        self.sessions[child.id] = child
        for uid in list(origin.unit_ids):
            origin_unit = self.units[uid]
            unit = Unit(
                id=self._next_id("u"),
                name=origin_unit.name,
                session_id=child.id,
                branch_parent=BranchPoint(uid, self.effective_len(uid)),
                bookmarked=origin_unit.bookmarked,
            )
            self.units[unit.id] = unit
            child.unit_ids.append(unit.id)
            self._children.setdefault(uid, []).append(unit.id)
        child.baseline_record_ids = set()
        self.log_record("session", child.id, "branch-session", {"origin": origin.id}, author)
        return child

    def create_session(self, base_name: str, author: str) -> Session:
        if any(s.base_name == base_name for s in self.sessions.values()):
            raise DuplicateName(f"session base name already used: {base_name}")
        session = Session(
            id=self._next_id("s"), base_name=base_name, version=0, created_ts=self.now()
        )
        self.sessions[session.id] = session
        self.log_record("session", session.id, "create-session", {"name": base_name}, author)
        return session

    def _copy_units_into(self, parent: Session, child: Session) -> None:
        unit_map: dict[str, str] = {}
        record_map: dict[str, str] = {}
        for uid in parent.unit_ids:
            src = self.units[uid]
            dst = Unit(
                id=self._next_id("u"),
                name=src.name,
                session_id=child.id,
                bookmarked=src.bookmarked,
                broken=src.broken,
            )
            unit_map[src.id] = dst.id
            for r in src.local_actions:
                nr = ActionRecord(
                    id=self._next_id("a"),
                    type_name=r.type_name,
                    category=r.category,
                    params=dict(r.params),
                    ts=r.ts,
                    author=r.author,
                    status=r.status,
                    note=r.note,
                )
                record_map[r.id] = nr.id
                dst.local_actions.append(nr)
                self._record_owner[nr.id] = ("unit", dst.id)
            self.units[dst.id] = dst
            child.unit_ids.append(dst.id)
        for uid in parent.unit_ids:
            src = self.units[uid]
            if src.branch_parent is None:
                continue
            dst = self.units[unit_map[src.id]]
            mapped = unit_map.get(src.branch_parent.unit_id, src.branch_parent.unit_id)
            dst.branch_parent = BranchPoint(mapped, src.branch_parent.prefix_len)
            self._children.setdefault(mapped, []).append(dst.id)
        for uid in parent.unit_ids:
            src = self.units[uid]
            dst = self.units[unit_map[src.id]]
            for aid in src.annotation_ids:
                ann = self.annotations[aid]
                copy = Annotation(
                    id=self._next_id("n"),
                    text=ann.text,
                    author=ann.author,
                    ts=ann.ts,
                    attached_to=dst.id,
                    record_id=record_map.get(ann.record_id or "", ann.record_id),
                    deleted=ann.deleted,
                )
                self.annotations[copy.id] = copy
                dst.annotation_ids.append(copy.id)

    # ------------------------------------------------------------------
    # deltas (a session version's own activity)
    # ------------------------------------------------------------------

    def session_delta_records(self, session_id: str) -> list[ActionRecord]:
        session = self.sessions[session_id]
        records = [
            r
            for r in session.session_actions
            if r.id not in session.baseline_record_ids
        ]
        for uid in session.unit_ids:
            records.extend(
                r
                for r in self.units[uid].local_actions
                if r.id not in session.baseline_record_ids
            )
        records.sort(key=lambda r: r.seq)
        return records

    def all_record_ids(self) -> set[str]:
        ids = set(self._record_owner)
        ids |= set(self.deleted_records)
        if self.clipboard is not None:
            ids |= {r.id for r in self.clipboard.records}
        return ids
