"""Deterministic replay: compute any unit's visual state from its history.

A unit's state is a pure fold of its active effective-history records through
the registered domain interpreter. Records sharing an override key are
filtered so only the last active one takes part in the fold; engine-internal
records (management, annotation, history bookkeeping) pass through without
touching state.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Any, TYPE_CHECKING

from .errors import BrokenPipeline, MissingPrecondition, NotOnOnePath, UnknownRef
from .model import ActionRecord, RecordStatus, Snapshot

if TYPE_CHECKING:
    from .workspace import Workspace


@dataclass
class UnitState:
    """Settings of a unit's widgets plus its computed content."""

    dataset: dict | None = None
    selection: dict | None = None
    algorithm: str | None = None
    parameters: dict = field(default_factory=dict)
    color_scheme: str = "default"
    derived_result: dict | None = None
    widget_settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _round_floats(obj: Any) -> Any:
    """Quantize floats to 1e-9 so hashes stay platform-stable."""
    if isinstance(obj, float):
        q = round(obj, 9)
        return 0.0 if q == 0 else q
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"))


def state_hash(state: UnitState) -> str:
    return hashlib.sha256(canonical_json(state.to_dict()).encode("utf-8")).hexdigest()


def override_filter(
    ws: Workspace, records: list[tuple[int, ActionRecord]]
) -> list[tuple[int, ActionRecord]]:
    """Drop every record superseded by a later active record with the same
    override key. Input pairs are (effective index, active record)."""
    last_by_key: dict[str, str] = {}
    for _, rec in records:
        t = ws.registry.get(rec.type_name)
        if t is None:
            continue
        key = t.record_override_key(rec.params)
        if key is not None:
            last_by_key[key] = rec.id
    out = []
    for idx, rec in records:
        t = ws.registry.get(rec.type_name)
        key = t.record_override_key(rec.params) if t else None
        if key is None or last_by_key[key] == rec.id:
            out.append((idx, rec))
    return out


def runnable_sequence(
    ws: Workspace, unit_id: str, up_to: str | None = None
) -> list[tuple[int, ActionRecord]]:
    """Active, override-filtered effective history with effective indices."""
    eff = ws.effective_history(unit_id)
    if up_to is not None:
        cut = next((i for i, r in enumerate(eff) if r.id == up_to), None)
        if cut is None:
            raise UnknownRef(f"record {up_to} not in history of {unit_id}")
        eff = eff[: cut + 1]
    active = [(i, r) for i, r in enumerate(eff) if r.status == RecordStatus.ACTIVE]
    return override_filter(ws, active)


@dataclass
class ReplayFailure:
    index: int
    record_id: str
    capability: str

    def to_dict(self) -> dict:
        return asdict(self)


def fold_records(
    ws: Workspace, records: list[tuple[int, ActionRecord]]
) -> tuple[UnitState, list[ReplayFailure]]:
    """Best-effort fold: records whose preconditions are unmet are skipped
    and reported, everything else applies in order."""
    state = UnitState()
    failures: list[ReplayFailure] = []
    domain = ws.domain
    for idx, rec in records:
        if rec.type_name not in domain.type_names:
            continue  # engine bookkeeping record, no state effect
        try:
            state = domain.interpret(state, rec)
        except MissingPrecondition as exc:
            failures.append(ReplayFailure(idx, rec.id, exc.capability))
    return state, failures


def replay(ws: Workspace, unit_ref: str, up_to: str | None = None) -> UnitState:
    """Strict replay; raises :class:`BrokenPipeline` on the first unmet
    requirement, mirroring the dependency checker's verdict."""
    unit = ws.resolve_unit(unit_ref)
    seq = runnable_sequence(ws, unit.id, up_to)
    state, failures = fold_records(ws, seq)
    if failures:
        f = failures[0]
        raise BrokenPipeline(
            f"record {f.record_id} requires {f.capability}",
            record_id=f.record_id,
            capability=f.capability,
            index=f.index,
        )
    return state


def replay_best_effort(
    ws: Workspace, unit_ref: str, up_to: str | None = None
) -> tuple[UnitState, list[ReplayFailure]]:
    unit = ws.resolve_unit(unit_ref)
    return fold_records(ws, runnable_sequence(ws, unit.id, up_to))


def history_fingerprint(ws: Workspace, unit_id: str) -> str:
    """Content hash of a unit's effective history (ids, statuses, params);
    used to check whether a cached snapshot is still valid."""
    payload = [
        [r.id, r.type_name, r.status.value, r.params, r.ts]
        for r in ws.effective_history(unit_id)
    ]
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def compute_snapshot(ws: Workspace, session_id: str, label: str) -> Snapshot:
    session = ws.sessions[session_id]
    states: dict[str, dict] = {}
    hashes: dict[str, str] = {}
    prints: dict[str, str] = {}
    for uid in session.unit_ids:
        state, _ = replay_best_effort(ws, uid)
        states[uid] = state.to_dict()
        hashes[uid] = state_hash(state)
        prints[uid] = history_fingerprint(ws, uid)
    return Snapshot(
        session_id=session_id,
        created_at=ws.now(),
        label=label,
        unit_states=states,
        unit_hashes=hashes,
        unit_fingerprints=prints,
    )


def recover_session(ws: Workspace, session_ref: str, use_cache: bool = True) -> dict:
    """Time-machine view of a session version: per-unit replayed states.

    A stored snapshot is trusted only while every unit's history fingerprint
    still matches; otherwise everything is replayed from the log.
    """
    session = ws.resolve_session(session_ref)
    snap = session.snapshot
    if use_cache and snap is not None:
        valid = all(
            history_fingerprint(ws, uid) == snap.unit_fingerprints.get(uid)
            for uid in session.unit_ids
        ) and set(snap.unit_states) == set(session.unit_ids)
        if valid:
            return {
                "session": session.id,
                "display_name": session.display_name,
                "label": snap.label,
                "created_at": snap.created_at,
                "cached": True,
                "units": {
                    uid: {
                        "state": snap.unit_states[uid],
                        "hash": snap.unit_hashes[uid],
                        "status": "ok",
                        "failures": [],
                    }
                    for uid in session.unit_ids
                },
            }
    units = {}
    for uid in session.unit_ids:
        state, failures = replay_best_effort(ws, uid)
        units[uid] = {
            "state": state.to_dict(),
            "hash": state_hash(state),
            "status": "broken" if failures else "ok",
            "failures": [f.to_dict() for f in failures],
        }
    return {
        "session": session.id,
        "display_name": session.display_name,
        "label": session.display_name,
        "created_at": session.created_ts,
        "cached": False,
        "units": units,
    }


def _unit_chain(ws: Workspace, unit_id: str) -> list[str]:
    chain = [unit_id]
    cur = ws.units[unit_id]
    while cur.branch_parent is not None:
        chain.append(cur.branch_parent.unit_id)
        cur = ws.units[cur.branch_parent.unit_id]
    return chain  # unit first, root last


def _session_chain(ws: Workspace, session_id: str) -> list[str]:
    chain = [session_id]
    cur = ws.sessions[session_id]
    while cur.parent_id is not None:
        chain.append(cur.parent_id)
        cur = ws.sessions[cur.parent_id]
    return chain


def actions_between(ws: Workspace, ref_a: str, ref_b: str) -> list[ActionRecord]:
    """Records contributed strictly below node A on the path down to node B.

    Both refs must name units, or both sessions, with one an ancestor of the
    other; the result is the same whichever way round they are given.
    """
    kind_a, node_a = ws.resolve_node(ref_a)
    kind_b, node_b = ws.resolve_node(ref_b)
    if kind_a != kind_b:
        raise NotOnOnePath(f"{ref_a} and {ref_b} are different node kinds")
    if node_a.id == node_b.id:
        return []

    if kind_a == "unit":
        for upper, lower in ((node_a, node_b), (node_b, node_a)):
            chain = _unit_chain(ws, lower.id)
            if upper.id in chain:
                below = chain[: chain.index(upper.id)]  # lower ... child-of-upper
                boundary = min(ws.units[uid].branch_parent.prefix_len for uid in below)
                return ws.effective_history(lower.id)[boundary:]
        raise NotOnOnePath(f"units {ref_a} and {ref_b} share no lineage path")

    for upper, lower in ((node_a, node_b), (node_b, node_a)):
        chain = _session_chain(ws, lower.id)
        if upper.id in chain:
            path = chain[: chain.index(upper.id)]
            out: list[ActionRecord] = []
            for sid in reversed(path):  # top of path first
                out.extend(ws.session_delta_records(sid))
            return out
    raise NotOnOnePath(f"sessions {ref_a} and {ref_b} share no lineage path")


def _flatten(prefix: str, obj: Any, out: dict[str, Any]) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    else:
        out[prefix] = obj


def diff_states(a: UnitState, b: UnitState) -> dict[str, dict]:
    """Field-level diff keyed by dotted path; empty iff the hashes match."""
    fa: dict[str, Any] = {}
    fb: dict[str, Any] = {}
    _flatten("", _round_floats(a.to_dict()), fa)
    _flatten("", _round_floats(b.to_dict()), fb)
    out = {}
    for key in sorted(set(fa) | set(fb)):
        va, vb = fa.get(key), fb.get(key)
        if va != vb:
            out[key] = {"before": va, "after": vb}
    return out
