"""History core: units, branches, appends, annotations, session versions."""

from __future__ import annotations

import pytest

from worktrail.commands import execute
from worktrail.errors import (
    DuplicateName,
    FrozenVersion,
    SchemaViolation,
    UnknownRef,
    UnregisteredType,
)
from worktrail.model import RecordStatus
from worktrail.replay import replay_best_effort, state_hash

from conftest import append, load_algo_param, make_unit, run
from oracle import oracle_effective_history


def test_create_unit_empty_history(ws):
    uid = make_unit(ws, "u1")
    assert ws.effective_history(uid) == []


def test_create_unit_distinct_ids(ws):
    a = make_unit(ws, "u1")
    b = make_unit(ws, "u2")
    assert a != b
    assert ws.sessions[ws.root_session_id].unit_ids == [a, b]


def test_create_unit_logs_management_record_at_session_scope(ws):
    make_unit(ws, "u1")
    session = ws.sessions[ws.root_session_id]
    assert [r.type_name for r in session.session_actions] == ["create-unit"]


def test_append_basic_pipeline(ws):
    uid = make_unit(ws)
    append(ws, uid, "load-data", dataset="cars")
    append(ws, uid, "select-algorithm", algorithm="kmeans")
    history = ws.effective_history(uid)
    assert [r.type_name for r in history] == ["load-data", "select-algorithm"]
    assert all(r.status == RecordStatus.ACTIVE for r in history)


def test_append_unregistered_type(ws):
    uid = make_unit(ws)
    with pytest.raises(UnregisteredType):
        ws.append_action(uid, "no-such-action", {}, "analyst")


def test_append_schema_violation(ws):
    uid = make_unit(ws)
    with pytest.raises(SchemaViolation):
        ws.append_action(uid, "load-data", {}, "analyst")  # missing dataset
    with pytest.raises(SchemaViolation):
        ws.append_action(uid, "load-data", {"dataset": "nope"}, "analyst")
    with pytest.raises(SchemaViolation):
        ws.append_action(uid, "undo", {}, "analyst")  # engine-internal


def test_override_rule_last_parameter_wins(ws):
    uid = make_unit(ws)
    load_algo_param(ws, uid, k=3)
    append(ws, uid, "set-parameter", name="k", value=5)
    state, failures = replay_best_effort(ws, uid)
    assert failures == []
    assert state.parameters["k"] == 5


def test_branch_inherits_full_history(ws):
    uid = make_unit(ws, "origin")
    load_algo_param(ws, uid)
    branch = run(ws, "branch-unit", origin=uid, name="fork").ids["units"][0]
    assert [r.id for r in ws.effective_history(branch)] == [
        r.id for r in ws.effective_history(uid)
    ]
    # and against the independent walker
    assert [r.id for r in oracle_effective_history(ws, branch)] == [
        r.id for r in ws.effective_history(branch)
    ]


def test_branch_isolated_from_later_appends(ws):
    uid = make_unit(ws, "origin")
    load_algo_param(ws, uid)
    branch = run(ws, "branch-unit", origin=uid, name="fork").ids["units"][0]
    before = state_hash(replay_best_effort(ws, branch)[0])
    append(ws, uid, "set-parameter", name="k", value=9)
    append(ws, uid, "set-color-scheme", scheme="magma")
    after = state_hash(replay_best_effort(ws, branch)[0])
    assert before == after
    assert len(ws.effective_history(branch)) == 3


def test_branch_of_branch_concatenates_prefixes(ws):
    uid = make_unit(ws, "origin")
    load_algo_param(ws, uid)
    b1 = run(ws, "branch-unit", origin=uid, name="b1").ids["units"][0]
    append(ws, b1, "set-color-scheme", scheme="blues")
    b2 = run(ws, "branch-unit", origin=b1, name="b2").ids["units"][0]
    append(ws, b2, "run-clustering")
    got = [r.type_name for r in ws.effective_history(b2)]
    assert got == [
        "load-data",
        "select-algorithm",
        "set-parameter",
        "set-color-scheme",
        "run-clustering",
    ]
    assert [r.id for r in oracle_effective_history(ws, b2)] == [
        r.id for r in ws.effective_history(b2)
    ]


def test_append_to_branch_leaves_origin_untouched(ws):
    uid = make_unit(ws, "origin")
    load_algo_param(ws, uid)
    branch = run(ws, "branch-unit", origin=uid, name="fork").ids["units"][0]
    append(ws, branch, "run-clustering")
    assert len(ws.effective_history(uid)) == 3
    assert len(ws.effective_history(branch)) == 4


def test_ancestor_status_flip_reflected_in_descendant(ws):
    uid = make_unit(ws, "origin")
    rid_load, _, _ = load_algo_param(ws, uid)
    branch = run(ws, "branch-unit", origin=uid, name="fork").ids["units"][0]
    run(ws, "edit-selective-undo", unit=uid, record=rid_load)
    statuses = {r.id: r.status for r in ws.effective_history(branch)}
    assert statuses[rid_load] == RecordStatus.UNDONE


def test_annotate_star_and_delete(ws):
    uid = make_unit(ws)
    run(ws, "annotate", target=uid, text="high fold-change")
    assert len(ws.live_annotations(uid)) == 1
    second = run(ws, "annotate", target=uid, text="check later")
    assert len(ws.live_annotations(uid)) == 2
    run(ws, "delete-annotation", annotation=second.ids["annotations"][0])
    assert len(ws.live_annotations(uid)) == 1


def test_annotate_empty_text_rejected(ws):
    uid = make_unit(ws)
    with pytest.raises(SchemaViolation):
        ws.annotate(uid, "   ", "analyst")
    with pytest.raises(UnknownRef):
        ws.annotate("u999", "text", "analyst")


def test_save_session_versions_and_freeze(ws):
    uid = make_unit(ws, "u1")
    load_algo_param(ws, uid)
    result = run(ws, "save-session", session=ws.root_session_id)
    child = ws.sessions[result.ids["sessions"][0]]
    assert child.display_name == "sessionA_v1"
    assert ws.sessions[ws.root_session_id].frozen
    with pytest.raises(FrozenVersion):
        ws.create_unit(ws.root_session_id, "late", "analyst")
    with pytest.raises(FrozenVersion):
        ws.append_action(uid, "run-clustering", {}, "analyst")


def test_save_copies_preserve_states(ws):
    uid = make_unit(ws, "u1")
    load_algo_param(ws, uid)
    before = state_hash(replay_best_effort(ws, uid)[0])
    result = run(ws, "save-session", session=ws.root_session_id)
    copy_id = result.ids["units"][0]
    assert copy_id != uid
    assert state_hash(replay_best_effort(ws, copy_id)[0]) == before
    # records were copied with fresh ids
    assert {r.id for r in ws.units[copy_id].local_actions}.isdisjoint(
        {r.id for r in ws.units[uid].local_actions}
    )


def test_branch_session_shares_unit_histories(ws):
    uid = make_unit(ws, "u1")
    load_algo_param(ws, uid)
    result = run(ws, "branch-session", session=ws.root_session_id, base_name="sessionB")
    child = ws.sessions[result.ids["sessions"][0]]
    assert child.display_name == "sessionB_v0"
    assert child.parent_id == ws.root_session_id
    branch_unit = ws.units[result.ids["units"][0]]
    assert branch_unit.branch_parent.unit_id == uid
    assert [r.id for r in ws.effective_history(branch_unit.id)] == [
        r.id for r in ws.effective_history(uid)
    ]
    # the origin stays live after a branch
    append(ws, uid, "run-clustering")


def test_branch_session_duplicate_base_name(ws):
    run(ws, "branch-session", session=ws.root_session_id, base_name="sessionB")
    with pytest.raises(DuplicateName):
        ws.branch_session(ws.root_session_id, "sessionB", "analyst")
    with pytest.raises(DuplicateName):
        ws.branch_session(ws.root_session_id, "sessionA", "analyst")


def test_save_non_leaf_rejected(ws):
    run(ws, "save-session", session=ws.root_session_id)
    with pytest.raises(FrozenVersion):
        execute(ws, "save-session", {"session": ws.root_session_id})


def test_append_only_under_nondestructive_ops(ws):
    """Undo-then-append keeps the undone record in the history."""
    uid = make_unit(ws)
    rid_load, rid_algo, rid_param = load_algo_param(ws, uid)
    run(ws, "edit-undo", unit=uid)
    append(ws, uid, "set-color-scheme", scheme="blues")
    ids = [r.id for r in ws.effective_history(uid)]
    assert rid_param in ids  # nothing was lost by backtracking
    statuses = {r.id: r.status for r in ws.effective_history(uid)}
    assert statuses[rid_param] == RecordStatus.UNDONE


def test_revision_increments_by_one(ws):
    start = ws.revision
    uid = make_unit(ws)
    assert ws.revision == start + 1
    append(ws, uid, "load-data", dataset="cars")
    assert ws.revision == start + 2


def test_effective_history_deterministic(ws):
    uid = make_unit(ws)
    load_algo_param(ws, uid)
    first = [(r.id, r.status) for r in ws.effective_history(uid)]
    second = [(r.id, r.status) for r in ws.effective_history(uid)]
    assert first == second
