"""Dependency checker: classification, capability walks, suggestions,
cascading, and agreement with brute-force execution."""

from __future__ import annotations

import copy

from worktrail.commands import execute
from worktrail.model import RecordStatus
from worktrail.validation import classify, suggest_alternative, validate

from conftest import append, load_algo_param, make_unit, run
from oracle import oracle_execute


def test_classify_categories(ws):
    assert classify(ws, "create-annotation") is False
    assert classify(ws, "create-unit") is False
    assert classify(ws, "select-algorithm") is True
    assert classify(ws, "undo") is True
    assert classify(ws, "set-widget") is False  # widget geometry never breaks


def test_validate_clean_pipeline(ws):
    uid = make_unit(ws)
    load_algo_param(ws, uid)
    report = validate(ws, uid)
    assert report.status == "ok" and report.failures == []


def test_validate_undone_load_warns_with_redo(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, _ = load_algo_param(ws, uid)
    run(ws, "edit-selective-undo", unit=uid, record=rid_load)
    report = validate(ws, uid)
    assert report.status == "warn"
    assert report.failures[0].record_id == rid_algo
    assert report.failures[0].capability == "data-loaded"
    assert report.suggestion.kind == "redo-record"
    assert report.suggestion.target == rid_load


def test_validate_orphan_algorithm_broken(ws):
    uid = make_unit(ws)
    append(ws, uid, "select-algorithm", algorithm="kmeans")
    report = validate(ws, uid)
    assert report.status == "broken"
    assert report.suggestion is None
    assert ws.units[uid].broken  # committed by the append's cascade


def test_failures_cover_all_downstream_records(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, rid_param = load_algo_param(ws, uid)
    rid_run, _ = append(ws, uid, "run-clustering")
    run(ws, "edit-selective-undo", unit=uid, record=rid_algo)
    report = validate(ws, uid)
    failing = [f.record_id for f in report.failures]
    assert failing == [rid_param, rid_run]  # first unmet plus all subsequent


def test_failure_indices_match_effective_positions(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, rid_param = load_algo_param(ws, uid)
    run(ws, "edit-selective-undo", unit=uid, record=rid_load)
    report = validate(ws, uid)
    eff_ids = [r.id for r in ws.effective_history(uid)]
    for f in report.failures:
        assert eff_ids[f.index] == f.record_id


def test_suggest_unskip_for_skipped_provider(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, _ = load_algo_param(ws, uid)
    run(ws, "edit-skip", unit=uid, record=rid_algo)
    report = validate(ws, uid)
    assert report.status == "warn"
    assert report.suggestion.kind == "unskip-record"
    assert report.suggestion.target == rid_algo


def test_suggest_most_recent_provider(ws):
    uid = make_unit(ws)
    append(ws, uid, "load-data", dataset="cars")
    rid_load2, _ = append(ws, uid, "load-data", dataset="cars")
    rid_algo, _ = append(ws, uid, "select-algorithm", algorithm="kmeans")
    run(ws, "edit-selective-undo", unit=uid, record=rid_load2)
    # first load still active, so nothing fails at all
    assert validate(ws, uid).status == "ok"
    rid_load1 = ws.units[uid].local_actions[0].id
    run(ws, "edit-selective-undo", unit=uid, record=rid_load1)
    report = validate(ws, uid)
    assert report.status == "warn"
    assert report.suggestion.target == rid_load2  # recency tie-break


def test_suggest_absent_when_capability_never_provided(ws):
    uid = make_unit(ws)
    append(ws, uid, "select-algorithm", algorithm="kmeans")
    report = validate(ws, uid)
    assert suggest_alternative(ws, uid, "data-loaded", report.failures[0].index) is None


def test_superseded_record_cannot_fail(ws):
    """Only the final action of an override group affects state, so an unmet
    requirement on a superseded record must not flag the pipeline."""
    uid = make_unit(ws)
    rid_load, _ = append(ws, uid, "load-data", dataset="cars")
    # k=3 lands before any algorithm is selected: on its own it could not
    # run, but the later k=5 supersedes it, so the pipeline is sound.
    rid_param3, _ = append(ws, uid, "set-parameter", name="k", value=3)
    rid_algo, _ = append(ws, uid, "select-algorithm", algorithm="kmeans")
    rid_param5, _ = append(ws, uid, "set-parameter", name="k", value=5)
    report = validate(ws, uid)
    assert report.status == "ok"
    assert rid_param3 not in [f.record_id for f in report.failures]
    _, failures = oracle_execute(ws, uid)
    assert failures == []


def test_param_then_algorithm_switch_is_flagged(ws):
    """After switching algorithms, a parameter set under the old selection
    precedes the surviving algorithm action: the replayed script cannot run
    it, and validation and execution agree on that verdict."""
    uid = make_unit(ws)
    append(ws, uid, "load-data", dataset="cars")
    append(ws, uid, "select-algorithm", algorithm="kmeans")
    rid_param, _ = append(ws, uid, "set-parameter", name="k", value=3)
    append(ws, uid, "select-algorithm", algorithm="kmeans")  # supersedes the first
    report = validate(ws, uid)
    _, failures = oracle_execute(ws, uid)
    assert (report.status != "ok") == bool(failures)
    assert [(f.index, f.record_id, f.capability) for f in report.failures] == failures
    assert [f.record_id for f in report.failures] == [rid_param]


def test_cascade_to_branches(ws):
    origin = make_unit(ws, "origin")
    rid_load, _, _ = load_algo_param(ws, origin)
    b1 = run(ws, "branch-unit", origin=origin, name="b1").ids["units"][0]
    b2 = run(ws, "branch-unit", origin=origin, name="b2").ids["units"][0]
    result = run(ws, "edit-selective-undo", unit=origin, record=rid_load)
    assert {r.unit_id for r in result.reports} == {origin, b1, b2}
    assert all(r.status == "warn" for r in result.reports)


def test_cascade_leaf_local_edit_single_report(ws):
    origin = make_unit(ws, "origin")
    load_algo_param(ws, origin)
    b1 = run(ws, "branch-unit", origin=origin, name="b1").ids["units"][0]
    rid_color, _ = append(ws, b1, "set-color-scheme", scheme="blues")
    result = run(ws, "edit-selective-undo", unit=b1, record=rid_color)
    assert [r.unit_id for r in result.reports] == [b1]


def test_cascade_annotation_edit_no_walks(ws):
    uid = make_unit(ws)
    load_algo_param(ws, uid)
    ann = run(ws, "annotate", target=uid, text="note")
    result = run(ws, "edit-selective-undo", unit=uid, record=ann.ids["records"][0])
    assert all(r.status == "ok" for r in result.reports)


def test_branch_point_beyond_record_no_cascade(ws):
    origin = make_unit(ws, "origin")
    rid_load, _, _ = load_algo_param(ws, origin)
    branch = run(ws, "branch-unit", origin=origin, name="b").ids["units"][0]
    rid_color, _ = append(ws, origin, "set-color-scheme", scheme="blues")
    # rid_color was appended after the branch point: not shared
    result = run(ws, "edit-selective-undo", unit=origin, record=rid_color)
    assert [r.unit_id for r in result.reports] == [origin]


def test_fix_soundness_on_examples(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, _ = load_algo_param(ws, uid)
    for flip_op, fix_check in (("edit-selective-undo", "redo-record"), ("edit-skip", "unskip-record")):
        trial = copy.deepcopy(ws)
        result = execute(trial, flip_op, {"unit": uid, "record": rid_load})
        report = next(r for r in result.reports if r.unit_id == uid)
        assert report.suggestion.kind == fix_check
        execute(
            trial,
            "apply-fix",
            {"unit": uid, "kind": report.suggestion.kind, "target": report.suggestion.target},
        )
        assert validate(trial, uid).status == "ok"


def test_undo_last_edit_fix_on_delete(ws):
    uid = make_unit(ws)
    rid_load, _, _ = load_algo_param(ws, uid)
    result = run(ws, "edit-delete", unit=uid, record=rid_load, confirm=True)
    report = next(r for r in result.reports if r.unit_id == uid)
    assert report.status == "broken"
    assert report.undo_last_edit is not None
    execute(
        ws,
        "apply-fix",
        {"unit": uid, "kind": "undo-last-edit", "target": report.undo_last_edit.target},
    )
    assert validate(ws, uid).status == "ok"
    assert ws.record_in_history(uid, rid_load) is not None  # the load is back


def test_undo_last_edit_fix_on_breaking_append(ws):
    uid = make_unit(ws)
    result = run(ws, "append-action", unit=uid, type="select-algorithm", params={"algorithm": "kmeans"})
    report = next(r for r in result.reports if r.unit_id == uid)
    assert report.status == "broken"
    assert report.undo_last_edit is not None
    execute(ws, "apply-fix", {"unit": uid, "kind": "undo-last-edit", "target": report.undo_last_edit.target})
    assert validate(ws, uid).status == "ok"
    # the appended record still exists, deactivated
    appended = ws.units[uid].local_actions[0]
    assert appended.type_name == "select-algorithm"
    assert appended.status == RecordStatus.UNDONE


def test_flag_coherence_after_operations(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, rid_param = load_algo_param(ws, uid)
    b = run(ws, "branch-unit", origin=uid, name="b").ids["units"][0]
    ops = [
        ("edit-selective-undo", {"unit": uid, "record": rid_algo}),
        ("edit-redo", {"unit": uid, "record": rid_algo}),
        ("edit-skip", {"unit": uid, "record": rid_load}),
        ("edit-unskip", {"unit": uid, "record": rid_load}),
        ("append-action", {"unit": b, "type": "run-clustering", "params": {}}),
    ]
    for op, payload in ops:
        run(ws, op, **payload)
        for check_uid in ws.units:
            assert ws.units[check_uid].broken == (validate(ws, check_uid).status == "broken"), (
                op,
                check_uid,
            )


def test_validator_matches_oracle_on_examples(ws):
    uid = make_unit(ws)
    rid_load, rid_algo, rid_param = load_algo_param(ws, uid)
    append(ws, uid, "run-clustering")
    scenarios = [
        ("edit-selective-undo", {"unit": uid, "record": rid_load}),
        ("edit-redo", {"unit": uid, "record": rid_load}),
        ("edit-selective-undo", {"unit": uid, "record": rid_algo}),
        ("edit-skip", {"unit": uid, "record": rid_param}),
    ]
    for op, payload in scenarios:
        run(ws, op, **payload)
        report = validate(ws, uid)
        _, failures = oracle_execute(ws, uid)
        assert (report.status != "ok") == bool(failures), op
        assert [(f.index, f.record_id, f.capability) for f in report.failures] == failures, op
