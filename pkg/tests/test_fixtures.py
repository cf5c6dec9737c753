"""Fixture scripts: every bundled fixture passes its own assertions and
behaves deterministically."""

from __future__ import annotations

import pytest

from worktrail.errors import UnknownFixture
from worktrail.fixtures import (
    FIXTURE_NAMES,
    build_fixture_workspace,
    run_fixture,
)
from worktrail.persistence import dump_doc, workspace_to_doc
from worktrail.replay import replay_best_effort, state_hash


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_passes(name):
    report = run_fixture(name)
    failing = [a.to_dict() for a in report.assertions if not a.ok]
    assert report.passed, failing


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_deterministic(name):
    ws1, _, _ = build_fixture_workspace(name)
    ws2, _, _ = build_fixture_workspace(name)
    assert dump_doc(workspace_to_doc(ws1)) == dump_doc(workspace_to_doc(ws2))
    for uid in ws1.units:
        h1 = state_hash(replay_best_effort(ws1, uid)[0])
        h2 = state_hash(replay_best_effort(ws2, uid)[0])
        assert h1 == h2


def test_unknown_fixture():
    with pytest.raises(UnknownFixture):
        run_fixture("no-such-fixture")


def test_save_heavy_shape():
    ws, _, _ = build_fixture_workspace("save-heavy")
    versions = [s.version for s in ws.sessions.values()]
    assert max(versions) == 5
    live = [s for s in ws.sessions.values() if not s.frozen]
    assert len(live) == 1


def test_branch_heavy_shape():
    ws, _, _ = build_fixture_workspace("branch-heavy")
    roots = [s for s in ws.sessions.values() if s.parent_id is None]
    assert len(roots) == 1
    children = [s for s in ws.sessions.values() if s.parent_id == roots[0].id]
    assert len(children) == 3


def test_broken_demo_fix_applies():
    from worktrail.commands import execute
    from worktrail.validation import validate

    ws, aliases, _ = build_fixture_workspace("broken-pipeline-demo")
    report = ws.report_cache[aliases["u1"]]
    fix = report["suggestion"]
    execute(ws, "apply-fix", {"unit": aliases["u1"], "kind": fix["kind"], "target": fix["target"]})
    assert validate(ws, aliases["u1"]).status == "ok"
