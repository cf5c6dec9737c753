"""CLI: init/inspect/append/edit/validate/replay/export/report/log/fixture."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from worktrail import persistence
from worktrail.cli import main
from worktrail.fixtures import build_fixture_workspace


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def demo_dir(tmp_path):
    """The broken-pipeline fixture workspace, materialized to disk, plus the
    id of the load record that was undone."""
    ws, aliases, _ = build_fixture_workspace("broken-pipeline-demo")
    persistence.save_workspace(ws, tmp_path / "demo")
    return tmp_path / "demo", aliases


@pytest.fixture
def clean_dir(tmp_path):
    ws, aliases, _ = build_fixture_workspace("gallery")
    persistence.save_workspace(ws, tmp_path / "gallery")
    return tmp_path / "gallery", aliases


def invoke(runner, workspace, *args, fmt=None):
    argv = ["--workspace", str(workspace)]
    if fmt:
        argv += ["--format", fmt]
    argv += list(args)
    return runner.invoke(main, argv)


def test_init_and_inspect(runner, tmp_path):
    result = invoke(runner, tmp_path / "w", "init", "--project", "p", "--session-base", "sessionA")
    assert result.exit_code == 0, result.output
    result = invoke(runner, tmp_path / "w", "inspect")
    assert result.exit_code == 0
    assert "sessionA_v0" in result.output
    # re-init refuses to clobber
    result = invoke(runner, tmp_path / "w", "init")
    assert result.exit_code != 0


def test_validate_exit_codes(runner, demo_dir, clean_dir):
    demo, aliases = demo_dir
    clean, _ = clean_dir
    # clean workspace: exit 0
    result = invoke(runner, clean, "validate")
    assert result.exit_code == 0, result.output
    # warn-only workspace: still exit 0 (a fix exists)
    result = invoke(runner, demo, "validate")
    assert result.exit_code == 0
    assert "warn" in result.output
    # physically delete the undone load: no redo candidate -> broken, exit 2
    result = invoke(runner, demo, "edit", "delete", "--unit", aliases["u1"], "--record", aliases["load1"], "--confirm")
    assert result.exit_code == 0, result.output
    result = invoke(runner, demo, "validate")
    assert result.exit_code == 2
    assert "broken" in result.output


def test_edit_undo_then_validate_warn(runner, clean_dir):
    clean, aliases = clean_dir
    live_unit = aliases["u1v1"]  # v0 froze when the gallery saved
    ws = persistence.load_workspace(clean)
    live_load = next(r.id for r in ws.units[live_unit].local_actions if r.type_name == "load-data")
    result = invoke(runner, clean, "edit", "selective-undo", "--unit", live_unit, "--record", live_load)
    assert result.exit_code == 0, result.output
    result = invoke(runner, clean, "validate", fmt="json")
    assert result.exit_code == 0  # warn only: the load can be redone
    reports = json.loads(result.output)
    statuses = {r["unit"]: r["status"] for r in reports}
    assert statuses[live_unit] == "warn"


def test_append_via_cli(runner, tmp_path):
    invoke(runner, tmp_path / "w", "init")
    ws = persistence.load_workspace(tmp_path / "w")
    from worktrail.commands import execute

    uid = execute(ws, "create-unit", {"session": ws.root_session_id, "name": "u1"}).ids["units"][0]
    persistence.save_workspace(ws, tmp_path / "w")
    result = invoke(
        runner, tmp_path / "w", "append", "--unit", uid, "--type", "load-data", "--param", "dataset=cars"
    )
    assert result.exit_code == 0, result.output
    result = invoke(runner, tmp_path / "w", "append", "--unit", uid, "--type", "select-algorithm", "--param", 'algorithm="kmeans"')
    assert result.exit_code == 0, result.output
    ws = persistence.load_workspace(tmp_path / "w")
    assert [r.type_name for r in ws.units[uid].local_actions] == ["load-data", "select-algorithm"]


def test_replay_command(runner, clean_dir):
    clean, aliases = clean_dir
    result = invoke(runner, clean, "replay", aliases["u1"], fmt="json")
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["state"]["algorithm"] == "kmeans"
    result = invoke(runner, clean, "replay", aliases["u1"], "--up-to", aliases["load1"], fmt="json")
    payload = json.loads(result.output)
    assert payload["state"]["algorithm"] is None


def test_export_sankey_byte_identical(runner, clean_dir, tmp_path):
    clean, _ = clean_dir
    out1 = tmp_path / "a.svg"
    out2 = tmp_path / "b.svg"
    assert invoke(runner, clean, "export-sankey", "--level", "session", "--out", str(out1)).exit_code == 0
    assert invoke(runner, clean, "export-sankey", "--level", "session", "--out", str(out2)).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert b"<svg" in out1.read_bytes()


def test_report_writes_csv_and_figures(runner, clean_dir, tmp_path):
    clean, _ = clean_dir
    out = tmp_path / "report"
    result = invoke(runner, clean, "report", "--out-dir", str(out))
    assert result.exit_code == 0, result.output
    names = {p.name for p in out.iterdir()}
    assert {"sessions.csv", "units.csv", "validation.csv", "graph_nodes.csv", "graph_links.csv"} <= names
    assert {"workflow_sessions.png", "workflow_units.png", "category_breakdown.png"} <= names
    header = (out / "units.csv").read_text().splitlines()[0]
    assert header == "id,name,session,history_len,bookmarked,broken,state_hash"


def test_log_dump(runner, clean_dir):
    clean, _ = clean_dir
    result = invoke(runner, clean, "log")
    assert result.exit_code == 0
    assert "init" in result.output and "create-unit" in result.output


def test_recover_command(runner, clean_dir):
    clean, _ = clean_dir
    result = invoke(runner, clean, "recover", "sessionA_v0")
    assert result.exit_code != 0  # gallery's base session is "exploration"
    result = invoke(runner, clean, "recover", "exploration_v0")
    assert result.exit_code == 0, result.output
    assert "cached=True" in result.output


def test_fixture_command(runner, tmp_path):
    runner_ = CliRunner()
    result = runner_.invoke(main, ["--workspace", str(tmp_path / "fx"), "fixture", "fig1-topology", "--materialize"])
    assert result.exit_code == 0, result.output
    assert "[PASS]" in result.output and "[FAIL]" not in result.output
    assert (tmp_path / "fx" / "workspace.json").exists()


def test_edit_insert_via_cli(runner, tmp_path):
    invoke(runner, tmp_path / "w", "init")
    ws = persistence.load_workspace(tmp_path / "w")
    from worktrail.commands import execute

    uid = execute(ws, "create-unit", {"session": ws.root_session_id, "name": "u1"}).ids["units"][0]
    execute(ws, "append-action", {"unit": uid, "type": "select-algorithm", "params": {"algorithm": "kmeans"}})
    persistence.save_workspace(ws, tmp_path / "w")
    result = invoke(
        runner, tmp_path / "w", "edit", "insert",
        "--unit", uid, "--type", "load-data", "--param", "dataset=cars", "--at", "0",
    )
    assert result.exit_code == 0, result.output
    result = invoke(runner, tmp_path / "w", "validate")
    assert result.exit_code == 0  # the inserted load heals the pipeline


def test_unknown_unit_errors_nonzero(runner, clean_dir):
    clean, _ = clean_dir
    result = invoke(runner, clean, "replay", "u999")
    assert result.exit_code != 0
    assert "UnknownRef" in result.output
