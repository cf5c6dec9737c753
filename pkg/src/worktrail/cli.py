"""Command-line interface for offline inspection, replay, editing, export,
and serving a workspace."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import persistence
from .commands import execute, new_workspace
from .errors import WorktrailError
from .fixtures import FIXTURE_NAMES, build_fixture_workspace, run_fixture
from .replay import recover_session, replay_best_effort, state_hash
from .sankey import build_graph, render_svg
from .validation import validate
from .workspace import Workspace


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _load(ctx: click.Context) -> Workspace:
    path = ctx.obj["workspace"]
    try:
        return persistence.load_workspace(path)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")


def _save(ctx: click.Context, ws: Workspace) -> None:
    persistence.save_workspace(ws, ctx.obj["workspace"])


@click.group()
@click.option(
    "--workspace",
    "-w",
    default="workspace",
    show_default=True,
    help="Workspace directory (workspace.json + events.jsonl).",
)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--seed", type=int, default=42, show_default=True, help="Default clustering seed for appended actions.")
@click.pass_context
def main(ctx: click.Context, workspace: str, fmt: str, seed: int) -> None:
    """worktrail: record, edit, validate, and replay analysis workflows."""
    ctx.obj = {"workspace": workspace, "format": fmt, "seed": seed}


@main.command()
@click.option("--project", default="project", show_default=True)
@click.option("--session-base", default="sessionA", show_default=True)
@click.option("--analyst", default=None, help="Analyst name recorded in the project metadata.")
@click.option("--notes", default=None, help="Free-text note recorded in the project metadata.")
@click.pass_context
def init(ctx: click.Context, project: str, session_base: str, analyst: str | None, notes: str | None) -> None:
    """Create a fresh workspace directory."""
    path = Path(ctx.obj["workspace"])
    if (path / persistence.DOC_NAME).exists():
        raise click.ClickException(f"workspace already exists at {path}")
    metadata = {}
    if analyst:
        metadata["analyst"] = analyst
    if notes:
        metadata["notes"] = notes
    ws = new_workspace(project=project, base_session=session_base, metadata=metadata)
    persistence.save_workspace(ws, path)
    click.echo(f"initialized workspace {project!r} at {path} (root session {ws.root_session_id})")


@main.command()
@click.pass_context
def inspect(ctx: click.Context) -> None:
    """Print the session/unit tree with counts and flags."""
    ws = _load(ctx)
    if ctx.obj["format"] == "json":
        _echo_json(persistence.workspace_to_doc(ws))
        return
    click.echo(f"project: {ws.project_name}  (revision {ws.revision}, domain {ws.domain.name})")
    roots = [s for s in ws.sessions.values() if s.parent_id is None]

    def show(session, indent):
        flags = " [frozen]" if session.frozen else ""
        stars = " *" if ws.live_annotations(session.id) else ""
        click.echo(f"{indent}{session.display_name} ({session.id}){flags}{stars}")
        for uid in session.unit_ids:
            unit = ws.units[uid]
            eff = len(ws.effective_history(uid))
            marks = "".join(
                [
                    " *" if ws.live_annotations(uid) else "",
                    " [broken]" if unit.broken else "",
                    " [bookmark]" if unit.bookmarked else "",
                ]
            )
            click.echo(f"{indent}  - {unit.name} ({uid}): {eff} actions{marks}")
        children = [s for s in ws.sessions.values() if s.parent_id == session.id]
        for child in sorted(children, key=lambda s: int(s.id[1:])):
            show(child, indent + "    ")

    for root in sorted(roots, key=lambda s: int(s.id[1:])):
        show(root, "")


@main.command()
@click.argument("unit")
@click.option("--up-to", default=None, help="Replay only up to (and including) this record id.")
@click.pass_context
def replay(ctx: click.Context, unit: str, up_to: str | None) -> None:
    """Replay a unit and print its state."""
    ws = _load(ctx)
    try:
        resolved = ws.resolve_unit(unit)
        state, failures = replay_best_effort(ws, resolved.id, up_to)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")
    payload = {
        "unit": resolved.id,
        "state": state.to_dict(),
        "hash": state_hash(state),
        "failures": [f.to_dict() for f in failures],
    }
    if ctx.obj["format"] == "json":
        _echo_json(payload)
    else:
        click.echo(f"unit {resolved.id} ({resolved.name})  hash {payload['hash'][:16]}")
        for key, value in sorted(state.to_dict().items()):
            click.echo(f"  {key}: {json.dumps(value, sort_keys=True)}")
        for f in failures:
            click.echo(f"  ! record {f.record_id} at {f.index} missing {f.capability}")


@main.command(name="validate")
@click.option("--unit", default=None, help="Validate one unit instead of all.")
@click.pass_context
def validate_cmd(ctx: click.Context, unit: str | None) -> None:
    """Run the dependency checker; exit 2 if any pipeline is broken."""
    ws = _load(ctx)
    unit_ids = [ws.resolve_unit(unit).id] if unit else sorted(ws.units, key=lambda u: int(u[1:]))
    reports = [validate(ws, uid) for uid in unit_ids]
    if ctx.obj["format"] == "json":
        _echo_json([r.to_dict() for r in reports])
    else:
        for r in reports:
            line = f"{r.unit_id}: {r.status}"
            if r.failures:
                f = r.failures[0]
                line += f"  (record {f.record_id} missing {f.capability} at {f.index})"
            if r.suggestion:
                line += f"  fix: {r.suggestion.kind} {r.suggestion.target}"
            click.echo(line)
    if any(r.status == "broken" for r in reports):
        sys.exit(2)


@main.command()
@click.argument("subcommand")
@click.option("--unit", default=None)
@click.option("--record", default=None)
@click.option("--src", default=None)
@click.option("--dst", default=None)
@click.option("--first", default=None)
@click.option("--last", default=None)
@click.option("--at", type=int, default=0, show_default=True)
@click.option("--type", "type_name", default=None)
@click.option("--param", "params", multiple=True, help="key=value (repeatable; values parsed as JSON when possible)")
@click.option("--confirm", is_flag=True, default=False)
@click.option("--author", default="analyst", show_default=True)
@click.pass_context
def edit(ctx: click.Context, subcommand, unit, record, src, dst, first, last, at, type_name, params, confirm, author):
    """Scripted edits: undo, redo, selective-undo, skip, unskip, delete,
    insert, copy, move, cut, paste."""
    ws = _load(ctx)
    payload = {"author": author}
    if unit:
        payload["unit"] = unit
    if record:
        payload["record"] = record
    if src:
        payload["src"] = src
    if dst:
        payload["dst"] = dst
    if first:
        payload["first"] = first
    if last:
        payload["last"] = last
    if subcommand in ("copy", "move", "paste", "insert"):
        payload["at"] = at
    if confirm:
        payload["confirm"] = True
    if type_name:
        payload["type"] = type_name
        payload["params"] = _parse_params(params, ctx.obj["seed"], type_name)
    try:
        result = execute(ws, f"edit-{subcommand}", payload)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")
    _save(ctx, ws)
    if ctx.obj["format"] == "json":
        _echo_json(result.to_dict())
    else:
        click.echo(f"ok: edit-{subcommand} (revision {ws.revision})")
        for r in result.reports:
            click.echo(f"  {r.unit_id}: {r.status}")


@main.command()
@click.option("--unit", required=True)
@click.option("--type", "type_name", required=True)
@click.option("--param", "params", multiple=True, help="key=value (repeatable)")
@click.option("--author", default="analyst", show_default=True)
@click.pass_context
def append(ctx: click.Context, unit, type_name, params, author):
    """Append an action to a unit."""
    ws = _load(ctx)
    payload = {
        "unit": unit,
        "type": type_name,
        "params": _parse_params(params, ctx.obj["seed"], type_name),
        "author": author,
    }
    try:
        result = execute(ws, "append-action", payload)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")
    _save(ctx, ws)
    record_id = result.ids["records"][0]
    click.echo(f"appended {record_id} ({type_name}) to {unit}")
    for r in result.reports:
        if r.status != "ok":
            click.echo(f"  warning: {r.unit_id} is {r.status}")


def _parse_params(pairs, seed: int, type_name: str | None) -> dict:
    out = {}
    for pair in pairs:
        key, _, raw = pair.partition("=")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    if type_name == "run-clustering" and "seed" not in out:
        out["seed"] = seed
    return out


@main.command(name="export-sankey")
@click.option("--level", type=click.Choice(["session", "unit"]), default="session", show_default=True)
@click.option("--focus", default=None, help="Focus session for unit-level graphs.")
@click.option("--out", "out_path", required=True)
@click.pass_context
def export_sankey(ctx: click.Context, level: str, focus: str | None, out_path: str) -> None:
    """Export the workflow graph as a standalone SVG (deterministic bytes)."""
    ws = _load(ctx)
    try:
        graph = build_graph(ws, level, focus)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")
    Path(out_path).write_bytes(render_svg(graph).encode("utf-8"))
    click.echo(f"wrote {out_path} ({len(graph.nodes)} nodes, {len(graph.links)} links)")


@main.command()
@click.option("--out-dir", default="report", show_default=True)
@click.option("--focus", default=None)
@click.pass_context
def report(ctx: click.Context, out_dir: str, focus: str | None) -> None:
    """Write CSV summaries and rendered workflow figures."""
    from .report import write_report

    ws = _load(ctx)
    files = write_report(ws, out_dir, focus)
    for f in files:
        click.echo(f"wrote {f}")


@main.command()
@click.argument("session", required=False)
@click.pass_context
def recover(ctx: click.Context, session: str | None) -> None:
    """Time-machine recovery: print the replayed states of a session version."""
    ws = _load(ctx)
    ref = session or ws.root_session_id
    try:
        payload = recover_session(ws, ref)
    except WorktrailError as exc:
        raise click.ClickException(f"{exc.kind}: {exc.message}")
    if ctx.obj["format"] == "json":
        _echo_json(payload)
    else:
        click.echo(f"{payload['display_name']} (cached={payload['cached']})")
        for uid, entry in sorted(payload["units"].items()):
            click.echo(f"  {uid}: {entry['status']}  hash {entry['hash'][:16]}")


@main.command()
@click.pass_context
def log(ctx: click.Context) -> None:
    """Dump the event log."""
    ws = _load(ctx)
    if ctx.obj["format"] == "json":
        _echo_json(ws.event_log)
        return
    for entry in ws.event_log:
        click.echo(
            f"{entry['seq']:>4}  {entry['ts']}  {entry['op']}  "
            + json.dumps(entry["payload"], sort_keys=True)
        )


@main.command()
@click.argument("name", type=click.Choice(FIXTURE_NAMES))
@click.option("--materialize", is_flag=True, help="Also write the fixture workspace to --workspace.")
@click.pass_context
def fixture(ctx: click.Context, name: str, materialize: bool) -> None:
    """Run a bundled fixture script and print its assertion report."""
    report_ = run_fixture(name)
    for a in report_.assertions:
        mark = "PASS" if a.ok else "FAIL"
        click.echo(f"[{mark}] {a.description}  {a.detail}")
    if materialize:
        ws, _, _ = build_fixture_workspace(name)
        persistence.save_workspace(ws, ctx.obj["workspace"])
        click.echo(f"materialized {name} at {ctx.obj['workspace']}")
    if not report_.passed:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8800, show_default=True)
@click.option("--static", "static_dir", default=None, help="Directory with the browser explorer build.")
@click.pass_context
def serve(ctx: click.Context, host: str, port: int, static_dir: str | None) -> None:
    """Serve the workspace API (and optionally the browser explorer)."""
    from .service import serve as run_service

    ws = _load(ctx)
    click.echo(f"serving {ws.project_name} on http://{host}:{port}")
    run_service(ws, host, port, storage_dir=ctx.obj["workspace"], static_dir=static_dir)


if __name__ == "__main__":
    main()
