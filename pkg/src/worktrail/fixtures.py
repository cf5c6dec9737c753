"""Reproducible workflow fixtures.

Fixture scripts are JSON documents (the same structured-text dialect as the
workspace format) holding an ordered command list plus terminal assertions:
node counts, broken flags, report shapes, and frozen state hashes. They run
through the same command layer as the CLI and service, under a counting
clock, so two runs produce identical event logs and state hashes.
"""

from __future__ import annotations

import json
import importlib.resources
from dataclasses import dataclass, field
from typing import Any

from .commands import CommandResult, execute, new_workspace
from .errors import UnknownFixture
from .replay import replay_best_effort, state_hash
from .sankey import build_graph
from .workspace import Workspace

FIXTURE_NAMES = [
    "fig1-topology",
    "save-heavy",
    "branch-heavy",
    "broken-pipeline-demo",
    "pipeline-copy-demo",
    "gallery",
]


def counter_clock(start: int = 1_700_000_000_000, step: int = 1000):
    state = {"t": start - step}

    def tick() -> int:
        state["t"] += step
        return state["t"]

    return tick


def _fixture_path(name: str):
    return importlib.resources.files("worktrail.data.fixtures").joinpath(f"{name}.json")


def load_script(name: str) -> dict:
    path = _fixture_path(name)
    try:
        text = path.read_text("utf-8")
    except FileNotFoundError:
        raise UnknownFixture(f"unknown fixture: {name}") from None
    return json.loads(text)


@dataclass
class AssertionResult:
    description: str
    ok: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"description": self.description, "ok": self.ok, "detail": self.detail}


@dataclass
class FixtureReport:
    name: str
    assertions: list[AssertionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.ok for a in self.assertions)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "assertions": [a.to_dict() for a in self.assertions],
        }


_CAPTURE_SLOT = {
    "create-unit": "units",
    "branch-unit": "units",
    "append-action": "records",
    "annotate": "annotations",
    "save-session": "sessions",
    "branch-session": "sessions",
    "create-session": "sessions",
}


def _substitute(value: Any, aliases: dict[str, str]) -> Any:
    if isinstance(value, str) and value.startswith("$"):
        name = value[1:]
        if name not in aliases:
            raise UnknownFixture(f"fixture references unknown alias: {value}")
        return aliases[name]
    if isinstance(value, dict):
        return {k: _substitute(v, aliases) for k, v in value.items()}
    if isinstance(value, list):
        return [_substitute(v, aliases) for v in value]
    return value


def build_fixture_workspace(name: str, clock=None) -> tuple[Workspace, dict[str, str], dict]:
    """Execute a fixture script on a fresh workspace; returns the workspace,
    the alias map, and the parsed script."""
    script = load_script(name)
    init = script.get("init", {})
    ws = new_workspace(
        project=init.get("project", name),
        base_session=init.get("base_session", "session"),
        domain=init.get("domain", "tabular"),
        clock=clock or counter_clock(),
    )
    aliases: dict[str, str] = {"root": ws.root_session_id}
    for cmd in script["commands"]:
        payload = _substitute(cmd.get("payload", {}), aliases)
        result: CommandResult = execute(ws, cmd["op"], payload)
        alias = cmd.get("as")
        if alias:
            slot = _CAPTURE_SLOT.get(cmd["op"], "records")
            aliases[alias] = result.ids[slot][0]
        for name_, (slot, idx) in (cmd.get("captures") or {}).items():
            aliases[name_] = result.ids[slot][idx]
    return ws, aliases, script


def run_fixture(name: str) -> FixtureReport:
    ws, aliases, script = build_fixture_workspace(name)
    report = FixtureReport(name)
    for spec in script.get("assertions", []):
        report.assertions.append(_check(ws, aliases, spec))
    return report


def _session_tree_depth(ws: Workspace) -> int:
    def depth(sid: str) -> int:
        s = ws.sessions[sid]
        return 0 if s.parent_id is None else 1 + depth(s.parent_id)

    return max(depth(sid) for sid in ws.sessions)


def _max_session_fanout(ws: Workspace) -> int:
    counts: dict[str, int] = {}
    for s in ws.sessions.values():
        if s.parent_id is not None:
            counts[s.parent_id] = counts.get(s.parent_id, 0) + 1
    return max(counts.values(), default=0)


def _check(ws: Workspace, aliases: dict[str, str], spec: dict) -> AssertionResult:
    kind = spec["type"]
    resolved = _substitute(spec, aliases)
    try:
        if kind == "session-names":
            got = sorted(s.display_name for s in ws.sessions.values())
            want = sorted(resolved["expect"])
            return AssertionResult(f"session names {want}", got == want, f"got {got}")
        if kind == "graph-counts":
            g = build_graph(ws, resolved["level"], resolved.get("focus"))
            ok = len(g.nodes) == resolved["nodes"] and len(g.links) == resolved["links"]
            return AssertionResult(
                f"{resolved['level']} graph has {resolved['nodes']} nodes / {resolved['links']} links",
                ok,
                f"got {len(g.nodes)} nodes / {len(g.links)} links",
            )
        if kind == "tree-depth-at-least":
            got = _session_tree_depth(ws)
            return AssertionResult(f"session tree depth >= {resolved['value']}", got >= resolved["value"], f"got {got}")
        if kind == "max-fanout-at-most":
            got = _max_session_fanout(ws)
            return AssertionResult(f"branch fan-out <= {resolved['value']}", got <= resolved["value"], f"got {got}")
        if kind == "max-fanout-at-least":
            got = _max_session_fanout(ws)
            return AssertionResult(f"branch fan-out >= {resolved['value']}", got >= resolved["value"], f"got {got}")
        if kind == "not-ok-units":
            bad = [
                uid
                for uid in ws.units
                if (ws.report_cache.get(uid) or {}).get("status", "ok") != "ok"
            ]
            return AssertionResult(
                f"exactly {resolved['count']} unit(s) with a failing pipeline",
                len(bad) == resolved["count"],
                f"got {sorted(bad)}",
            )
        if kind == "report":
            cached = ws.report_cache.get(resolved["unit"], {})
            ok = cached.get("status") == resolved["status"]
            detail = f"status={cached.get('status')}"
            if ok and "suggestion_kind" in resolved:
                sug = cached.get("suggestion") or {}
                ok = sug.get("kind") == resolved["suggestion_kind"]
                if ok and "suggestion_target" in resolved:
                    ok = sug.get("target") == resolved["suggestion_target"]
                detail += f" suggestion={sug}"
            if ok and resolved.get("undo_last_edit_offered"):
                ok = bool(cached.get("undo_last_edit"))
                detail += f" undo_last_edit={cached.get('undo_last_edit')}"
            return AssertionResult(f"report on {resolved['unit']}", ok, detail)
        if kind == "state-hash":
            state, _ = replay_best_effort(ws, resolved["unit"])
            got = state_hash(state)
            return AssertionResult(
                f"state hash of {resolved['unit']}", got == resolved["value"], f"got {got}"
            )
        if kind == "unit-count":
            got = len(ws.units)
            return AssertionResult(f"{resolved['value']} units", got == resolved["value"], f"got {got}")
        if kind == "broken-flags":
            got = sum(1 for u in ws.units.values() if u.broken)
            return AssertionResult(
                f"{resolved['count']} broken flag(s)", got == resolved["count"], f"got {got}"
            )
        return AssertionResult(f"unknown assertion {kind}", False, "unsupported assertion type")
    except Exception as exc:  # fixture issues must surface as failures, not crashes
        return AssertionResult(f"{kind}", False, f"raised {type(exc).__name__}: {exc}")
