"""Workspace reports: delimited summaries plus rendered figures.

``write_report`` drops CSV tables (sessions, units, validation, graph nodes
and links) and matplotlib figures (the workflow sankey and a category
breakdown) into an output directory, for offline review outside the live
explorer.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch, Rectangle

from .model import CATEGORY_ORDER
from .replay import replay_best_effort, state_hash
from .sankey import CATEGORY_COLORS, NODE_WIDTH, SankeyGraph, build_graph
from .validation import validate
from .workspace import Workspace


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _num(ref: str) -> int:
    return int(ref[1:])


def sankey_figure(graph: SankeyGraph, title: str) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(9, 5))
    for link in graph.links:
        src = graph.node(link.source)
        dst = graph.node(link.target)
        total = max(link.total, 1)
        y0 = src.y + src.height / 2
        y1 = dst.y + dst.height / 2
        offset = 0.0
        for category, count in link.segments or [("management", 0)]:
            lw = 1.0 + 6.0 * (count / total)
            ax.add_patch(
                FancyArrowPatch(
                    (src.x + NODE_WIDTH, y0 + offset),
                    (dst.x, y1 + offset),
                    connectionstyle="arc3,rad=0.12",
                    arrowstyle="-",
                    linewidth=lw,
                    color=graph.legend.get(category, "#999999"),
                    alpha=0.6,
                )
            )
            offset += lw * 0.4
    for node in graph.nodes:
        color = graph.legend.get(node.dominant_category, "#999999")
        ax.add_patch(Rectangle((node.x, node.y), NODE_WIDTH, node.height, color=color))
        label = node.label + (" ★" if node.starred else "") + (" !" if node.broken else "")
        ax.text(node.x + NODE_WIDTH + 4, node.y + node.height / 2, label, fontsize=8, va="center")
    handles = [plt.Line2D([0], [0], color=c, lw=6) for c in CATEGORY_COLORS.values()]
    ax.legend(handles, [c.value for c in CATEGORY_ORDER], fontsize=7, loc="lower right")
    ax.set_title(title, fontsize=10)
    ax.relim()
    ax.autoscale_view()
    ax.invert_yaxis()
    ax.axis("off")
    fig.tight_layout()
    return fig


def write_report(ws: Workspace, out_dir: str | Path, focus: str | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    session_rows = []
    for sid in sorted(ws.sessions, key=_num):
        s = ws.sessions[sid]
        session_rows.append(
            [s.id, s.display_name, s.version, s.parent_id or "", int(s.frozen), len(s.unit_ids)]
        )
    _write_csv(out / "sessions.csv", ["id", "name", "version", "parent", "frozen", "units"], session_rows)
    written.append(out / "sessions.csv")

    unit_rows = []
    validation_rows = []
    for uid in sorted(ws.units, key=_num):
        unit = ws.units[uid]
        state, failures = replay_best_effort(ws, uid)
        unit_rows.append(
            [
                unit.id,
                unit.name,
                unit.session_id,
                len(ws.effective_history(uid)),
                int(unit.bookmarked),
                int(unit.broken),
                state_hash(state),
            ]
        )
        report = validate(ws, uid)
        for f in report.failures:
            validation_rows.append([unit.id, report.status, f.index, f.record_id, f.capability])
        if not report.failures:
            validation_rows.append([unit.id, report.status, "", "", ""])
    _write_csv(
        out / "units.csv",
        ["id", "name", "session", "history_len", "bookmarked", "broken", "state_hash"],
        unit_rows,
    )
    _write_csv(
        out / "validation.csv",
        ["unit", "status", "failure_index", "record", "missing_capability"],
        validation_rows,
    )
    written += [out / "units.csv", out / "validation.csv"]

    graph = build_graph(ws, "session")
    node_rows = [
        [n.id, n.label, n.depth, n.action_count, n.dominant_category, int(n.starred), int(n.broken)]
        for n in graph.nodes
    ]
    link_rows = [
        [l.source, l.target, l.total]
        + [dict(l.segments).get(c.value, 0) for c in CATEGORY_ORDER]
        for l in graph.links
    ]
    _write_csv(
        out / "graph_nodes.csv",
        ["id", "label", "depth", "actions", "dominant_category", "starred", "broken"],
        node_rows,
    )
    _write_csv(
        out / "graph_links.csv",
        ["source", "target", "total"] + [c.value for c in CATEGORY_ORDER],
        link_rows,
    )
    written += [out / "graph_nodes.csv", out / "graph_links.csv"]

    fig = sankey_figure(graph, f"{ws.project_name}: session workflow")
    fig.savefig(out / "workflow_sessions.png", dpi=120)
    plt.close(fig)
    written.append(out / "workflow_sessions.png")

    focus_id = focus or _default_focus(ws)
    if focus_id is not None:
        unit_graph = build_graph(ws, "unit", focus_id)
        fig = sankey_figure(unit_graph, f"unit workflow in {ws.sessions[focus_id].display_name}")
        fig.savefig(out / "workflow_units.png", dpi=120)
        plt.close(fig)
        written.append(out / "workflow_units.png")

    fig, ax = plt.subplots(figsize=(6, 3.2))
    totals = {c: 0 for c in CATEGORY_ORDER}
    for unit in ws.units.values():
        for rec in unit.local_actions:
            totals[rec.category] += 1
    for s in ws.sessions.values():
        for rec in s.session_actions:
            totals[rec.category] += 1
    ax.bar(
        [c.value for c in CATEGORY_ORDER],
        [totals[c] for c in CATEGORY_ORDER],
        color=[CATEGORY_COLORS[c] for c in CATEGORY_ORDER],
    )
    ax.set_ylabel("recorded actions")
    ax.set_title("actions by category", fontsize=10)
    fig.tight_layout()
    fig.savefig(out / "category_breakdown.png", dpi=120)
    plt.close(fig)
    written.append(out / "category_breakdown.png")
    return written


def _default_focus(ws: Workspace) -> str | None:
    live = [s for s in ws.sessions.values() if not s.frozen and s.unit_ids]
    if not live:
        return None
    return max(live, key=lambda s: int(s.id[1:])).id
