"""Workflow sankey graphs: session-level and unit-level views.

Nodes are sessions or units; a link carries the target's delta actions
(the actions newly performed on it), segmented by category. Node color is
the dominant category of the actions on the node, a star marks annotated
nodes, and a badge marks broken ones. Layout is layered: depth is the
longest-path distance from the roots, vertical order comes from two
barycenter sweeps, and heights scale with action counts. Everything is a
pure function of the workspace structure, so repeated exports are
byte-identical.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import IntegrityError, UnknownRef
from .model import ActionCategory, CATEGORY_ORDER, Session, Unit
from .replay import actions_between

if TYPE_CHECKING:
    from .workspace import Workspace

CATEGORY_COLORS = {
    ActionCategory.MANAGEMENT: "#4c78a8",  # blue
    ActionCategory.ANALYSIS: "#59a14f",  # green
    ActionCategory.ANNOTATION: "#f28e2b",  # orange
    ActionCategory.HISTORY: "#b07aa1",  # purple
}

COLUMN_WIDTH = 160.0
NODE_WIDTH = 26.0
MIN_HEIGHT = 18.0
HEIGHT_PER_ACTION = 4.0
GAP = 14.0


@dataclass
class SankeyNode:
    id: str
    label: str
    kind: str  # "session" | "unit"
    action_count: int
    category_histogram: dict[str, int]
    dominant_category: str
    starred: bool
    broken: bool
    bookmarked: bool
    glyph: str | None = None
    depth: int = 0
    x: float = 0.0
    y: float = 0.0
    height: float = MIN_HEIGHT

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "kind": self.kind,
            "action_count": self.action_count,
            "category_histogram": self.category_histogram,
            "dominant_category": self.dominant_category,
            "starred": self.starred,
            "broken": self.broken,
            "bookmarked": self.bookmarked,
            "glyph": self.glyph,
            "depth": self.depth,
            "x": round(self.x, 2),
            "y": round(self.y, 2),
            "height": round(self.height, 2),
        }


@dataclass
class SankeyLink:
    source: str
    target: str
    segments: list[tuple[str, int]]  # (category, count) in fixed category order

    @property
    def total(self) -> int:
        return sum(c for _, c in self.segments)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "segments": [{"category": c, "count": n} for c, n in self.segments],
            "total": self.total,
        }


@dataclass
class SankeyGraph:
    level: str  # "session" | "unit"
    focus: str | None
    nodes: list[SankeyNode]
    links: list[SankeyLink]
    overview: "SankeyGraph | None" = None
    legend: dict[str, str] = field(
        default_factory=lambda: {c.value: CATEGORY_COLORS[c] for c in CATEGORY_ORDER}
    )

    def node(self, node_id: str) -> SankeyNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UnknownRef(f"node {node_id} not in graph")

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "focus": self.focus,
            "nodes": [n.to_dict() for n in self.nodes],
            "links": [l.to_dict() for l in self.links],
            "overview": self.overview.to_dict() if self.overview else None,
            "legend": dict(self.legend),
        }


def _histogram(records) -> Counter:
    return Counter(r.category for r in records)


def _dominant(hist: Counter) -> ActionCategory:
    # argmax with ties broken by the fixed category order
    return max(CATEGORY_ORDER, key=lambda c: (hist.get(c, 0), -CATEGORY_ORDER.index(c)))


def _segments(hist: Counter) -> list[tuple[str, int]]:
    return [(c.value, hist[c]) for c in CATEGORY_ORDER if hist.get(c, 0) > 0]


def _session_node(ws: Workspace, session: Session) -> SankeyNode:
    owned = list(session.session_actions)
    for uid in session.unit_ids:
        owned.extend(ws.units[uid].local_actions)
    hist = _histogram(owned)
    return SankeyNode(
        id=session.id,
        label=session.display_name,
        kind="session",
        action_count=len(owned),
        category_histogram={c.value: hist[c] for c in CATEGORY_ORDER if hist.get(c, 0)},
        dominant_category=_dominant(hist).value,
        starred=bool(ws.live_annotations(session.id)),
        broken=any(ws.units[uid].broken for uid in session.unit_ids),
        bookmarked=any(ws.units[uid].bookmarked for uid in session.unit_ids),
    )


def _unit_node(ws: Workspace, unit: Unit) -> SankeyNode:
    eff = ws.effective_history(unit.id)
    hist = _histogram(eff)
    return SankeyNode(
        id=unit.id,
        label=unit.name,
        kind="unit",
        action_count=len(eff),
        category_histogram={c.value: hist[c] for c in CATEGORY_ORDER if hist.get(c, 0)},
        dominant_category=_dominant(hist).value,
        starred=bool(ws.live_annotations(unit.id)),
        broken=unit.broken,
        bookmarked=unit.bookmarked,
        glyph=ws.domain.glyph_for_history(eff),
    )


def build_graph(ws: Workspace, level: str, focus: str | None = None) -> SankeyGraph:
    if level == "session":
        return _build_session_graph(ws)
    if level == "unit":
        if focus is None:
            raise UnknownRef("unit-level graph needs a focus session")
        return _build_unit_graph(ws, focus)
    raise UnknownRef(f"unknown graph level: {level}")


def _build_session_graph(ws: Workspace) -> SankeyGraph:
    order = sorted(ws.sessions, key=lambda s: int(s[1:]))
    nodes = [_session_node(ws, ws.sessions[sid]) for sid in order]
    links = []
    for sid in order:
        session = ws.sessions[sid]
        if session.parent_id is not None:
            hist = _histogram(ws.session_delta_records(sid))
            links.append(SankeyLink(session.parent_id, sid, _segments(hist)))
    graph = SankeyGraph("session", None, nodes, links)
    layout(graph)
    return graph


def _build_unit_graph(ws: Workspace, focus_ref: str) -> SankeyGraph:
    focus = ws.resolve_session(focus_ref)
    include: list[str] = []
    seen = set()

    def add_with_lineage(uid: str) -> None:
        chain = []
        cur = uid
        while cur is not None and cur not in seen:
            chain.append(cur)
            seen.add(cur)
            parent = ws.units[cur].branch_parent
            cur = parent.unit_id if parent else None
        include.extend(reversed(chain))

    for uid in focus.unit_ids:
        add_with_lineage(uid)
    include.sort(key=lambda u: int(u[1:]))
    nodes = [_unit_node(ws, ws.units[uid]) for uid in include]
    links = []
    for uid in include:
        unit = ws.units[uid]
        if unit.branch_parent and unit.branch_parent.unit_id in seen:
            hist = _histogram(unit.local_actions)  # the unit's delta
            links.append(SankeyLink(unit.branch_parent.unit_id, uid, _segments(hist)))
    graph = SankeyGraph("unit", focus.id, nodes, links)
    layout(graph)
    graph.overview = _build_session_graph(ws)
    return graph


def layout(graph: SankeyGraph) -> SankeyGraph:
    """Assign depth columns, vertical order, and coordinates in place."""
    nodes = {n.id: n for n in graph.nodes}
    incoming: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    outgoing: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for link in graph.links:
        incoming[link.target].append(link.source)
        outgoing[link.source].append(link.target)

    # longest-path depth from the roots; cycles are corruption
    depth: dict[str, int] = {}

    def assign(nid: str, stack: tuple) -> int:
        if nid in stack:
            raise IntegrityError(f"cycle through {nid} in workflow graph")
        if nid in depth:
            return depth[nid]
        parents = incoming[nid]
        d = 0 if not parents else 1 + max(assign(p, stack + (nid,)) for p in parents)
        depth[nid] = d
        return d

    creation = {n.id: i for i, n in enumerate(graph.nodes)}  # stable base order
    for n in graph.nodes:
        n.depth = assign(n.id, ())
        n.x = n.depth * COLUMN_WIDTH
        n.height = max(MIN_HEIGHT, HEIGHT_PER_ACTION * n.action_count)

    max_depth = max((n.depth for n in graph.nodes), default=0)
    columns: list[list[str]] = [[] for _ in range(max_depth + 1)]
    for n in graph.nodes:
        columns[n.depth].append(n.id)
    for col in columns:
        col.sort(key=lambda nid: creation[nid])

    rank = {nid: i for col in columns for i, nid in enumerate(col)}

    def barycenter(nid: str, neighbors: list[str]) -> float:
        known = [rank[p] for p in neighbors if p in rank]
        return sum(known) / len(known) if known else float(rank[nid])

    # two sweeps: parents pull left-to-right, children pull right-to-left
    for col in columns[1:]:
        col.sort(key=lambda nid: (barycenter(nid, incoming[nid]), creation[nid]))
        rank.update({nid: i for i, nid in enumerate(col)})
    for col in reversed(columns[:-1]):
        col.sort(key=lambda nid: (barycenter(nid, outgoing[nid]), creation[nid]))
        rank.update({nid: i for i, nid in enumerate(col)})

    for col in columns:  # initial vertical packing
        y = 0.0
        for nid in col:
            nodes[nid].y = y
            y += nodes[nid].height + GAP

    for col in reversed(columns[:-1]):  # center parents on their children
        cursor = float("-inf")
        for nid in col:
            node = nodes[nid]
            kids = [nodes[c] for c in outgoing[nid] if c in nodes]
            if kids:
                center = sum(k.y + k.height / 2 for k in kids) / len(kids)
                node.y = center - node.height / 2
            node.y = max(node.y, 0.0 if cursor == float("-inf") else cursor)
            cursor = node.y + node.height + GAP
    return graph


def range_selection(ws: Workspace, graph: SankeyGraph, start_id: str, end_id: str) -> dict:
    """Action list between two nodes of the graph plus highlight roles for
    the UI (start and end get distinct colors)."""
    graph.node(start_id)
    graph.node(end_id)
    records = actions_between(ws, start_id, end_id)
    return {
        "start": start_id,
        "end": end_id,
        "records": [r.to_dict() for r in records],
        "highlight": {start_id: "start", end_id: "end"},
    }


# ---------------------------------------------------------------------------
# SVG export (hand-rolled so byte output is deterministic)
# ---------------------------------------------------------------------------


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_svg(graph: SankeyGraph) -> str:
    nodes = {n.id: n for n in graph.nodes}
    pad = 20.0
    width = max((n.x + NODE_WIDTH for n in graph.nodes), default=0.0) + pad * 2 + 120
    height = max((n.y + n.height for n in graph.nodes), default=0.0) + pad * 2 + 70
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}" font-family="sans-serif">',
        f'<!-- workflow graph: level={graph.level} nodes={len(graph.nodes)} links={len(graph.links)} -->',
    ]
    for link in graph.links:
        src, dst = nodes[link.source], nodes[link.target]
        x0, x1 = src.x + NODE_WIDTH + pad, dst.x + pad
        total = max(link.total, 1)
        band = min(src.height, dst.height, 4.0 + 2.0 * total)
        y_off = 0.0
        for category, count in link.segments or [("management", 0)]:
            seg_h = band * (count / total) if total else band
            y0 = src.y + pad + src.height / 2 - band / 2 + y_off + seg_h / 2
            y1 = dst.y + pad + dst.height / 2 - band / 2 + y_off + seg_h / 2
            color = graph.legend.get(category, "#999999")
            mx = (x0 + x1) / 2
            out.append(
                f'<path d="M {_f(x0)} {_f(y0)} C {_f(mx)} {_f(y0)}, {_f(mx)} {_f(y1)}, '
                f'{_f(x1)} {_f(y1)}" stroke="{color}" stroke-width="{_f(max(seg_h, 1.5))}" '
                f'fill="none" opacity="0.55"/>'
            )
            y_off += seg_h
    for n in graph.nodes:
        color = graph.legend.get(n.dominant_category, "#999999")
        x, y = n.x + pad, n.y + pad
        out.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(NODE_WIDTH)}" height="{_f(n.height)}" '
            f'fill="{color}" stroke="#333333" stroke-width="1"/>'
        )
        label = _escape(n.label)
        out.append(
            f'<text x="{_f(x + NODE_WIDTH + 4)}" y="{_f(y + 11)}" font-size="10">{label}</text>'
        )
        if n.starred:
            out.append(
                f'<text x="{_f(x - 11)}" y="{_f(y + 10)}" font-size="10" fill="#e6a700">&#9733;</text>'
            )
        if n.broken:
            out.append(
                f'<text x="{_f(x + 3)}" y="{_f(y - 3)}" font-size="10" fill="#c0392b">&#9888;</text>'
            )
        if n.bookmarked:
            out.append(
                f'<text x="{_f(x - 11)}" y="{_f(y + n.height)}" font-size="9" fill="#2c6fbb">&#9632;</text>'
            )
    legend_y = height - pad - 14 * len(graph.legend)
    out.append('<g font-size="9">')
    for i, (category, color) in enumerate(sorted(graph.legend.items())):
        y = legend_y + i * 14
        out.append(f'<rect x="{_f(pad)}" y="{_f(y)}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{_f(pad + 14)}" y="{_f(y + 9)}">{category}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
