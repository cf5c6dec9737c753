/** Sankey renderer: SVG DOM built from the server-layouted graph payload.
 * Coordinates, colors, and badges all come from the server; the client only
 * draws and wires interactions. */

import type { SankeyGraph, SankeyNode } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_WIDTH = 26;
const PAD = 20;

export interface SankeyHandlers {
  onNodeClick(id: string): void;
  onNodeContext(id: string, x: number, y: number): void;
  onDrop(src: string, dst: string): void;
}

function el<K extends keyof SVGElementTagNameMap>(
  name: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function linkPath(graph: SankeyGraph, sourceId: string, targetId: string): string {
  const nodes = new Map(graph.nodes.map((n) => [n.id, n]));
  const s = nodes.get(sourceId)!;
  const t = nodes.get(targetId)!;
  const x0 = s.x + NODE_WIDTH + PAD;
  const y0 = s.y + PAD + s.height / 2;
  const x1 = t.x + PAD;
  const y1 = t.y + PAD + t.height / 2;
  const mx = (x0 + x1) / 2;
  return `M ${x0} ${y0} C ${mx} ${y0}, ${mx} ${y1}, ${x1} ${y1}`;
}

export function renderSankey(
  container: HTMLElement,
  graph: SankeyGraph,
  selected: string | null,
  range: { start: string | null; end: string | null },
  handlers: SankeyHandlers,
): void {
  container.replaceChildren();
  const width = Math.max(...graph.nodes.map((n) => n.x + NODE_WIDTH), 0) + 2 * PAD + 140;
  const height = Math.max(...graph.nodes.map((n) => n.y + n.height), 60) + 2 * PAD;
  const svg = el("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: "sankey",
  });

  for (const link of graph.links) {
    const total = Math.max(link.total, 1);
    let offset = 0;
    for (const seg of link.segments.length ? link.segments : [{ category: "management", count: 0 }]) {
      const w = 1.5 + 6 * (seg.count / total);
      const path = el("path", {
        d: linkPath(graph, link.source, link.target),
        stroke: graph.legend[seg.category] ?? "#999",
        "stroke-width": String(w),
        fill: "none",
        opacity: "0.55",
        transform: `translate(0 ${offset})`,
      });
      path.classList.add("link-segment");
      svg.appendChild(path);
      offset += w * 0.5;
    }
  }

  for (const node of graph.nodes) {
    svg.appendChild(renderNode(node, graph, selected, range, handlers));
  }

  const legend = el("g", { class: "legend", transform: `translate(${PAD} ${height - PAD - 14 * 4})` });
  Object.entries(graph.legend)
    .sort()
    .forEach(([category, color], i) => {
      legend.appendChild(el("rect", { x: "0", y: String(i * 14), width: "10", height: "10", fill: color }));
      const text = el("text", { x: "14", y: String(i * 14 + 9), "font-size": "9" });
      text.textContent = category;
      legend.appendChild(text);
    });
  svg.appendChild(legend);
  container.appendChild(svg);
}

function renderNode(
  node: SankeyNode,
  graph: SankeyGraph,
  selected: string | null,
  range: { start: string | null; end: string | null },
  handlers: SankeyHandlers,
): SVGGElement {
  const g = el("g", {
    class: "node",
    transform: `translate(${node.x + PAD} ${node.y + PAD})`,
  });
  g.setAttribute("data-node-id", node.id);
  g.setAttribute("data-broken", String(node.broken));
  g.setAttribute("data-starred", String(node.starred));
  if (node.id === selected) g.classList.add("selected");
  if (node.id === range.start) g.classList.add("range-start");
  if (node.id === range.end) g.classList.add("range-end");

  const rect = el("rect", {
    width: String(NODE_WIDTH),
    height: String(node.height),
    fill: graph.legend[node.dominant_category] ?? "#999",
    stroke: node.id === selected ? "#111" : "#444",
    "stroke-width": node.id === selected ? "2.5" : "1",
  });
  rect.classList.add("node-rect");
  g.appendChild(rect);

  const label = el("text", { x: String(NODE_WIDTH + 4), y: "11", "font-size": "10" });
  label.textContent = node.label;
  label.classList.add("node-label");
  g.appendChild(label);

  if (node.starred) {
    const star = el("text", { x: "-12", y: "10", "font-size": "11", fill: "#e6a700" });
    star.textContent = "★";
    star.classList.add("star");
    g.appendChild(star);
  }
  if (node.broken) {
    const badge = el("text", { x: "2", y: "-3", "font-size": "10", fill: "#c0392b" });
    badge.textContent = "⚠";
    badge.classList.add("broken-badge");
    g.appendChild(badge);
  }
  if (node.bookmarked) {
    const mark = el("text", { x: "-12", y: String(node.height), "font-size": "9", fill: "#2c6fbb" });
    mark.textContent = "■";
    mark.classList.add("bookmark");
    g.appendChild(mark);
  }
  if (node.glyph) {
    const glyph = el("text", { x: String(NODE_WIDTH / 2 - 4), y: String(node.height / 2 + 3), "font-size": "9" });
    glyph.textContent = "⊞";
    glyph.classList.add("glyph");
    g.appendChild(glyph);
  }

  g.addEventListener("click", () => handlers.onNodeClick(node.id));
  g.addEventListener("contextmenu", (event) => {
    event.preventDefault();
    handlers.onNodeContext(node.id, (event as MouseEvent).clientX, (event as MouseEvent).clientY);
  });
  // drag a unit node onto another to copy/move its actions
  if (node.kind === "unit") {
    g.addEventListener("dragstart" as never, (event: DragEvent) => {
      event.dataTransfer?.setData("text/worktrail-node", node.id);
    });
    g.addEventListener("dragover" as never, (event: DragEvent) => event.preventDefault());
    g.addEventListener("drop" as never, (event: DragEvent) => {
      event.preventDefault();
      const src = event.dataTransfer?.getData("text/worktrail-node");
      if (src && src !== node.id) handlers.onDrop(src, node.id);
    });
  }
  return g;
}

/** Compact session overview shown beside the unit-level diagram. */
export function renderOverview(
  container: HTMLElement,
  overview: SankeyGraph,
  focus: string | null,
  onPick: (sessionId: string) => void,
): void {
  container.replaceChildren();
  const scale = 0.45;
  const width = (Math.max(...overview.nodes.map((n) => n.x), 0) + 160) * scale + 20;
  const height = (Math.max(...overview.nodes.map((n) => n.y + n.height), 40)) * scale + 20;
  const svg = el("svg", { viewBox: `0 0 ${width} ${height}`, width: String(width), height: String(height), class: "overview" });
  for (const link of overview.links) {
    const nodes = new Map(overview.nodes.map((n) => [n.id, n]));
    const s = nodes.get(link.source)!;
    const t = nodes.get(link.target)!;
    svg.appendChild(
      el("line", {
        x1: String((s.x + 26) * scale + 10),
        y1: String((s.y + s.height / 2) * scale + 10),
        x2: String(t.x * scale + 10),
        y2: String((t.y + t.height / 2) * scale + 10),
        stroke: "#aaa",
      }),
    );
  }
  for (const node of overview.nodes) {
    const rect = el("rect", {
      x: String(node.x * scale + 10),
      y: String(node.y * scale + 10),
      width: String(26 * scale),
      height: String(Math.max(node.height * scale, 6)),
      fill: overview.legend[node.dominant_category] ?? "#999",
      stroke: node.id === focus ? "#111" : "none",
      "stroke-width": "2",
    });
    rect.classList.add("overview-node");
    rect.setAttribute("data-node-id", node.id);
    rect.addEventListener("click", () => onPick(node.id));
    svg.appendChild(rect);
  }
  container.appendChild(svg);
}
