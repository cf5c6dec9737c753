/** End-to-end explorer tests against live fixture backends.
 *
 * Server truth: after every scripted interaction the DOM must reproduce a
 * fresh API fetch, and the broken-pipeline fixture must surface exactly one
 * warning badge carrying both repair affordances.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { mountApp, type AppRegions } from "../src/main.js";
import type { ViewModel } from "../src/state.js";

const BROKEN_BASE = "http://127.0.0.1:8831";
const GALLERY_BASE = "http://127.0.0.1:8832";

function buildRegions(): AppRegions {
  document.body.innerHTML = `
    <div id="toolbar"></div>
    <div id="overview"></div>
    <div id="graph"></div>
    <div id="notices"></div>
    <div id="actions"></div>
    <div id="canvas"></div>
    <div id="recovered"></div>
    <div id="dialog"></div>
  `;
  const byId = (id: string) => document.getElementById(id) as HTMLElement;
  return {
    graph: byId("graph"),
    overview: byId("overview"),
    actions: byId("actions"),
    notices: byId("notices"),
    canvas: byId("canvas"),
    recovered: byId("recovered"),
    dialog: byId("dialog"),
    toolbar: byId("toolbar"),
  };
}

async function mount(base: string): Promise<{ vm: ViewModel; api: Api; regions: AppRegions }> {
  const regions = buildRegions();
  const api = new Api(base);
  const vm = mountApp(regions, api);
  await vm.refresh();
  return { vm, api, regions };
}

function displayedBadges(): Map<string, { broken: string; starred: string }> {
  const out = new Map<string, { broken: string; starred: string }>();
  for (const g of Array.from(document.querySelectorAll("#graph .node"))) {
    out.set(g.getAttribute("data-node-id")!, {
      broken: g.getAttribute("data-broken")!,
      starred: g.getAttribute("data-starred")!,
    });
  }
  return out;
}

async function expectGraphMatchesServer(api: Api, vm: ViewModel): Promise<void> {
  const fresh = await api.graph(vm.state.level, vm.state.focus);
  const badges = displayedBadges();
  expect(badges.size).toBe(fresh.nodes.length);
  for (const node of fresh.nodes) {
    expect(badges.get(node.id), node.id).toEqual({
      broken: String(node.broken),
      starred: String(node.starred),
    });
  }
}

async function expectActionListMatchesServer(api: Api, unitId: string): Promise<void> {
  const fresh = await api.unit(unitId);
  const rows = Array.from(document.querySelectorAll("#actions .action-row")).map((li) => ({
    id: li.getAttribute("data-record-id"),
    status: li.getAttribute("data-status"),
  }));
  expect(rows).toEqual(fresh.history.map((r) => ({ id: r.id, status: r.status })));
}

describe("broken-pipeline UX", () => {
  it("surfaces exactly one warning badge with both repair affordances", async () => {
    const { vm, api } = await mount(BROKEN_BASE);
    const notices = document.querySelectorAll("#notices .warning-badge");
    expect(notices.length).toBe(1);
    const badge = notices[0];
    expect(badge.getAttribute("data-unit")).toBe("u1");
    expect(badge.querySelector(".op-apply-fix")).not.toBeNull();
    expect(badge.querySelector(".op-undo-last")).not.toBeNull();
    expect(badge.textContent).toContain("missing data-loaded");
    // the unit-level graph shows the warn unit without a broken flag
    await vm.setLevel("unit", vm.state.workspace!.sessions[0].id);
    await expectGraphMatchesServer(api, vm);
  });

  it("one-click fix heals the unit and the display equals a fresh fetch", async () => {
    const { vm, api } = await mount(BROKEN_BASE);
    await vm.selectNode("u1");
    const fixButton = document.querySelector<HTMLButtonElement>("#notices .op-apply-fix");
    expect(fixButton).not.toBeNull();
    fixButton!.click();
    await new Promise((r) => setTimeout(r, 300)); // pessimistic round-trip
    expect(document.querySelectorAll("#notices .warning-badge").length).toBe(0);
    await expectActionListMatchesServer(api, "u1");
    const fresh = await api.unit("u1");
    expect(fresh.report?.status).toBe("ok");
    // the load record is active again in both the display and the server
    const loadRow = document.querySelector('#actions [data-record-id="a2"]');
    expect(loadRow?.getAttribute("data-status")).toBe("active");
  });
});

describe("UI truth", () => {
  let vm: ViewModel;
  let api: Api;

  beforeEach(async () => {
    ({ vm, api } = await mount(GALLERY_BASE));
  });

  it("renders the session graph from the server payload", async () => {
    expect(vm.state.graph!.nodes.length).toBe(2);
    await expectGraphMatchesServer(api, vm);
    const labels = Array.from(document.querySelectorAll("#graph .node-label")).map(
      (t) => t.textContent,
    );
    expect(labels).toContain("exploration_v0");
    expect(labels).toContain("exploration_v1");
  });

  it("recovering a saved version shows its snapshot states", async () => {
    const frozen = vm.state.workspace!.sessions.find((s) => s.frozen)!;
    const node = document.querySelector(`#graph [data-node-id="${frozen.id}"]`) as SVGGElement;
    node.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await new Promise((r) => setTimeout(r, 300));
    const cards = Array.from(document.querySelectorAll("#recovered .recovered-unit"));
    const freshRecover = await api.recover(frozen.id);
    expect(cards.length).toBe(Object.keys(freshRecover.units).length);
    for (const card of cards) {
      const uid = card.getAttribute("data-unit-id")!;
      expect(card.getAttribute("data-hash")).toBe(freshRecover.units[uid].hash);
    }
    expect(document.querySelector("#recovered .panel-header")?.textContent).toContain(
      frozen.id === "s1" ? "exploration_v0" : frozen.id,
    );
  });

  it("drag-copy extends the target's action list to match a fresh fetch", async () => {
    await vm.setLevel("unit", vm.state.workspace!.sessions.find((s) => !s.frozen)!.id);
    const live = vm.state.workspace!.sessions.find((s) => !s.frozen)!;
    const [src, , dst] = live.units;
    const before = (await api.unit(dst)).history.length;

    vm.stageDrop(src, dst);
    const copyButton = document.querySelector<HTMLButtonElement>("#dialog .op-drop-copy");
    expect(copyButton).not.toBeNull();
    copyButton!.click();
    await new Promise((r) => setTimeout(r, 500));

    await vm.selectNode(dst);
    const fresh = await api.unit(dst);
    expect(fresh.history.length).toBeGreaterThan(before);
    await expectActionListMatchesServer(api, dst);
    await expectGraphMatchesServer(api, vm);
    expect(document.querySelector("#dialog .drop-dialog")).toBeNull();
  });

  it("unit view renders the heat grid with cluster coloring from state", async () => {
    const live = vm.state.workspace!.sessions.find((s) => !s.frozen)!;
    await vm.selectNode(live.units[0]); // "overview" unit: clustering ran
    const view = vm.state.unitView!;
    expect(view.state.derived_result).not.toBeNull();
    const grid = document.querySelector("#canvas .heat-grid");
    expect(grid).not.toBeNull();
    const rows = grid!.querySelectorAll("tr").length - 1; // minus header
    expect(rows).toBe(view.matrix.length);
    const clustered = grid!.querySelectorAll("[data-cluster]").length;
    expect(clustered).toBe(view.state.derived_result!.rows.length);
  });

  it("mini session overview appears at unit level and switches focus", async () => {
    await vm.setLevel("unit", vm.state.workspace!.sessions[0].id);
    const overviewNodes = document.querySelectorAll("#overview .overview-node");
    expect(overviewNodes.length).toBe(2); // both session versions
    expect(document.querySelector("#graph .node [x]")).toBeDefined();
    // legend panel rendered with the four categories
    const legendEntries = Array.from(document.querySelectorAll("#graph .legend text")).map(
      (t) => t.textContent,
    );
    expect(legendEntries.sort()).toEqual(["analysis", "annotation", "history", "management"]);
  });
});
