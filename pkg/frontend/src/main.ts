/** Explorer bootstrap: wires the view model to the page regions and starts
 * the change-notification loop. */

import { Api } from "./api.js";
import { ViewModel } from "./state.js";
import { renderOverview, renderSankey } from "./sankey.js";
import {
  renderActionList,
  renderDropDialog,
  renderNotices,
  renderRecovered,
  renderUnitCanvas,
} from "./panels.js";

export interface AppRegions {
  graph: HTMLElement;
  overview: HTMLElement;
  actions: HTMLElement;
  notices: HTMLElement;
  canvas: HTMLElement;
  recovered: HTMLElement;
  dialog: HTMLElement;
  toolbar: HTMLElement;
}

export function mountApp(regions: AppRegions, api: Api): ViewModel {
  const vm = new ViewModel(api);

  const render = () => {
    const { state } = vm;
    if (state.graph) {
      renderSankey(
        regions.graph,
        state.graph,
        state.selected,
        { start: state.rangeStart, end: state.rangeEnd },
        {
          onNodeClick: (id) => void vm.selectNode(id),
          onNodeContext: (id) => openContextMenu(vm, id),
          onDrop: (src, dst) => vm.stageDrop(src, dst),
        },
      );
      if (state.level === "unit" && state.graph.overview) {
        renderOverview(regions.overview, state.graph.overview, state.focus, (sid) => {
          void vm.setLevel("unit", sid);
        });
      } else {
        regions.overview.replaceChildren();
      }
    }
    renderToolbar(regions.toolbar, vm);
    renderActionList(regions.actions, vm);
    renderNotices(regions.notices, vm);
    renderUnitCanvas(regions.canvas, vm.state.unitView);
    renderRecovered(regions.recovered, vm);
    renderDropDialog(regions.dialog, vm);
  };

  vm.subscribe(render);
  return vm;
}

function renderToolbar(container: HTMLElement, vm: ViewModel): void {
  container.replaceChildren();
  const sessionBtn = document.createElement("button");
  sessionBtn.className = "level-session";
  sessionBtn.textContent = "session workflow";
  sessionBtn.disabled = vm.state.level === "session";
  sessionBtn.addEventListener("click", () => void vm.setLevel("session"));
  const unitBtn = document.createElement("button");
  unitBtn.className = "level-unit";
  unitBtn.textContent = "unit workflow";
  unitBtn.disabled = vm.state.level === "unit";
  unitBtn.addEventListener("click", () => void vm.setLevel("unit"));
  const revision = document.createElement("span");
  revision.className = "revision";
  revision.textContent = `revision ${vm.state.revision}`;
  container.append(sessionBtn, unitBtn, revision);
}

function openContextMenu(vm: ViewModel, nodeId: string): void {
  // minimal context actions: switch view level, branch here, range endpoints
  const isUnit = Boolean(vm.state.workspace?.units[nodeId]);
  const choice = window.prompt(
    `${nodeId}: [u]nit view / [s]ession view / [b]ranch here / range [f]rom / range [t]o`,
    "u",
  );
  if (!choice) return;
  if (choice === "u") {
    const focus = isUnit ? vm.state.workspace?.units[nodeId]?.session : nodeId;
    void vm.setLevel("unit", focus ?? null);
  } else if (choice === "s") {
    void vm.setLevel("session");
  } else if (choice === "b") {
    const name = window.prompt("branch name", isUnit ? "branch" : "sessionX");
    if (!name) return;
    if (isUnit) void vm.branchUnit(nodeId, name);
    else void vm.branchSession(nodeId, name);
  } else if (choice === "f" && vm.state.rangeEnd) {
    void vm.selectRange(nodeId, vm.state.rangeEnd);
  } else if (choice === "f") {
    vm.state.rangeStart = nodeId;
  } else if (choice === "t" && vm.state.rangeStart) {
    void vm.selectRange(vm.state.rangeStart, nodeId);
  }
}

export function bootstrap(): void {
  const byId = (id: string) => document.getElementById(id) as HTMLElement;
  const vm = mountApp(
    {
      graph: byId("graph"),
      overview: byId("overview"),
      actions: byId("actions"),
      notices: byId("notices"),
      canvas: byId("canvas"),
      recovered: byId("recovered"),
      dialog: byId("dialog"),
      toolbar: byId("toolbar"),
    },
    new Api(""),
  );
  void vm.refresh().then(() => void vm.watchChanges());
}

if (typeof document !== "undefined" && document.getElementById("graph")) {
  bootstrap();
}
