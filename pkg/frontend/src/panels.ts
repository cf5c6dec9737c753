/** Side panels: the action history list with edit controls, validation
 * notices with one-click fixes, the unit canvas (heat grid with cluster
 * coloring), and the time-machine view for recovered sessions. */

import type { Notice, ViewModel } from "./state.js";
import type { ActionRow, UnitViewPayload } from "./types.js";

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderActionList(container: HTMLElement, vm: ViewModel): void {
  container.replaceChildren();
  const unit = vm.state.selectedUnit;
  if (!unit) {
    container.appendChild(h("p", "hint", "select a unit to review and edit its actions"));
    return;
  }
  const header = h("div", "panel-header");
  header.appendChild(h("strong", undefined, `${unit.name} (${unit.id})`));
  if (unit.broken) {
    const badge = h("span", "badge broken-badge", "⚠ broken");
    header.appendChild(badge);
  }
  if (unit.starred) header.appendChild(h("span", "badge star", "★"));
  const undoBtn = h("button", "undo-tail", "undo");
  undoBtn.addEventListener("click", () => void vm.undo(unit.id));
  const redoBtn = h("button", "redo-tail", "redo");
  redoBtn.addEventListener("click", () => void vm.redo(unit.id));
  header.append(undoBtn, redoBtn);
  container.appendChild(header);

  const list = h("ul", "action-list");
  for (const row of unit.history) {
    list.appendChild(renderActionRow(vm, unit.id, row));
  }
  container.appendChild(list);
}

function renderActionRow(vm: ViewModel, unitId: string, row: ActionRow): HTMLLIElement {
  const li = h("li", `action-row status-${row.status}${row.inherited ? " inherited" : ""}`);
  li.setAttribute("data-record-id", row.id);
  li.setAttribute("data-status", row.status);
  const label = h("span", "action-label", `${row.id} ${row.type_name}`);
  label.title = JSON.stringify(row.params);
  li.appendChild(label);
  li.appendChild(h("span", "action-status", row.status));

  const controls = h("span", "action-controls");
  if (row.status === "active") {
    const un = h("button", "op-selective-undo", "undo");
    un.addEventListener("click", () => void vm.selectiveUndo(unitId, row.id));
    const sk = h("button", "op-skip", "skip");
    sk.addEventListener("click", () => void vm.skip(unitId, row.id));
    controls.append(un, sk);
  } else if (row.status === "undone") {
    const re = h("button", "op-redo", "redo");
    re.addEventListener("click", () => void vm.redo(unitId, row.id));
    controls.append(re);
  } else {
    const us = h("button", "op-unskip", "unskip");
    us.addEventListener("click", () => void vm.unskip(unitId, row.id));
    controls.append(us);
  }
  if (!row.inherited && row.category !== "history") {
    const del = h("button", "op-delete", "delete");
    del.addEventListener("click", () => {
      // destructive: explicit confirmation before the engine sees confirm
      if (window.confirm(`Delete ${row.id} (${row.type_name})? This cannot be undone by redo.`)) {
        void vm.deleteAction(unitId, row.id, true);
      }
    });
    controls.append(del);
  }
  li.appendChild(controls);
  return li;
}

export function renderNotices(container: HTMLElement, vm: ViewModel): void {
  container.replaceChildren();
  if (vm.state.error) {
    const err = h("div", "notice error", vm.state.error);
    const retry = h("button", "op-refetch", "refetch");
    retry.addEventListener("click", () => void vm.refresh());
    err.appendChild(retry);
    container.appendChild(err);
  }
  for (const notice of vm.state.notices) {
    container.appendChild(renderNotice(vm, notice));
  }
}

function renderNotice(vm: ViewModel, notice: Notice): HTMLElement {
  const div = h("div", `notice warning-badge level-${notice.status}`);
  div.setAttribute("data-unit", notice.unit);
  div.appendChild(h("span", "notice-text", notice.message));
  if (notice.suggestion) {
    const fix = h(
      "button",
      "op-apply-fix",
      `apply fix: ${notice.suggestion.kind} ${notice.suggestion.target}`,
    );
    fix.addEventListener("click", () => void vm.applyFix(notice));
    div.appendChild(fix);
  }
  if (notice.undoLastEdit) {
    const revert = h("button", "op-undo-last", "undo last action");
    revert.addEventListener("click", () => void vm.undoLastEdit(notice));
    div.appendChild(revert);
  }
  return div;
}

const HEAT_COLORS = ["#e8f2fb", "#b5d4ee", "#7fb2dd", "#4a8cc7", "#2a6aa8", "#174e84"];
const CLUSTER_COLORS = ["#59a14f", "#f28e2b", "#b07aa1", "#4c78a8", "#e15759", "#76b7b2"];

export function renderUnitCanvas(container: HTMLElement, view: UnitViewPayload | null): void {
  container.replaceChildren();
  if (!view) return;
  const state = view.state;
  const meta = h("div", "canvas-meta");
  meta.appendChild(h("span", undefined, state.dataset ? `data: ${state.dataset.name}` : "no data loaded"));
  if (state.algorithm) meta.appendChild(h("span", undefined, `algorithm: ${state.algorithm}`));
  meta.appendChild(h("span", undefined, `colors: ${state.color_scheme}`));
  if (view.status === "broken") meta.appendChild(h("span", "badge broken-badge", "⚠ pipeline broken"));
  container.appendChild(meta);
  if (!view.matrix.length) return;

  const flat = view.matrix.flat();
  const lo = Math.min(...flat);
  const hi = Math.max(...flat);
  const span = hi - lo || 1;
  const assignments = new Map<number, number>();
  if (state.derived_result) {
    state.derived_result.rows.forEach((rowId, i) => {
      assignments.set(rowId, state.derived_result!.assignments[i]);
    });
  }

  const table = h("table", "heat-grid");
  const head = h("tr");
  head.appendChild(h("th", undefined, ""));
  for (const col of view.columns) head.appendChild(h("th", undefined, col));
  table.appendChild(head);
  view.matrix.forEach((rowVals, i) => {
    const tr = h("tr");
    const rowId = view.rows[i];
    const cluster = assignments.get(rowId);
    const th = h("th", "row-label", `r${rowId}`);
    if (cluster !== undefined) {
      th.style.borderLeft = `6px solid ${CLUSTER_COLORS[cluster % CLUSTER_COLORS.length]}`;
      th.setAttribute("data-cluster", String(cluster));
    }
    tr.appendChild(th);
    for (const value of rowVals) {
      const td = h("td", "cell");
      const bucket = Math.min(5, Math.floor(((value - lo) / span) * 6));
      td.style.background = HEAT_COLORS[bucket];
      td.title = String(value);
      tr.appendChild(td);
    }
    table.appendChild(tr);
  });
  container.appendChild(table);
}

export function renderRecovered(container: HTMLElement, vm: ViewModel): void {
  container.replaceChildren();
  const rec = vm.state.recovered;
  if (!rec) return;
  const header = h("div", "panel-header");
  header.appendChild(h("strong", undefined, `time machine: ${rec.display_name}`));
  header.appendChild(h("span", "badge", rec.cached ? "from snapshot" : "replayed"));
  container.appendChild(header);
  for (const [uid, entry] of Object.entries(rec.units)) {
    const card = h("div", "recovered-unit");
    card.setAttribute("data-unit-id", uid);
    card.setAttribute("data-hash", entry.hash);
    card.appendChild(h("strong", undefined, uid));
    card.appendChild(h("span", "badge", entry.status));
    const s = entry.state;
    card.appendChild(
      h(
        "span",
        "recovered-summary",
        `${s.dataset ? s.dataset.name : "no data"} / ${s.algorithm ?? "no algorithm"} / ${s.color_scheme}`,
      ),
    );
    container.appendChild(card);
  }
}

export function renderDropDialog(container: HTMLElement, vm: ViewModel): void {
  container.replaceChildren();
  const drop = vm.state.pendingDrop;
  if (!drop) return;
  const dialog = h("div", "drop-dialog");
  dialog.appendChild(h("p", undefined, `Transfer actions from ${drop.src} to ${drop.dst}?`));
  const copy = h("button", "op-drop-copy", "copy all");
  copy.addEventListener("click", () => void vm.resolveDrop("copy"));
  const move = h("button", "op-drop-move", "move all");
  move.addEventListener("click", () => void vm.resolveDrop("move"));
  const cancel = h("button", "op-drop-cancel", "cancel");
  cancel.addEventListener("click", () => vm.cancelDrop());
  dialog.append(copy, move, cancel);
  container.appendChild(dialog);
}
