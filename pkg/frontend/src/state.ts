/** View model: a thin, non-authoritative mirror of the server.
 *
 * Every mutation round-trips through the API and is followed by a refetch of
 * whatever the view displays, so what the user sees always reproduces a
 * fresh server read (pessimistic updates only). Validation reports from the
 * last mutation surface as notices carrying the server's fix suggestions.
 */

import { Api, ApiError } from "./api.js";
import type {
  Level,
  MutationResponse,
  RecoverPayload,
  SankeyGraph,
  SuggestedFix,
  UnitPayload,
  UnitViewPayload,
  ValidationReport,
  WorkspacePayload,
} from "./types.js";

export interface Notice {
  unit: string;
  status: "warn" | "broken";
  message: string;
  suggestion: SuggestedFix | null;
  undoLastEdit: SuggestedFix | null;
}

export interface PendingDrop {
  src: string;
  dst: string;
}

export interface ViewState {
  level: Level;
  focus: string | null;
  graph: SankeyGraph | null;
  workspace: WorkspacePayload | null;
  selected: string | null;
  selectedUnit: UnitPayload | null;
  unitView: UnitViewPayload | null;
  recovered: RecoverPayload | null;
  rangeStart: string | null;
  rangeEnd: string | null;
  rangeRecords: unknown[];
  notices: Notice[];
  pendingDrop: PendingDrop | null;
  revision: number;
  error: string | null;
}

export type Listener = (state: ViewState) => void;

export class ViewModel {
  readonly api: Api;
  state: ViewState = {
    level: "session",
    focus: null,
    graph: null,
    workspace: null,
    selected: null,
    selectedUnit: null,
    unitView: null,
    recovered: null,
    rangeStart: null,
    rangeEnd: null,
    rangeRecords: [],
    notices: [],
    pendingDrop: null,
    revision: 0,
    error: null,
  };
  private listeners: Listener[] = [];

  constructor(api: Api) {
    this.api = api;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  /** Refetch everything the current view displays. Standing warnings are
   * re-derived from the units' server-side validation reports, so the
   * notice panel always mirrors a fresh fetch. */
  async refresh(): Promise<void> {
    const workspace = await this.api.workspace();
    const graph = await this.api.graph(this.state.level, this.state.focus);
    this.state.workspace = workspace;
    this.state.graph = graph;
    this.state.revision = workspace.revision;
    this.state.notices = Object.values(workspace.units)
      .filter((u) => u.report !== null && (u.report.status !== "ok" || u.report.undo_last_edit))
      .map((u) => this.noticeFrom(u.report as ValidationReport));
    if (this.state.selected && workspace.units[this.state.selected]) {
      this.state.selectedUnit = await this.api.unit(this.state.selected);
      this.state.unitView = await this.api.unitView(this.state.selected);
    } else if (this.state.selected && !workspace.units[this.state.selected]) {
      // a session node stays selected; unit panels follow recovery payloads
      this.state.selectedUnit = null;
    }
    this.emit();
  }

  private noticeFrom(r: ValidationReport): Notice {
    return {
      unit: r.unit,
      status: r.status === "broken" ? "broken" : "warn",
      message: r.failures.length
        ? `${r.unit}: record ${r.failures[0].record_id} is missing ${r.failures[0].capability}`
        : `${r.unit}: ${r.status}`,
      suggestion: r.suggestion,
      undoLastEdit: r.undo_last_edit,
    };
  }

  async setLevel(level: Level, focus?: string | null): Promise<void> {
    this.state.level = level;
    if (level === "unit") {
      this.state.focus = focus ?? this.state.focus ?? this.defaultFocus();
    }
    await this.refresh();
  }

  private defaultFocus(): string | null {
    const sessions = this.state.workspace?.sessions ?? [];
    const live = sessions.filter((s) => !s.frozen);
    return live.length ? live[live.length - 1].id : sessions[0]?.id ?? null;
  }

  /** Click a node: units load their action list and canvas; sessions run
   * time-machine recovery of all their units. */
  async selectNode(id: string): Promise<void> {
    this.state.selected = id;
    if (this.state.workspace?.units[id]) {
      this.state.selectedUnit = await this.api.unit(id);
      this.state.unitView = await this.api.unitView(id);
      this.state.recovered = null;
    } else {
      this.state.recovered = await this.api.recover(id);
      this.state.selectedUnit = null;
      this.state.unitView = null;
    }
    this.emit();
  }

  async selectRange(start: string, end: string): Promise<void> {
    this.state.rangeStart = start;
    this.state.rangeEnd = end;
    const res = await this.api.rangeSelection(this.state.level, start, end, this.state.focus);
    this.state.rangeRecords = res.records;
    this.emit();
  }

  private async mutate(run: () => Promise<MutationResponse>): Promise<MutationResponse | null> {
    this.state.error = null;
    try {
      const res = await run();
      await this.refresh();
      return res;
    } catch (err) {
      if (err instanceof ApiError) {
        // conflicts (frozen versions, superseded reverts) mean our mirror is
        // stale: refetch so the user retries against fresh state
        this.state.error = `${err.kind}: ${err.message}`;
        await this.refresh();
        return null;
      }
      throw err;
    }
  }

  undo(unit: string) {
    return this.mutate(() => this.api.edit("undo", { unit }));
  }

  redo(unit: string, record?: string) {
    return this.mutate(() => this.api.edit("redo", record ? { unit, record } : { unit }));
  }

  selectiveUndo(unit: string, record: string) {
    return this.mutate(() => this.api.edit("selective-undo", { unit, record }));
  }

  skip(unit: string, record: string) {
    return this.mutate(() => this.api.edit("skip", { unit, record }));
  }

  unskip(unit: string, record: string) {
    return this.mutate(() => this.api.edit("unskip", { unit, record }));
  }

  /** Destructive: requires the caller to have confirmed. */
  deleteAction(unit: string, record: string, confirmed: boolean) {
    return this.mutate(() => this.api.edit("delete", { unit, record, confirm: confirmed }));
  }

  applyFix(notice: Notice): Promise<MutationResponse | null> {
    const fix = notice.suggestion;
    if (!fix) return Promise.resolve(null);
    return this.mutate(() => this.api.applyFix(notice.unit, fix.kind, fix.target));
  }

  undoLastEdit(notice: Notice): Promise<MutationResponse | null> {
    const fix = notice.undoLastEdit;
    if (!fix) return Promise.resolve(null);
    return this.mutate(() => this.api.applyFix(notice.unit, "undo-last-edit", fix.target));
  }

  /** Drag a unit node onto another: stage the drop, the dialog decides. */
  stageDrop(src: string, dst: string): void {
    if (src === dst) return;
    this.state.pendingDrop = { src, dst };
    this.emit();
  }

  cancelDrop(): void {
    this.state.pendingDrop = null;
    this.emit();
  }

  /** Resolve a staged drop as "copy all" or "move all" of the source's
   * actions onto the target's tail. */
  async resolveDrop(mode: "copy" | "move"): Promise<MutationResponse | null> {
    const drop = this.state.pendingDrop;
    if (!drop) return null;
    this.state.pendingDrop = null;
    const src = await this.api.unit(drop.src);
    const real = src.history.filter((r) => r.category !== "history");
    if (!real.length) return null;
    const dst = await this.api.unit(drop.dst);
    const at = dst.history.filter((r) => !r.inherited).length;
    return this.mutate(() =>
      this.api.edit(mode, {
        src: drop.src,
        first: real[0].id,
        last: real[real.length - 1].id,
        dst: drop.dst,
        at,
      }),
    );
  }

  branchUnit(origin: string, name: string) {
    return this.mutate(() => this.api.branchUnit(origin, name));
  }

  branchSession(session: string, baseName: string) {
    return this.mutate(() => this.api.branchSession(session, baseName));
  }

  saveSession(session: string) {
    return this.mutate(() => this.api.saveSession(session));
  }

  /** Long-poll loop: any revision bump refetches the active view. */
  async watchChanges(signal?: AbortSignal): Promise<void> {
    for (;;) {
      if (signal?.aborted) return;
      try {
        const res = await this.api.changes(this.state.revision);
        if (res.revision > this.state.revision) await this.refresh();
      } catch {
        await new Promise((r) => setTimeout(r, 1000));
      }
    }
  }
}
