/** Typed client for the worktrail service. Every mutation returns the
 * committed records plus all cascade validation reports; the caller is
 * expected to refetch what it displays (the server is the only truth). */

import type {
  Level,
  MutationResponse,
  RecoverPayload,
  SankeyGraph,
  UnitPayload,
  UnitViewPayload,
  WorkspacePayload,
} from "./types.js";

export class ApiError extends Error {
  kind: string;
  constructor(kind: string, message: string) {
    super(message);
    this.kind = kind;
  }
}

export class Api {
  constructor(private base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json();
    if (!res.ok) {
      const err = (payload as { error?: { kind: string; message: string } }).error;
      throw new ApiError(err?.kind ?? `HTTP${res.status}`, err?.message ?? res.statusText);
    }
    return payload as T;
  }

  workspace(): Promise<WorkspacePayload> {
    return this.request("GET", "/api/workspace");
  }

  revision(): Promise<{ revision: number }> {
    return this.request("GET", "/api/revision");
  }

  changes(after: number, timeout = 25): Promise<{ revision: number }> {
    return this.request("GET", `/api/changes?after=${after}&timeout=${timeout}`);
  }

  graph(level: Level, focus?: string | null): Promise<SankeyGraph> {
    const focusPart = focus ? `&focus=${encodeURIComponent(focus)}` : "";
    return this.request("GET", `/api/graph?level=${level}${focusPart}`);
  }

  unit(id: string): Promise<UnitPayload> {
    return this.request("GET", `/api/units/${id}`);
  }

  unitView(id: string): Promise<UnitViewPayload> {
    return this.request("GET", `/api/units/${id}/view`);
  }

  recover(sessionId: string): Promise<RecoverPayload> {
    return this.request("GET", `/api/sessions/${sessionId}/recover`);
  }

  actionsBetween(a: string, b: string): Promise<{ records: unknown[] }> {
    return this.request("GET", `/api/actions-between?a=${a}&b=${b}`);
  }

  rangeSelection(level: Level, start: string, end: string, focus?: string | null) {
    const focusPart = focus ? `&focus=${encodeURIComponent(focus)}` : "";
    return this.request<{ records: unknown[]; highlight: Record<string, string> }>(
      "GET",
      `/api/range-selection?level=${level}&start=${start}&end=${end}${focusPart}`,
    );
  }

  appendAction(unit: string, type: string, params: Record<string, unknown>): Promise<MutationResponse> {
    return this.request("POST", `/api/units/${unit}/actions`, { type, params });
  }

  edit(command: string, args: Record<string, unknown>): Promise<MutationResponse> {
    return this.request("POST", "/api/edits", { command, ...args });
  }

  applyFix(unit: string, kind: string, target: string): Promise<MutationResponse> {
    return this.request("POST", "/api/fixes/apply", { unit, kind, target });
  }

  annotate(target: string, text: string, author = "explorer"): Promise<MutationResponse> {
    return this.request("POST", "/api/annotations", { target, text, author });
  }

  branchUnit(origin: string, name: string): Promise<MutationResponse> {
    return this.request("POST", `/api/units/${origin}/branch`, { name });
  }

  branchSession(session: string, baseName: string): Promise<MutationResponse> {
    return this.request("POST", `/api/sessions/${session}/branch`, { base_name: baseName });
  }

  saveSession(session: string): Promise<MutationResponse> {
    return this.request("POST", `/api/sessions/${session}/save`, {});
  }
}
