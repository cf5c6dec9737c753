/** Wire types mirroring the worktrail service payloads. */

export type Level = "session" | "unit";

export interface SankeyNode {
  id: string;
  label: string;
  kind: Level;
  action_count: number;
  category_histogram: Record<string, number>;
  dominant_category: string;
  starred: boolean;
  broken: boolean;
  bookmarked: boolean;
  glyph: string | null;
  depth: number;
  x: number;
  y: number;
  height: number;
}

export interface SankeySegment {
  category: string;
  count: number;
}

export interface SankeyLink {
  source: string;
  target: string;
  segments: SankeySegment[];
  total: number;
}

export interface SankeyGraph {
  level: Level;
  focus: string | null;
  nodes: SankeyNode[];
  links: SankeyLink[];
  overview: SankeyGraph | null;
  legend: Record<string, string>;
}

export interface ActionRow {
  id: string;
  type_name: string;
  category: string;
  params: Record<string, unknown>;
  ts: number;
  author: string;
  status: "active" | "undone" | "skipped";
  note: string | null;
  inherited?: boolean;
}

export interface Failure {
  index: number;
  record_id: string;
  capability: string;
}

export interface SuggestedFix {
  kind: "redo-record" | "unskip-record" | "undo-last-edit";
  target: string;
}

export interface ValidationReport {
  unit: string;
  status: "ok" | "warn" | "broken";
  failures: Failure[];
  suggestion: SuggestedFix | null;
  undo_last_edit: SuggestedFix | null;
  trigger: string | null;
}

export interface UnitPayload {
  id: string;
  name: string;
  session: string;
  branch_parent: { unit: string; prefix_len: number } | null;
  bookmarked: boolean;
  broken: boolean;
  starred: boolean;
  annotations: { id: string; text: string; author: string }[];
  history: ActionRow[];
  report: ValidationReport | null;
}

export interface SessionPayload {
  id: string;
  display_name: string;
  base_name: string;
  version: number;
  parent: string | null;
  frozen: boolean;
  units: string[];
  starred: boolean;
}

export interface WorkspacePayload {
  project: string;
  domain: string;
  revision: number;
  sessions: SessionPayload[];
  units: Record<string, UnitPayload>;
}

export interface UnitStatePayload {
  dataset: { name: string; rows: number; cols: number } | null;
  selection: unknown;
  algorithm: string | null;
  parameters: Record<string, unknown>;
  color_scheme: string;
  derived_result: { assignments: number[]; rows: number[]; k: number } | null;
  widget_settings: Record<string, unknown>;
}

export interface UnitViewPayload {
  unit: string;
  state: UnitStatePayload;
  status: "ok" | "broken";
  matrix: number[][];
  rows: number[];
  columns: string[];
}

export interface RecoverPayload {
  session: string;
  display_name: string;
  cached: boolean;
  units: Record<string, { state: UnitStatePayload; hash: string; status: string }>;
}

export interface MutationResponse {
  revision: number;
  op: string;
  ids: Record<string, string[]>;
  records: ActionRow[];
  reports: ValidationReport[];
}
