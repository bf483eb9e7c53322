/**
 * Server document shapes, mirrored from the tacmine HTTP API.
 *
 * Everything here is what the wire actually carries; view-side derived
 * structures live in state.ts.
 */

/** One pattern slot: a value name, or null for "don't care". */
export type Slot = string | null;

export interface TacticDoc {
  id: number;
  pinned: boolean;
  /** events[hit][feature] */
  events: Slot[][];
  length: number;
  freq?: number;
  win_rate?: number | null;
  importance?: number;
  /** start index (1-based, as string key) -> [wins, losses] */
  index_histogram?: Record<string, [number, number]>;
}

export interface ConstraintDoc {
  type: string;
  [field: string]: unknown;
}

export interface SessionState {
  session_id: string;
  version: number;
  mined: boolean;
  globals: ConstraintDoc[];
  can_undo: boolean;
  score: number | null;
  tactics: TacticDoc[];
}

export interface DiffDoc {
  constraint: ConstraintDoc;
  removed: number[];
  added: TacticDoc[];
  old_score: number;
  new_score: number;
  base_version: number;
  reason: string | null;
}

export interface ParsedDoc {
  constraint: ConstraintDoc;
  confidence: number;
  template: string;
  slot_spans: Record<string, number[][]>;
}

export interface PreviewPayload {
  preview_id: string;
  diff: DiffDoc;
  parsed?: ParsedDoc;
}

export interface ProjectionPoint {
  tactic_id: number;
  angle: number;
  radius: number;
  size: number;
  win_rate: number | null;
}

export interface ProjectionDoc {
  channel: string;
  points: ProjectionPoint[];
}

export interface UsageDoc {
  rally_id: number;
  start: number;
  length: number;
  winner: number;
  focal_won: boolean;
}

export interface RallyDoc {
  id: number;
  server: number;
  winner: number;
  /** events[hit][feature], always concrete values */
  events: string[][];
}

export interface FeatureDoc {
  name: string;
  values: string[];
}

export interface DatasetInfo {
  dataset_id: string;
  n_rallies: number;
  focal_player: number;
  schema: { features: FeatureDoc[] };
}

export interface HistoryEntryDoc {
  constraint: ConstraintDoc;
  removed: number[];
  added: number[];
  old_score: number;
  new_score: number;
}

export interface JobDoc {
  status: "running" | "done" | "error";
  result: unknown;
  error: { code: string; message: string } | null;
}
