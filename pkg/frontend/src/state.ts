/**
 * View-side state and the pure helpers the renderers share.
 *
 * Ranking is a client-side re-sort of fetched tactics; switching modes never
 * refetches.  A staged preview is only valid against the server version it
 * was taken at; anything that moves the version invalidates the stage.
 */

import type {
  ConstraintDoc,
  DatasetInfo,
  DiffDoc,
  HistoryEntryDoc,
  ParsedDoc,
  PreviewPayload,
  ProjectionDoc,
  SessionState,
  TacticDoc,
} from "./types.js";
import type { SlotBreakdown } from "./glyph.js";

export type RankingMode = "freq" | "win" | "importance";
export type SizeChannel = "freq" | "importance";

export interface Stage {
  /** Parse result when the stage came from an utterance, else null. */
  parsed: ParsedDoc | null;
  /** The constraint the preview was computed for (post-edit, not raw parse). */
  constraint: ConstraintDoc;
  previewId: string;
  diff: DiffDoc;
  baseVersion: number;
}

/** A parsed utterance waiting in the confirmation card, preview in hand. */
export interface PendingSuggestion {
  parsed: ParsedDoc;
  payload: PreviewPayload;
}

export interface ViewState {
  sessionId: string;
  datasetId: string;
  dataset: DatasetInfo;
  state: SessionState;
  projection: ProjectionDoc;
  history: HistoryEntryDoc[];
  selected: Set<number>;
  /** Parsed suggestion awaiting confirmation in the card. */
  pending: PendingSuggestion | null;
  stage: Stage | null;
  /** True while the staged diff is rendered as a comparison. */
  previewOn: boolean;
  ranking: RankingMode;
  sizeChannel: SizeChannel;
  suggestionLog: string[];
  /** tactic id -> per-slot observed-value breakdowns, filled lazily. */
  breakdowns: Map<number, SlotBreakdown[][]>;
}

const byId = (a: TacticDoc, b: TacticDoc) => a.id - b.id;

const COMPARATORS: Record<RankingMode, (a: TacticDoc, b: TacticDoc) => number> = {
  freq: (a, b) => (b.freq ?? 0) - (a.freq ?? 0) || byId(a, b),
  win: (a, b) => (b.win_rate ?? -1) - (a.win_rate ?? -1) || byId(a, b),
  importance: (a, b) => (b.importance ?? 0) - (a.importance ?? 0) || byId(a, b),
};

/** Sorted copy; the input array is left untouched. */
export function rankTactics(tactics: readonly TacticDoc[], mode: RankingMode): TacticDoc[] {
  return [...tactics].sort(COMPARATORS[mode]);
}

/** tactic id -> 1-based rank under the given mode. */
export function rankOf(tactics: readonly TacticDoc[], mode: RankingMode): Map<number, number> {
  const ranks = new Map<number, number>();
  rankTactics(tactics, mode).forEach((t, i) => ranks.set(t.id, i + 1));
  return ranks;
}

/**
 * Drop a staged preview whose base version no longer matches the server.
 * Returns true when something was invalidated.
 */
export function invalidateStaleStage(vs: ViewState): boolean {
  if (vs.stage && vs.stage.baseVersion !== vs.state.version) {
    vs.stage = null;
    vs.previewOn = false;
    return true;
  }
  return false;
}

export function featureNames(dataset: DatasetInfo): string[] {
  return dataset.schema.features.map((f) => f.name);
}

/** Tactics listed in the diff, by id, for preview-mode row pinning. */
export function diffMembers(diff: DiffDoc, tactics: readonly TacticDoc[]): {
  removed: TacticDoc[];
  added: TacticDoc[];
} {
  const have = new Map(tactics.map((t) => [t.id, t]));
  const removed = diff.removed
    .map((id) => have.get(id))
    .filter((t): t is TacticDoc => t !== undefined);
  return { removed, added: diff.added };
}

export function scoreDelta(diff: DiffDoc): number {
  return diff.new_score - diff.old_score;
}
