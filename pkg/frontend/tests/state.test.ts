import { describe, expect, it } from "vitest";
import {
  diffMembers,
  invalidateStaleStage,
  rankOf,
  rankTactics,
  scoreDelta,
  type ViewState,
} from "../src/state.js";
import type { DiffDoc, TacticDoc } from "../src/types.js";

function tactic(id: number, freq: number, win: number | null, importance: number): TacticDoc {
  return {
    id,
    pinned: false,
    events: [[null, null]],
    length: 1,
    freq,
    win_rate: win,
    importance,
  };
}

const tactics = [
  tactic(3, 5, 0.2, 0.9),
  tactic(1, 9, 0.5, 0.1),
  tactic(2, 5, null, 0.4),
  tactic(4, 7, 0.8, 0.4),
];

describe("ranking", () => {
  it("orders by the active mode with id as the tie-break", () => {
    expect(rankTactics(tactics, "freq").map((t) => t.id)).toEqual([1, 4, 2, 3]);
    expect(rankTactics(tactics, "win").map((t) => t.id)).toEqual([4, 1, 3, 2]);
    expect(rankTactics(tactics, "importance").map((t) => t.id)).toEqual([3, 2, 4, 1]);
  });

  it("is a pure re-sort: the fetched list is never reordered in place", () => {
    const before = tactics.map((t) => t.id);
    rankTactics(tactics, "importance");
    rankTactics(tactics, "win");
    expect(tactics.map((t) => t.id)).toEqual(before);
  });

  it("assigns 1-based ranks per mode", () => {
    const ranks = rankOf(tactics, "freq");
    expect(ranks.get(1)).toBe(1);
    expect(ranks.get(4)).toBe(2);
    expect(ranks.get(3)).toBe(4);
  });
});

function viewStateAt(version: number, stageVersion: number | null): ViewState {
  const diff: DiffDoc = {
    constraint: { type: "MergeTactics", tactic_ids: [1, 2] },
    removed: [1, 2],
    added: [],
    old_score: 5,
    new_score: 4,
    base_version: stageVersion ?? 0,
    reason: null,
  };
  return {
    sessionId: "s",
    datasetId: "d",
    dataset: { dataset_id: "d", n_rallies: 0, focal_player: 0, schema: { features: [] } },
    state: {
      session_id: "s",
      version,
      mined: true,
      globals: [],
      can_undo: false,
      score: 5,
      tactics: [],
    },
    projection: { channel: "freq", points: [] },
    history: [],
    selected: new Set(),
    pending: null,
    stage:
      stageVersion === null
        ? null
        : {
            parsed: null,
            constraint: diff.constraint,
            previewId: "p",
            diff,
            baseVersion: stageVersion,
          },
    previewOn: stageVersion !== null,
    ranking: "freq",
    sizeChannel: "freq",
    suggestionLog: [],
    breakdowns: new Map(),
  };
}

describe("stage invalidation", () => {
  it("keeps a stage previewed at the current version", () => {
    const vs = viewStateAt(7, 7);
    expect(invalidateStaleStage(vs)).toBe(false);
    expect(vs.stage).not.toBeNull();
    expect(vs.previewOn).toBe(true);
  });

  it("drops a stage once the server version moves", () => {
    const vs = viewStateAt(8, 7);
    expect(invalidateStaleStage(vs)).toBe(true);
    expect(vs.stage).toBeNull();
    expect(vs.previewOn).toBe(false);
  });

  it("is a no-op without a stage", () => {
    const vs = viewStateAt(8, null);
    expect(invalidateStaleStage(vs)).toBe(false);
  });
});

describe("diff helpers", () => {
  it("resolves removed ids against the live list and keeps added docs", () => {
    const added = tactic(9, 3, 0.5, 0.2);
    const diff: DiffDoc = {
      constraint: { type: "MergeTactics", tactic_ids: [1, 3] },
      removed: [1, 3, 77],
      added: [added],
      old_score: 9,
      new_score: 6,
      base_version: 1,
      reason: null,
    };
    const { removed, added: got } = diffMembers(diff, tactics);
    expect(removed.map((t) => t.id)).toEqual([1, 3]);
    expect(got).toEqual([added]);
    expect(scoreDelta(diff)).toBeCloseTo(-3, 12);
  });
});
