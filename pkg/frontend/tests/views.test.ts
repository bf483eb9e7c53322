import { describe, expect, it, vi } from "vitest";
import type { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { renderDrill, indexHistogram } from "../src/drill.js";
import { circularCentroid, previewPoints, renderScatter } from "../src/scatter.js";
import type { ViewState } from "../src/state.js";
import { readConstraintForm, renderSuggestBox } from "../src/suggest.js";
import { renderTable } from "../src/table.js";
import type {
  DiffDoc,
  ParsedDoc,
  ProjectionDoc,
  RallyDoc,
  TacticDoc,
  UsageDoc,
} from "../src/types.js";

const FEATURES = ["position", "height"];

function tactic(id: number, freq: number, win: number | null, importance: number): TacticDoc {
  return {
    id,
    pinned: false,
    events: [["near", null]],
    length: 1,
    freq,
    win_rate: win,
    importance,
  };
}

const four = [tactic(1, 9, 0.5, 0.1), tactic(2, 5, null, 0.4), tactic(3, 5, 0.2, 0.9), tactic(4, 7, 0.8, 0.4)];

function mergeDiff(added: TacticDoc[]): DiffDoc {
  return {
    constraint: { type: "MergeTactics", tactic_ids: [1, 2] },
    removed: [1, 2],
    added,
    old_score: 12,
    new_score: 9.5,
    base_version: 1,
    reason: null,
  };
}

describe("tactic table", () => {
  it("orders rows by the active ranking and labels ranks", () => {
    const table = renderTable(four, { ranking: "win", featureNames: FEATURES });
    const rows = [...table.querySelectorAll<HTMLElement>(".tactic-row")];
    expect(rows.map((r) => r.dataset.tacticId)).toEqual(["4", "1", "3", "2"]);
    expect(rows[0].querySelector(".rank")?.textContent).toBe("#1");
    expect(rows[3].querySelector(".rank")?.textContent).toBe("#4");
  });

  it("re-sorts under a different mode without touching the input", () => {
    const before = four.map((t) => t.id);
    const table = renderTable(four, { ranking: "importance", featureNames: FEATURES });
    const rows = [...table.querySelectorAll<HTMLElement>(".tactic-row")];
    expect(rows.map((r) => r.dataset.tacticId)).toEqual(["3", "2", "4", "1"]);
    expect(four.map((t) => t.id)).toEqual(before);
  });

  it("marks selection, fires select on row click, and keeps pin clicks separate", () => {
    const onSelect = vi.fn();
    const onPin = vi.fn();
    const table = renderTable(four, {
      ranking: "freq",
      featureNames: FEATURES,
      selected: new Set([2]),
      onSelect,
      onPin,
    });
    const rows = [...table.querySelectorAll<HTMLElement>(".tactic-row")];
    const selectedRow = rows.find((r) => r.dataset.tacticId === "2")!;
    expect(selectedRow.classList.contains("row-selected")).toBe(true);
    rows[0].click();
    expect(onSelect).toHaveBeenCalledWith(1);
    selectedRow.querySelector<HTMLElement>(".pin-toggle")!.click();
    expect(onPin).toHaveBeenCalledWith(2, true);
    expect(onSelect).toHaveBeenCalledTimes(1);
  });

  it("pins diff rows on top: removed with -, added with +", () => {
    const added = tactic(9, 8, 0.6, 0.3);
    const table = renderTable(four, {
      ranking: "freq",
      featureNames: FEATURES,
      diff: mergeDiff([added]),
    });
    const rows = [...table.querySelectorAll<HTMLElement>(".tactic-row")];
    expect(rows).toHaveLength(5);
    expect(rows[0].classList.contains("row-removed")).toBe(true);
    expect(rows[1].classList.contains("row-removed")).toBe(true);
    expect(rows[0].querySelector(".marker")?.textContent).toBe("-");
    expect(rows[2].classList.contains("row-added")).toBe(true);
    expect(rows[2].querySelector(".marker")?.textContent).toBe("+");
    expect(rows[2].dataset.tacticId).toBe("9");
    expect(rows.slice(3).map((r) => r.dataset.tacticId)).toEqual(["4", "3"]);
    expect(rows[2].querySelector(".pin-toggle")).toBeNull();
  });

  it("shows the mine call-to-action when the set is empty", () => {
    const onMine = vi.fn();
    const el = renderTable([], { ranking: "freq", featureNames: FEATURES, onMine });
    expect(el.classList.contains("empty-state")).toBe(true);
    el.querySelector<HTMLElement>(".cta")!.click();
    expect(onMine).toHaveBeenCalledOnce();
  });
});

function projectionOf(n: number): ProjectionDoc {
  return {
    channel: "freq",
    points: Array.from({ length: n }, (_, i) => ({
      tactic_id: i + 1,
      angle: (i / n) * 2 * Math.PI,
      radius: 0.2 + (0.8 * i) / n,
      size: 1 + i,
      win_rate: i / n,
    })),
  };
}

describe("projection scatter", () => {
  it("draws one dot per tactic on the requested channel", () => {
    const svg = renderScatter(projectionOf(4));
    expect(svg.querySelectorAll(".point")).toHaveLength(4);
    expect(svg.dataset.channel).toBe("freq");
    expect(svg.querySelectorAll(".ring")).toHaveLength(3);
  });

  it("labels only the top ten ranks", () => {
    const proj = projectionOf(12);
    const ranks = new Map(proj.points.map((p) => [p.tactic_id, p.tactic_id]));
    const svg = renderScatter(proj, { ranks });
    const labels = [...svg.querySelectorAll(".rank-label")].map((l) => l.textContent);
    expect(labels).toHaveLength(10);
    expect(labels).toContain("#1");
    expect(labels).not.toContain("#11");
  });

  it("ghosts removed parents and draws added tactics dashed at their centroid", () => {
    const proj = projectionOf(4);
    const added = tactic(9, 8, 0.6, 0.3);
    const svg = renderScatter(proj, { diff: mergeDiff([added]) });
    expect(svg.querySelectorAll(".point-removed")).toHaveLength(2);
    const ghost = svg.querySelector<SVGCircleElement>(".point-added")!;
    expect(ghost.dataset.tacticId).toBe("9");
    expect(ghost.getAttribute("stroke-dasharray")).toBe("4 3");

    const placed = previewPoints(mergeDiff([added]), proj);
    expect(placed).toHaveLength(1);
    const parents = proj.points.filter((p) => p.tactic_id === 1 || p.tactic_id === 2);
    const centroid = circularCentroid(parents);
    expect(placed[0].angle).toBeCloseTo(centroid.angle, 12);
    expect(placed[0].radius).toBeCloseTo(centroid.radius, 12);
    expect(placed[0].parents).toEqual([1, 2]);
  });

  it("averages directions on the circle, not raw angles", () => {
    const near = circularCentroid([
      { angle: 0.1, radius: 0.5 },
      { angle: 2 * Math.PI - 0.1, radius: 0.5 },
    ]);
    expect(Math.min(near.angle, 2 * Math.PI - near.angle)).toBeCloseTo(0, 9);
    const mid = circularCentroid([
      { angle: 0, radius: 0.4 },
      { angle: Math.PI / 2, radius: 0.8 },
    ]);
    expect(mid.angle).toBeCloseTo(Math.PI / 4, 12);
    expect(mid.radius).toBeCloseTo(0.6, 12);
  });

  it("reports hover enter and leave", () => {
    const onHover = vi.fn();
    const svg = renderScatter(projectionOf(2), { onHover });
    const dot = svg.querySelector(".point")!;
    dot.dispatchEvent(new MouseEvent("mouseenter"));
    expect(onHover).toHaveBeenLastCalledWith(1);
    dot.dispatchEvent(new MouseEvent("mouseleave"));
    expect(onHover).toHaveBeenLastCalledWith(null);
  });
});

describe("suggestion box", () => {
  const parsed: ParsedDoc = {
    constraint: { type: "SplitByFeature", tactic_ids: [3], feature: "position" },
    confidence: 0.9,
    template: "split {TACTICS} by {FEATURE}",
    slot_spans: {},
  };

  it("submits on enter and on the button", () => {
    const onSubmit = vi.fn();
    const box = renderSuggestBox(
      { log: [], pending: null, featureNames: FEATURES },
      { onSubmit, onConfirm: vi.fn(), onCancel: vi.fn() },
    );
    const input = box.querySelector<HTMLInputElement>(".suggest-input")!;
    input.value = "  merge tactic 1 and tactic 2  ";
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter" }));
    expect(onSubmit).toHaveBeenCalledWith("merge tactic 1 and tactic 2");
    box.querySelector<HTMLElement>(".suggest-submit")!.click();
    expect(onSubmit).toHaveBeenCalledTimes(2);
  });

  it("names the mapped constraint and offers a feature picker", () => {
    const box = renderSuggestBox(
      { log: [], pending: parsed, featureNames: FEATURES },
      { onSubmit: vi.fn(), onConfirm: vi.fn(), onCancel: vi.fn() },
    );
    const card = box.querySelector<HTMLElement>(".confirm-card")!;
    expect(card.querySelector("h3")?.textContent).toBe("SplitByFeature");
    expect(card.textContent).toContain("confidence 90%");
    const picker = card.querySelector<HTMLSelectElement>("select[name=feature]")!;
    expect([...picker.options].map((o) => o.value)).toEqual(FEATURES);
    expect(picker.value).toBe("position");
  });

  it("confirms with the edited slots, not the raw parse", () => {
    const onConfirm = vi.fn();
    const box = renderSuggestBox(
      { log: [], pending: parsed, featureNames: FEATURES },
      { onSubmit: vi.fn(), onConfirm, onCancel: vi.fn() },
    );
    const card = box.querySelector<HTMLElement>(".confirm-card")!;
    card.querySelector<HTMLSelectElement>("select[name=feature]")!.value = "height";
    expect(readConstraintForm(card)).toEqual({
      type: "SplitByFeature",
      tactic_ids: [3],
      feature: "height",
    });
    card.querySelector<HTMLElement>(".confirm")!.click();
    expect(onConfirm).toHaveBeenCalledWith({
      type: "SplitByFeature",
      tactic_ids: [3],
      feature: "height",
    });
  });

  it("cancel never confirms", () => {
    const onConfirm = vi.fn();
    const onCancel = vi.fn();
    const box = renderSuggestBox(
      { log: [], pending: parsed, featureNames: FEATURES },
      { onSubmit: vi.fn(), onConfirm, onCancel },
    );
    box.querySelector<HTMLElement>(".cancel")!.click();
    expect(onCancel).toHaveBeenCalledOnce();
    expect(onConfirm).not.toHaveBeenCalled();
  });

  it("lists history newest first and refills the input from it", () => {
    const box = renderSuggestBox(
      { log: ["first", "second"], pending: null, featureNames: FEATURES, error: "no template matched" },
      { onSubmit: vi.fn(), onConfirm: vi.fn(), onCancel: vi.fn() },
    );
    const items = [...box.querySelectorAll<HTMLElement>(".suggest-history li")];
    expect(items.map((i) => i.textContent)).toEqual(["second", "first"]);
    items[0].click();
    expect(box.querySelector<HTMLInputElement>(".suggest-input")!.value).toBe("second");
    expect(box.querySelector(".suggest-error")?.textContent).toBe("no template matched");
  });
});

describe("rally drill-down", () => {
  const drillTactic: TacticDoc = {
    id: 7,
    pinned: false,
    events: [["near", null]],
    length: 1,
    index_histogram: { "1": [3, 1], "2": [0, 2] },
  };
  const usages: UsageDoc[] = [
    { rally_id: 3, start: 1, length: 1, winner: 0, focal_won: true },
    { rally_id: 5, start: 2, length: 1, winner: 1, focal_won: false },
    { rally_id: 8, start: 1, length: 1, winner: 0, focal_won: true },
  ];
  const rallies = new Map<number, RallyDoc>([
    [3, { id: 3, server: 0, winner: 0, events: [["mid", "high"], ["near", "low"]] }],
  ]);

  it("stacks wins over losses per start index", () => {
    const el = renderDrill({ tactic: drillTactic, usages, rallies, featureNames: FEATURES });
    const cols = [...el.querySelectorAll<HTMLElement>(".histogram-col")];
    expect(cols.map((c) => c.dataset.start)).toEqual(["1", "2"]);
    const px = (col: HTMLElement, cls: string) =>
      parseFloat(col.querySelector<HTMLElement>(cls)!.style.height);
    expect(px(cols[0], ".bar-wins")).toBe(54);
    expect(px(cols[0], ".bar-losses")).toBe(18);
    expect(px(cols[1], ".bar-wins")).toBe(0);
    expect(px(cols[1], ".bar-losses")).toBe(36);
  });

  it("falls back to usages when the tactic doc has no histogram", () => {
    const bare = { ...drillTactic, index_histogram: undefined };
    const hist = indexHistogram({ tactic: bare, usages, rallies, featureNames: FEATURES });
    expect(hist.get(1)).toEqual([2, 0]);
    expect(hist.get(2)).toEqual([0, 1]);
  });

  it("splits rallies into winning and losing lists", () => {
    const el = renderDrill({ tactic: drillTactic, usages, rallies, featureNames: FEATURES });
    const wins = el.querySelectorAll(".rally-wins .rally-entry");
    const losses = el.querySelectorAll(".rally-losses .rally-entry");
    expect(wins).toHaveLength(2);
    expect(losses).toHaveLength(1);
    expect(wins[0].textContent).toContain("rally 3, start 1");
  });

  it("expands an entry to the covered hits' values", () => {
    const el = renderDrill({ tactic: drillTactic, usages, rallies, featureNames: FEATURES });
    const entry = el.querySelector<HTMLElement>(".rally-wins .rally-entry")!;
    entry.click();
    expect(entry.querySelector(".hit-values")?.textContent).toBe("hit 1: position=near, height=low");
    entry.click();
    expect(entry.querySelector(".hit-values")).toBeNull();

    const unloaded = el.querySelector<HTMLElement>(".rally-losses .rally-entry")!;
    unloaded.click();
    expect(unloaded.querySelector(".hit-values")?.textContent).toBe("(values not loaded)");
  });
});

describe("hover linking", () => {
  it("highlights the table row for the hovered scatter point", () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(root, {} as unknown as ApiClient);
    const vs: ViewState = {
      sessionId: "sess-1234",
      datasetId: "d",
      dataset: {
        dataset_id: "d",
        n_rallies: 4,
        focal_player: 0,
        schema: { features: FEATURES.map((name) => ({ name, values: [] })) },
      },
      state: {
        session_id: "sess-1234",
        version: 1,
        mined: true,
        globals: [],
        can_undo: false,
        score: 10,
        tactics: four,
      },
      projection: projectionOf(4),
      history: [],
      selected: new Set(),
      pending: null,
      stage: null,
      previewOn: false,
      ranking: "freq",
      sizeChannel: "freq",
      suggestionLog: [],
      breakdowns: new Map(),
    };
    app.vs = vs;
    app.render();

    const dot = root.querySelector<SVGCircleElement>('.point[data-tactic-id="2"]')!;
    dot.dispatchEvent(new MouseEvent("mouseenter"));
    const row = root.querySelector<HTMLElement>('.tactic-row[data-tactic-id="2"]')!;
    expect(row.classList.contains("hovered")).toBe(true);
    expect(dot.classList.contains("hovered")).toBe(true);

    dot.dispatchEvent(new MouseEvent("mouseleave"));
    expect(row.classList.contains("hovered")).toBe(false);
    root.remove();
  });
});
