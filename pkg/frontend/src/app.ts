/**
 * The steering controller: owns the view state, talks to the service, and
 * re-renders the four panels (table, scatter, suggestion box, drill-down).
 *
 * Server writes happen only through apply, undo, and pin.  Everything else
 * is reads plus pure previews, so cancelling or discarding never needs a
 * server round trip.  A version check guards every staged preview; when the
 * server has moved on, the stage is dropped and the views are refreshed.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderDrill } from "./drill.js";
import { slotBreakdowns, type SlotBreakdown } from "./glyph.js";
import { renderScatter } from "./scatter.js";
import {
  diffMembers,
  featureNames,
  invalidateStaleStage,
  rankOf,
  scoreDelta,
  type RankingMode,
  type SizeChannel,
  type ViewState,
} from "./state.js";
import { renderSuggestBox } from "./suggest.js";
import { renderTable } from "./table.js";
import type { ConstraintDoc, RallyDoc, UsageDoc } from "./types.js";

export interface StartOptions {
  seed?: number;
  miningTimeoutMs?: number;
}

export class App {
  readonly root: HTMLElement;
  readonly api: ApiClient;
  vs: ViewState | null = null;
  error: string | null = null;
  busy = false;
  drillId: number | null = null;
  private hoverId: number | null = null;
  private readonly rallyCache = new Map<number, RallyDoc>();
  private readonly usageCache = new Map<number, UsageDoc[]>();

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
  }

  // -- lifecycle -------------------------------------------------------------

  /** Create a session on the dataset, wait for the initial mine, render. */
  async start(datasetId: string, opts: StartOptions = {}): Promise<void> {
    const { session_id, job_id } = await this.api.createSession({
      dataset_id: datasetId,
      seed: opts.seed,
    });
    await this.api.pollJob(job_id, { timeoutMs: opts.miningTimeoutMs ?? 300_000 });
    await this.attach(session_id, datasetId);
  }

  /** Load an already-mined session. */
  async attach(sessionId: string, datasetId: string): Promise<void> {
    const [state, dataset] = await Promise.all([
      this.api.getState(sessionId),
      this.api.getDataset(datasetId),
    ]);
    this.vs = {
      sessionId,
      datasetId,
      dataset,
      state,
      projection: { channel: "freq", points: [] },
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
    await this.refresh();
    void this.prefetchBreakdowns();
  }

  /** Re-pull everything versioned; drops a stale stage if one exists. */
  async refresh(): Promise<void> {
    const vs = this.vs;
    if (!vs) return;
    try {
      const [state, projection, history] = await Promise.all([
        this.api.getState(vs.sessionId),
        this.api.getProjection(vs.sessionId, vs.sizeChannel),
        this.api.getHistory(vs.sessionId),
      ]);
      vs.state = state;
      vs.projection = projection;
      vs.history = history;
      const have = new Set(state.tactics.map((t) => t.id));
      vs.selected = new Set([...vs.selected].filter((id) => have.has(id)));
      if (this.drillId !== null && !have.has(this.drillId)) this.drillId = null;
      invalidateStaleStage(vs);
      this.error = null;
    } catch (e) {
      this.error = e instanceof Error ? e.message : String(e);
    }
    this.render();
  }

  // -- interactions ----------------------------------------------------------

  setRanking(mode: RankingMode): void {
    if (!this.vs || this.vs.ranking === mode) return;
    this.vs.ranking = mode;
    this.render();
  }

  async setSizeChannel(channel: SizeChannel): Promise<void> {
    const vs = this.vs;
    if (!vs || vs.sizeChannel === channel) return;
    vs.sizeChannel = channel;
    try {
      vs.projection = await this.api.getProjection(vs.sessionId, channel);
      this.error = null;
    } catch (e) {
      this.error = e instanceof Error ? e.message : String(e);
    }
    this.render();
  }

  toggleSelect(tacticId: number): void {
    const vs = this.vs;
    if (!vs) return;
    if (vs.selected.has(tacticId)) {
      vs.selected.delete(tacticId);
    } else {
      vs.selected.add(tacticId);
      this.drillId = tacticId;
      void this.ensureDrillData(tacticId);
    }
    this.render();
  }

  setHover(tacticId: number | null): void {
    if (this.hoverId === tacticId) return;
    const swap = (id: number | null, on: boolean) => {
      if (id === null) return;
      for (const el of this.root.querySelectorAll(`[data-tactic-id="${id}"]`)) {
        el.classList.toggle("hovered", on);
      }
    };
    swap(this.hoverId, false);
    swap(tacticId, true);
    this.hoverId = tacticId;
  }

  async pin(tacticId: number, pinned: boolean): Promise<void> {
    const vs = this.vs;
    if (!vs) return;
    try {
      vs.state = await this.api.pin(vs.sessionId, tacticId, pinned);
      invalidateStaleStage(vs);
      this.error = null;
      this.render();
    } catch (e) {
      await this.fail(e);
    }
  }

  async submit(text: string): Promise<void> {
    const vs = this.vs;
    if (!vs || this.busy) return;
    this.busy = true;
    this.render();
    try {
      const payload = await this.api.suggest(vs.sessionId, text, [...vs.selected]);
      vs.suggestionLog.push(text);
      if (!payload.parsed) throw new ApiError(500, "ERROR", "suggestion lost its parse");
      vs.pending = { parsed: payload.parsed, payload };
      this.error = null;
    } catch (e) {
      if (e instanceof ApiError && e.code === "UNPARSED") {
        const hint = e.nearest.length ? ` Try: ${e.nearest.join(" | ")}` : "";
        this.error = `${e.message}${hint}`;
      } else {
        await this.fail(e);
        this.busy = false;
        return;
      }
    }
    this.busy = false;
    this.render();
  }

  /** Confirm the card; re-previews only when the slots were edited. */
  async confirm(edited: ConstraintDoc): Promise<void> {
    const vs = this.vs;
    if (!vs || !vs.pending) return;
    const { parsed, payload } = vs.pending;
    const untouched = JSON.stringify(edited) === JSON.stringify(parsed.constraint);
    this.busy = true;
    this.render();
    try {
      const final = untouched ? payload : await this.api.preview(vs.sessionId, edited);
      vs.stage = {
        parsed,
        constraint: untouched ? parsed.constraint : edited,
        previewId: final.preview_id,
        diff: final.diff,
        baseVersion: final.diff.base_version,
      };
      vs.previewOn = true;
      vs.pending = null;
      invalidateStaleStage(vs);
      this.error = null;
    } catch (e) {
      await this.fail(e);
    }
    this.busy = false;
    this.render();
  }

  cancel(): void {
    if (!this.vs) return;
    this.vs.pending = null;
    this.render();
  }

  discard(): void {
    const vs = this.vs;
    if (!vs) return;
    vs.stage = null;
    vs.previewOn = false;
    this.render();
  }

  async apply(): Promise<void> {
    const vs = this.vs;
    if (!vs || !vs.stage) return;
    const stage = vs.stage;
    try {
      vs.state = await this.api.applyPreview(vs.sessionId, stage.previewId, stage.baseVersion);
      vs.stage = null;
      vs.previewOn = false;
      await this.refresh();
    } catch (e) {
      await this.fail(e);
    }
  }

  async undo(): Promise<void> {
    const vs = this.vs;
    if (!vs) return;
    try {
      const { state } = await this.api.undo(vs.sessionId);
      vs.state = state;
      vs.stage = null;
      vs.previewOn = false;
      await this.refresh();
    } catch (e) {
      await this.fail(e);
    }
  }

  /** STALE_VERSION means another tab moved the session: resync, keep going. */
  private async fail(e: unknown): Promise<void> {
    if (e instanceof ApiError && e.code === "STALE_VERSION") {
      this.error = "Session changed elsewhere; refreshed.";
      if (this.vs) {
        this.vs.pending = null;
        this.vs.stage = null;
        this.vs.previewOn = false;
      }
      await this.refresh();
      return;
    }
    this.error = e instanceof Error ? e.message : String(e);
    this.render();
  }

  // -- drill-down data -------------------------------------------------------

  private async ensureDrillData(tacticId: number): Promise<void> {
    const vs = this.vs;
    if (!vs || this.usageCache.has(tacticId)) return;
    try {
      const usages = await this.api.getUsages(vs.sessionId, tacticId);
      this.usageCache.set(tacticId, usages);
      for (const u of usages) {
        if (!this.rallyCache.has(u.rally_id)) {
          this.rallyCache.set(
            u.rally_id,
            await this.api.getRally(vs.datasetId, u.rally_id),
          );
        }
      }
      this.storeBreakdown(tacticId, usages);
      this.render();
    } catch {
      // drill data is best-effort; the panel renders without values
    }
  }

  private storeBreakdown(tacticId: number, usages: UsageDoc[]): void {
    const vs = this.vs;
    if (!vs) return;
    const tactic = vs.state.tactics.find((t) => t.id === tacticId);
    if (!tactic) return;
    const windows: string[][][] = [];
    for (const u of usages) {
      const rally = this.rallyCache.get(u.rally_id);
      if (!rally) continue;
      windows.push(rally.events.slice(u.start, u.start + u.length));
    }
    vs.breakdowns.set(tacticId, slotBreakdowns(tactic.events, windows));
  }

  /** Background fill of wildcard-slot breakdowns for every tactic. */
  private async prefetchBreakdowns(): Promise<void> {
    const vs = this.vs;
    if (!vs) return;
    for (const t of [...vs.state.tactics]) {
      if (this.vs !== vs) return;
      await this.ensureDrillData(t.id);
    }
  }

  // -- rendering -------------------------------------------------------------

  render(): void {
    const vs = this.vs;
    if (!vs) return;
    const draft =
      this.root.querySelector<HTMLInputElement>(".suggest-input")?.value ?? "";
    this.root.textContent = "";
    this.root.appendChild(this.header(vs));
    if (this.error) this.root.appendChild(this.banner());
    if (vs.previewOn && vs.stage) this.root.appendChild(this.previewBar(vs));

    const panels = document.createElement("main");
    panels.className = "panels";
    panels.appendChild(this.panel("panel-table", this.tablePanel(vs)));
    panels.appendChild(this.panel("panel-scatter", this.scatterPanel(vs)));
    panels.appendChild(this.panel("panel-suggest", this.suggestPanel(vs)));
    panels.appendChild(this.panel("panel-drill", this.drillPanel(vs)));
    this.root.appendChild(panels);

    const input = this.root.querySelector<HTMLInputElement>(".suggest-input");
    if (input && draft) input.value = draft;
    if (this.hoverId !== null) {
      const id = this.hoverId;
      this.hoverId = null;
      this.setHover(id);
    }
  }

  private panel(cls: string, child: HTMLElement | SVGElement): HTMLElement {
    const section = document.createElement("section");
    section.className = `panel ${cls}`;
    section.appendChild(child);
    return section;
  }

  private header(vs: ViewState): HTMLElement {
    const bar = document.createElement("header");
    bar.className = "control-bar";

    const label = document.createElement("span");
    label.className = "session-label";
    label.textContent = `session ${vs.sessionId.slice(0, 8)}, v${vs.state.version}`;
    bar.appendChild(label);

    bar.appendChild(
      this.toggleGroup("ranking-toggle", ["freq", "win", "importance"], vs.ranking, (m) =>
        this.setRanking(m as RankingMode),
      ),
    );
    bar.appendChild(
      this.toggleGroup("size-toggle", ["freq", "importance"], vs.sizeChannel, (c) =>
        void this.setSizeChannel(c as SizeChannel),
      ),
    );

    const score = document.createElement("span");
    score.className = "score-label";
    score.textContent = vs.state.score === null ? "score n/a" : `score ${vs.state.score.toFixed(1)}`;
    bar.appendChild(score);

    const undoBtn = document.createElement("button");
    undoBtn.className = "undo";
    undoBtn.textContent = "Undo";
    undoBtn.disabled = !vs.state.can_undo;
    undoBtn.addEventListener("click", () => void this.undo());
    bar.appendChild(undoBtn);
    return bar;
  }

  private toggleGroup(
    cls: string,
    modes: string[],
    active: string,
    pick: (mode: string) => void,
  ): HTMLElement {
    const group = document.createElement("div");
    group.className = cls;
    for (const mode of modes) {
      const b = document.createElement("button");
      b.textContent = mode;
      b.dataset.mode = mode;
      if (mode === active) b.classList.add("active");
      b.addEventListener("click", () => pick(mode));
      group.appendChild(b);
    }
    return group;
  }

  private banner(): HTMLElement {
    const div = document.createElement("div");
    div.className = "error-banner";
    const msg = document.createElement("span");
    msg.textContent = this.error ?? "";
    div.appendChild(msg);
    const retry = document.createElement("button");
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.refresh());
    div.appendChild(retry);
    return div;
  }

  private previewBar(vs: ViewState): HTMLElement {
    const stage = vs.stage!;
    const bar = document.createElement("div");
    bar.className = "preview-bar";

    const { removed } = diffMembers(stage.diff, vs.state.tactics);
    const delta = scoreDelta(stage.diff);
    const label = document.createElement("span");
    label.className = "preview-summary";
    label.textContent =
      `${stage.constraint.type}: -${removed.length} +${stage.diff.added.length} tactics, ` +
      `score ${stage.diff.old_score.toFixed(1)} to ${stage.diff.new_score.toFixed(1)} ` +
      `(${delta >= 0 ? "+" : ""}${delta.toFixed(1)})`;
    bar.appendChild(label);
    if (stage.diff.reason) {
      const why = document.createElement("span");
      why.className = "preview-reason";
      why.textContent = stage.diff.reason;
      bar.appendChild(why);
    }

    const apply = document.createElement("button");
    apply.className = "apply";
    apply.textContent = "Apply";
    apply.addEventListener("click", () => void this.apply());
    bar.appendChild(apply);

    const discardBtn = document.createElement("button");
    discardBtn.className = "discard";
    discardBtn.textContent = "Discard";
    discardBtn.addEventListener("click", () => this.discard());
    bar.appendChild(discardBtn);
    return bar;
  }

  private tablePanel(vs: ViewState): HTMLElement {
    return renderTable(vs.state.tactics, {
      ranking: vs.ranking,
      featureNames: featureNames(vs.dataset),
      selected: vs.selected,
      diff: vs.previewOn && vs.stage ? vs.stage.diff : null,
      breakdowns: vs.breakdowns,
      onSelect: (id) => this.toggleSelect(id),
      onHover: (id) => this.setHover(id),
      onPin: (id, pinned) => void this.pin(id, pinned),
      onMine: () => void this.refresh(),
    });
  }

  private scatterPanel(vs: ViewState): SVGElement {
    return renderScatter(vs.projection, {
      ranks: rankOf(vs.state.tactics, vs.ranking),
      diff: vs.previewOn && vs.stage ? vs.stage.diff : null,
      selected: vs.selected,
      onHover: (id) => this.setHover(id),
      onSelect: (id) => this.toggleSelect(id),
    });
  }

  private suggestPanel(vs: ViewState): HTMLElement {
    return renderSuggestBox(
      {
        log: vs.suggestionLog,
        pending: vs.pending?.parsed ?? null,
        featureNames: featureNames(vs.dataset),
        error: null,
        busy: this.busy,
      },
      {
        onSubmit: (text) => void this.submit(text),
        onConfirm: (edited) => void this.confirm(edited),
        onCancel: () => this.cancel(),
      },
    );
  }

  private drillPanel(vs: ViewState): HTMLElement {
    if (this.drillId === null) {
      const hint = document.createElement("p");
      hint.className = "drill-hint";
      hint.textContent = "Select a tactic to inspect its rallies.";
      return hint;
    }
    const tactic = vs.state.tactics.find((t) => t.id === this.drillId);
    if (!tactic) {
      const gone = document.createElement("p");
      gone.className = "drill-hint";
      gone.textContent = "That tactic is no longer in the set.";
      return gone;
    }
    return renderDrill({
      tactic,
      usages: this.usageCache.get(tactic.id) ?? [],
      rallies: this.rallyCache,
      featureNames: featureNames(vs.dataset),
    });
  }
}
