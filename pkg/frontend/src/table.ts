/**
 * Tactic table: glyph, stats, and rank under the active ranking mode.
 *
 * Preview mode pins the staged diff to the top: outgoing tactics first with
 * a "-" marker, incoming ones after with "+".  Pinning here is the render
 * order only; the underlying list is not mutated.
 */

import { renderGlyph, type SlotBreakdown } from "./glyph.js";
import { rankOf, rankTactics, type RankingMode } from "./state.js";
import type { DiffDoc, TacticDoc } from "./types.js";

export interface TableOptions {
  ranking: RankingMode;
  featureNames: readonly string[];
  selected?: ReadonlySet<number>;
  diff?: DiffDoc | null;
  breakdowns?: ReadonlyMap<number, SlotBreakdown[][]>;
  onSelect?: (tacticId: number) => void;
  onHover?: (tacticId: number | null) => void;
  onPin?: (tacticId: number, pinned: boolean) => void;
  onMine?: () => void;
}

function fmtWin(w: number | null): string {
  return w === null ? "n/a" : `${(w * 100).toFixed(0)}%`;
}

function row(
  t: TacticDoc,
  marker: "" | "-" | "+",
  rank: number | undefined,
  opts: TableOptions,
): HTMLTableRowElement {
  const tr = document.createElement("tr");
  tr.className = "tactic-row";
  tr.dataset.tacticId = String(t.id);
  if (marker === "-") tr.classList.add("row-removed");
  if (marker === "+") tr.classList.add("row-added");
  if (opts.selected?.has(t.id)) tr.classList.add("row-selected");

  const mark = tr.insertCell();
  mark.className = "marker";
  mark.textContent = marker;

  const rankCell = tr.insertCell();
  rankCell.className = "rank";
  rankCell.textContent = rank !== undefined ? `#${rank}` : "";

  const glyphCell = tr.insertCell();
  glyphCell.className = "glyph-cell";
  glyphCell.appendChild(renderGlyph(t, opts.featureNames, opts.breakdowns?.get(t.id)));

  const id = tr.insertCell();
  id.className = "tactic-id";
  id.textContent = String(t.id);

  tr.insertCell().textContent = String(t.freq ?? 0);
  tr.insertCell().textContent = fmtWin(t.win_rate ?? null);
  tr.insertCell().textContent = (t.importance ?? 0).toFixed(2);

  const pinCell = tr.insertCell();
  pinCell.className = "pin-cell";
  if (marker !== "+") {
    const pin = document.createElement("button");
    pin.className = "pin-toggle";
    pin.textContent = t.pinned ? "pinned" : "pin";
    pin.addEventListener("click", (ev) => {
      ev.stopPropagation();
      opts.onPin?.(t.id, !t.pinned);
    });
    pinCell.appendChild(pin);
  }

  tr.addEventListener("click", () => opts.onSelect?.(t.id));
  tr.addEventListener("mouseenter", () => opts.onHover?.(t.id));
  tr.addEventListener("mouseleave", () => opts.onHover?.(null));
  return tr;
}

export function renderTable(tactics: readonly TacticDoc[], opts: TableOptions): HTMLElement {
  if (tactics.length === 0 && !opts.diff) {
    const empty = document.createElement("div");
    empty.className = "empty-state";
    const p = document.createElement("p");
    p.textContent = "No tactics yet.";
    empty.appendChild(p);
    const cta = document.createElement("button");
    cta.className = "cta";
    cta.textContent = "Mine tactics";
    cta.addEventListener("click", () => opts.onMine?.());
    empty.appendChild(cta);
    return empty;
  }

  const table = document.createElement("table");
  table.className = "tactic-table";
  const head = table.createTHead().insertRow();
  for (const label of ["", "Rank", "Tactic", "Id", "Freq", "Win rate", "Importance", ""]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }

  const body = table.createTBody();
  const ranks = rankOf(tactics, opts.ranking);
  const removedIds = new Set(opts.diff?.removed ?? []);
  if (opts.diff) {
    for (const t of tactics.filter((t) => removedIds.has(t.id))) {
      body.appendChild(row(t, "-", ranks.get(t.id), opts));
    }
    for (const t of opts.diff.added) {
      body.appendChild(row(t, "+", undefined, opts));
    }
  }
  for (const t of rankTactics(tactics, opts.ranking)) {
    if (removedIds.has(t.id)) continue;
    body.appendChild(row(t, "", ranks.get(t.id), opts));
  }
  return table;
}
