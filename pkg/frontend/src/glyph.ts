/**
 * Tactic glyphs: one column per event, one row per feature.
 *
 * Concrete slots print their value.  Wildcard slots are drawn at reduced
 * opacity showing the value most often observed in that position across the
 * tactic's matches, and expand to the top two observed values with shares.
 */

import type { Slot, TacticDoc } from "./types.js";

export interface ValueShare {
  value: string;
  count: number;
  share: number;
}

/** Observed-value tally for one slot, sorted so entry 0 is the modal value. */
export interface SlotBreakdown {
  entries: ValueShare[];
}

/**
 * Per-slot observed-value tallies.
 *
 * `windows` holds, for each match of the tactic, the concrete feature values
 * of the covered events: windows[u][i][g] is feature g of the i-th event.
 * Result is indexed [event][feature].
 */
export function slotBreakdowns(
  events: readonly Slot[][],
  windows: readonly string[][][],
): SlotBreakdown[][] {
  const k = events[0]?.length ?? 0;
  return events.map((_, i) =>
    Array.from({ length: k }, (_, g) => {
      const counts = new Map<string, number>();
      let total = 0;
      for (const w of windows) {
        const v = w[i]?.[g];
        if (v === undefined) continue;
        counts.set(v, (counts.get(v) ?? 0) + 1);
        total += 1;
      }
      const entries = [...counts.entries()]
        .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
        .map(([value, count]) => ({ value, count, share: total ? count / total : 0 }));
      return { entries };
    }),
  );
}

function slotCell(value: Slot, breakdown: SlotBreakdown | undefined): HTMLElement {
  const cell = document.createElement("div");
  cell.className = "slot";
  if (value !== null) {
    cell.classList.add("slot-fixed");
    cell.textContent = value;
    return cell;
  }
  cell.classList.add("slot-any");
  const modal = breakdown?.entries[0];
  const label = document.createElement("span");
  label.className = "slot-modal";
  label.textContent = modal ? modal.value : "any";
  cell.appendChild(label);
  if (modal) {
    const detail = document.createElement("span");
    detail.className = "slot-detail";
    detail.textContent = breakdown!.entries
      .slice(0, 2)
      .map((e) => `${e.value} ${(e.share * 100).toFixed(0)}%`)
      .join(" / ");
    cell.appendChild(detail);
    cell.title = detail.textContent;
    cell.addEventListener("click", (ev) => {
      ev.stopPropagation();
      cell.classList.toggle("slot-open");
    });
  }
  return cell;
}

/**
 * Build the glyph element.  `breakdowns` may be missing (not fetched yet);
 * wildcard slots then read "any" until the caller re-renders.
 */
export function renderGlyph(
  tactic: TacticDoc,
  featureNames: readonly string[],
  breakdowns?: SlotBreakdown[][],
): HTMLElement {
  const root = document.createElement("div");
  root.className = "glyph";
  root.dataset.tacticId = String(tactic.id);
  const k = featureNames.length;
  for (let g = 0; g < k; g++) {
    const row = document.createElement("div");
    row.className = "glyph-row";
    row.dataset.feature = featureNames[g];
    for (let i = 0; i < tactic.events.length; i++) {
      row.appendChild(slotCell(tactic.events[i][g] ?? null, breakdowns?.[i]?.[g]));
    }
    root.appendChild(row);
  }
  return root;
}
