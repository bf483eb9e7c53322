/**
 * Rally drill-down for one tactic: where in the rally it fires, and which
 * rallies it fired in.
 *
 * The histogram stacks wins (green) over losses (red) per start index.  The
 * two rally lists split matches by focal-player outcome; each entry expands
 * to the covered hits' feature values when the rally has been fetched.
 */

import type { RallyDoc, TacticDoc, UsageDoc } from "./types.js";

export interface DrillArgs {
  tactic: TacticDoc;
  usages: readonly UsageDoc[];
  rallies: ReadonlyMap<number, RallyDoc>;
  featureNames: readonly string[];
}

/** start index -> [wins, losses], from the tactic doc or recomputed. */
export function indexHistogram(args: DrillArgs): Map<number, [number, number]> {
  const out = new Map<number, [number, number]>();
  const doc = args.tactic.index_histogram;
  if (doc) {
    for (const [start, wl] of Object.entries(doc)) {
      out.set(Number(start), [wl[0], wl[1]]);
    }
    return out;
  }
  for (const u of args.usages) {
    const wl = out.get(u.start) ?? [0, 0];
    wl[u.focal_won ? 0 : 1] += 1;
    out.set(u.start, wl);
  }
  return out;
}

function histogramEl(hist: Map<number, [number, number]>): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "index-histogram";
  const starts = [...hist.keys()].sort((a, b) => a - b);
  const tallest = Math.max(1, ...starts.map((s) => hist.get(s)![0] + hist.get(s)![1]));
  const unit = 72 / tallest;
  for (const start of starts) {
    const [wins, losses] = hist.get(start)!;
    const col = document.createElement("div");
    col.className = "histogram-col";
    col.dataset.start = String(start);
    col.title = `start ${start}: ${wins} won, ${losses} lost`;
    const stack = document.createElement("div");
    stack.className = "histogram-stack";
    const win = document.createElement("div");
    win.className = "bar-wins";
    win.style.height = `${(wins * unit).toFixed(1)}px`;
    const loss = document.createElement("div");
    loss.className = "bar-losses";
    loss.style.height = `${(losses * unit).toFixed(1)}px`;
    stack.appendChild(win);
    stack.appendChild(loss);
    col.appendChild(stack);
    const label = document.createElement("span");
    label.className = "histogram-label";
    label.textContent = String(start);
    col.appendChild(label);
    wrap.appendChild(col);
  }
  return wrap;
}

function hitValues(u: UsageDoc, args: DrillArgs): HTMLElement {
  const detail = document.createElement("div");
  detail.className = "hit-values";
  const rally = args.rallies.get(u.rally_id);
  if (!rally) {
    detail.textContent = "(values not loaded)";
    return detail;
  }
  for (let i = 0; i < u.length; i++) {
    const hit = rally.events[u.start + i];
    if (!hit) continue;
    const line = document.createElement("div");
    line.className = "hit-line";
    line.textContent =
      `hit ${u.start + i}: ` +
      hit.map((v, g) => `${args.featureNames[g]}=${v}`).join(", ");
    detail.appendChild(line);
  }
  return detail;
}

function rallyList(title: string, cls: string, usages: UsageDoc[], args: DrillArgs): HTMLElement {
  const box = document.createElement("div");
  box.className = `rally-list ${cls}`;
  const h = document.createElement("h4");
  h.textContent = `${title} (${usages.length})`;
  box.appendChild(h);
  const ul = document.createElement("ul");
  for (const u of usages) {
    const li = document.createElement("li");
    li.className = "rally-entry";
    li.dataset.rallyId = String(u.rally_id);
    const head = document.createElement("span");
    head.textContent = `rally ${u.rally_id}, start ${u.start}`;
    li.appendChild(head);
    li.addEventListener("click", () => {
      const open = li.querySelector(".hit-values");
      if (open) {
        open.remove();
      } else {
        li.appendChild(hitValues(u, args));
      }
    });
    ul.appendChild(li);
  }
  box.appendChild(ul);
  return box;
}

export function renderDrill(args: DrillArgs): HTMLElement {
  const root = document.createElement("div");
  root.className = "drill";
  root.dataset.tacticId = String(args.tactic.id);

  const title = document.createElement("h3");
  title.textContent = `Tactic ${args.tactic.id} in play`;
  root.appendChild(title);

  root.appendChild(histogramEl(indexHistogram(args)));

  const lists = document.createElement("div");
  lists.className = "rally-lists";
  const wins = args.usages.filter((u) => u.focal_won);
  const losses = args.usages.filter((u) => !u.focal_won);
  lists.appendChild(rallyList("Winning rallies", "rally-wins", wins, args));
  lists.appendChild(rallyList("Losing rallies", "rally-losses", losses, args));
  root.appendChild(lists);
  return root;
}
