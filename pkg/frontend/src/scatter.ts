/**
 * Polar scatter of the tactic projection.
 *
 * Every tactic is a dot at its server-assigned (angle, radius); dot area
 * follows the active size channel, fill follows win rate.  In preview mode
 * the outgoing tactics are ghosted and each incoming tactic is drawn dashed
 * at the circular mean of its parents' positions; that placement is purely
 * presentational, the real coordinates arrive after the constraint is
 * applied.
 */

import type { DiffDoc, ProjectionDoc, ProjectionPoint } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ScatterOptions {
  /** Edge length of the square SVG in px. */
  extent?: number;
  /** 1-based ranks under the active ranking; used for the top-N labels. */
  ranks?: Map<number, number>;
  labelTop?: number;
  diff?: DiffDoc | null;
  selected?: ReadonlySet<number>;
  onHover?: (tacticId: number | null) => void;
  onSelect?: (tacticId: number) => void;
}

export function winColor(winRate: number | null): string {
  if (winRate === null || Number.isNaN(winRate)) return "hsl(0, 0%, 62%)";
  const hue = Math.max(0, Math.min(1, winRate)) * 120;
  return `hsl(${hue.toFixed(0)}, 62%, 46%)`;
}

/** Mean direction and mean radius of the given points. */
export function circularCentroid(
  points: readonly { angle: number; radius: number }[],
): { angle: number; radius: number } {
  if (points.length === 0) return { angle: 0, radius: 0.5 };
  let x = 0;
  let y = 0;
  let r = 0;
  for (const p of points) {
    x += Math.cos(p.angle);
    y += Math.sin(p.angle);
    r += p.radius;
  }
  const angle = Math.atan2(y, x);
  return { angle: angle < 0 ? angle + 2 * Math.PI : angle, radius: r / points.length };
}

export interface PreviewPoint extends ProjectionPoint {
  parents: number[];
}

/**
 * Placeholder positions for the tactics a staged diff would introduce:
 * each sits at the centroid of the parents it replaces (or of the whole
 * cloud when the diff removes nothing, e.g. a split of a kept tactic).
 */
export function previewPoints(diff: DiffDoc, projection: ProjectionDoc): PreviewPoint[] {
  const byId = new Map(projection.points.map((p) => [p.tactic_id, p]));
  const parents = diff.removed
    .map((id) => byId.get(id))
    .filter((p): p is ProjectionPoint => p !== undefined);
  const anchor = circularCentroid(parents.length ? parents : projection.points);
  const meanSize =
    projection.points.length > 0
      ? projection.points.reduce((s, p) => s + p.size, 0) / projection.points.length
      : 1;
  return diff.added.map((t, i) => ({
    tactic_id: t.id,
    // fan multiple additions out a little so they stay distinguishable
    angle: anchor.angle + (i - (diff.added.length - 1) / 2) * 0.12,
    radius: anchor.radius,
    size: meanSize,
    win_rate: t.win_rate ?? null,
    parents: parents.map((p) => p.tactic_id),
  }));
}

function toXY(p: { angle: number; radius: number }, half: number): { x: number; y: number } {
  const span = half - 16;
  return {
    x: half + Math.cos(p.angle) * p.radius * span,
    y: half - Math.sin(p.angle) * p.radius * span,
  };
}

function dotRadius(size: number, maxSize: number): number {
  const norm = maxSize > 0 ? size / maxSize : 0;
  return 4 + 9 * Math.sqrt(norm);
}

function addDot(
  svg: SVGSVGElement,
  p: ProjectionPoint,
  half: number,
  maxSize: number,
  opts: ScatterOptions,
  extraClass: string,
): SVGCircleElement {
  const { x, y } = toXY(p, half);
  const c = document.createElementNS(SVG_NS, "circle");
  c.setAttribute("cx", x.toFixed(2));
  c.setAttribute("cy", y.toFixed(2));
  c.setAttribute("r", dotRadius(p.size, maxSize).toFixed(2));
  c.setAttribute("fill", winColor(p.win_rate));
  c.setAttribute("class", `point ${extraClass}`.trim());
  c.dataset.tacticId = String(p.tactic_id);
  if (opts.selected?.has(p.tactic_id)) c.classList.add("point-selected");
  c.addEventListener("mouseenter", () => opts.onHover?.(p.tactic_id));
  c.addEventListener("mouseleave", () => opts.onHover?.(null));
  c.addEventListener("click", () => opts.onSelect?.(p.tactic_id));
  const title = document.createElementNS(SVG_NS, "title");
  title.textContent = `tactic ${p.tactic_id}`;
  c.appendChild(title);
  svg.appendChild(c);
  return c;
}

export function renderScatter(projection: ProjectionDoc, opts: ScatterOptions = {}): SVGSVGElement {
  const extent = opts.extent ?? 420;
  const half = extent / 2;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${extent} ${extent}`);
  svg.setAttribute("width", String(extent));
  svg.setAttribute("height", String(extent));
  svg.setAttribute("class", "scatter");
  svg.dataset.channel = projection.channel;

  for (const ring of [0.33, 0.66, 1.0]) {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(half));
    circle.setAttribute("cy", String(half));
    circle.setAttribute("r", (ring * (half - 16)).toFixed(2));
    circle.setAttribute("class", "ring");
    svg.appendChild(circle);
  }

  const removed = new Set(opts.diff?.removed ?? []);
  const maxSize = projection.points.reduce((m, p) => Math.max(m, p.size), 0);
  for (const p of projection.points) {
    addDot(svg, p, half, maxSize, opts, removed.has(p.tactic_id) ? "point-removed" : "");
  }
  if (opts.diff) {
    for (const p of previewPoints(opts.diff, projection)) {
      const dot = addDot(svg, p, half, maxSize, opts, "point-added");
      dot.setAttribute("stroke-dasharray", "4 3");
    }
  }

  const ranks = opts.ranks;
  if (ranks) {
    const top = opts.labelTop ?? 10;
    for (const p of projection.points) {
      const rank = ranks.get(p.tactic_id);
      if (rank === undefined || rank > top || removed.has(p.tactic_id)) continue;
      const { x, y } = toXY(p, half);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", (x + 6).toFixed(2));
      label.setAttribute("y", (y - 6).toFixed(2));
      label.setAttribute("class", "rank-label");
      label.textContent = `#${rank}`;
      svg.appendChild(label);
    }
  }
  return svg;
}
