/**
 * Suggestion input, utterance history, and the confirmation card.
 *
 * A submitted utterance comes back as a parsed constraint plus a staged
 * preview.  The card shows the mapped constraint with every parameter
 * editable; confirming with edits discards the original parse's preview and
 * requests a fresh one for the edited constraint, cancelling touches
 * nothing server-side.
 */

import type { ConstraintDoc, ParsedDoc } from "./types.js";

export interface SuggestCallbacks {
  onSubmit: (text: string) => void;
  onConfirm: (edited: ConstraintDoc) => void;
  onCancel: () => void;
}

export interface SuggestArgs {
  log: readonly string[];
  pending: ParsedDoc | null;
  featureNames: readonly string[];
  error?: string | null;
  busy?: boolean;
}

const LIST_FIELDS = new Set(["tactic_ids", "features"]);
const DIRECTIONS = ["back", "front"];

function select(name: string, options: readonly string[], current: string): HTMLSelectElement {
  const sel = document.createElement("select");
  sel.name = name;
  for (const opt of options) {
    const o = document.createElement("option");
    o.value = opt;
    o.textContent = opt;
    o.selected = opt === current;
    sel.appendChild(o);
  }
  return sel;
}

function slotInput(
  name: string,
  value: unknown,
  featureNames: readonly string[],
): HTMLElement {
  if (name === "feature") {
    return select(name, featureNames, String(value));
  }
  if (name === "direction") {
    return select(name, DIRECTIONS, String(value));
  }
  const input = document.createElement("input");
  input.name = name;
  if (LIST_FIELDS.has(name)) {
    input.type = "text";
    input.value = (value as unknown[]).join(", ");
  } else if (typeof value === "number") {
    input.type = "number";
    if (!Number.isInteger(value)) input.step = "0.1";
    input.value = String(value);
  } else {
    input.type = "text";
    input.value = String(value ?? "");
  }
  return input;
}

/** Read the edited constraint back out of the card's form controls. */
export function readConstraintForm(card: HTMLElement): ConstraintDoc {
  const doc: ConstraintDoc = { type: card.dataset.constraintType ?? "" };
  const controls = card.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[name]");
  for (const control of controls) {
    const name = control.name;
    const raw = control.value;
    if (LIST_FIELDS.has(name)) {
      const parts = raw.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
      doc[name] = name === "tactic_ids" ? parts.map(Number) : parts;
    } else if (control instanceof HTMLInputElement && control.type === "number") {
      doc[name] = Number(raw);
    } else {
      doc[name] = raw;
    }
  }
  return doc;
}

function confirmationCard(
  parsed: ParsedDoc,
  featureNames: readonly string[],
  cb: SuggestCallbacks,
): HTMLElement {
  const card = document.createElement("div");
  card.className = "confirm-card";
  const type = parsed.constraint.type;
  card.dataset.constraintType = type;

  const title = document.createElement("h3");
  title.textContent = type;
  card.appendChild(title);

  const meta = document.createElement("p");
  meta.className = "confirm-meta";
  meta.textContent = `template "${parsed.template}", confidence ${(parsed.confidence * 100).toFixed(0)}%`;
  card.appendChild(meta);

  const form = document.createElement("div");
  form.className = "confirm-slots";
  for (const [name, value] of Object.entries(parsed.constraint)) {
    if (name === "type") continue;
    const label = document.createElement("label");
    label.className = "slot-field";
    const caption = document.createElement("span");
    caption.textContent = name.replace(/_/g, " ");
    label.appendChild(caption);
    label.appendChild(slotInput(name, value, featureNames));
    form.appendChild(label);
  }
  card.appendChild(form);

  const buttons = document.createElement("div");
  buttons.className = "confirm-buttons";
  const ok = document.createElement("button");
  ok.className = "confirm";
  ok.textContent = "Confirm";
  ok.addEventListener("click", () => cb.onConfirm(readConstraintForm(card)));
  const cancel = document.createElement("button");
  cancel.className = "cancel";
  cancel.textContent = "Cancel";
  cancel.addEventListener("click", () => cb.onCancel());
  buttons.appendChild(ok);
  buttons.appendChild(cancel);
  card.appendChild(buttons);
  return card;
}

export function renderSuggestBox(args: SuggestArgs, cb: SuggestCallbacks): HTMLElement {
  const root = document.createElement("div");
  root.className = "suggest-box";

  const rowEl = document.createElement("div");
  rowEl.className = "suggest-row";
  const input = document.createElement("input");
  input.type = "text";
  input.className = "suggest-input";
  input.placeholder = "e.g. merge tactic 3 and tactic 5";
  input.disabled = Boolean(args.busy);
  const go = document.createElement("button");
  go.className = "suggest-submit";
  go.textContent = args.busy ? "Working" : "Suggest";
  go.disabled = Boolean(args.busy);
  const submit = () => {
    const text = input.value.trim();
    if (text) cb.onSubmit(text);
  };
  go.addEventListener("click", submit);
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") submit();
  });
  rowEl.appendChild(input);
  rowEl.appendChild(go);
  root.appendChild(rowEl);

  if (args.error) {
    const err = document.createElement("p");
    err.className = "suggest-error";
    err.textContent = args.error;
    root.appendChild(err);
  }

  if (args.pending) {
    root.appendChild(confirmationCard(args.pending, args.featureNames, cb));
  }

  if (args.log.length > 0) {
    const history = document.createElement("ul");
    history.className = "suggest-history";
    for (const text of [...args.log].reverse()) {
      const li = document.createElement("li");
      li.textContent = text;
      li.addEventListener("click", () => {
        input.value = text;
        input.focus();
      });
      history.appendChild(li);
    }
    root.appendChild(history);
  }
  return root;
}
