/**
 * Browser entry point.
 *
 * Query parameters pick the session: `?api=` overrides the service origin,
 * `?session=&dataset=` attaches to an existing session, `?dataset=` starts
 * a fresh one.  With neither, a small landing form offers a dataset-file
 * upload that creates and mines a session.
 */

import { ApiClient } from "./api.js";
import { App } from "./app.js";

function landing(root: HTMLElement, api: ApiClient, app: App): void {
  const box = document.createElement("div");
  box.className = "landing";
  const p = document.createElement("p");
  p.textContent = "Upload a dataset file to start mining.";
  box.appendChild(p);
  const file = document.createElement("input");
  file.type = "file";
  file.accept = "application/json";
  box.appendChild(file);
  const status = document.createElement("p");
  status.className = "landing-status";
  box.appendChild(status);
  file.addEventListener("change", async () => {
    const chosen = file.files?.[0];
    if (!chosen) return;
    status.textContent = "Uploading...";
    try {
      const doc = JSON.parse(await chosen.text());
      const { dataset_id } = await api.uploadDataset(doc);
      status.textContent = "Mining...";
      await app.start(dataset_id);
    } catch (e) {
      status.textContent = e instanceof Error ? e.message : String(e);
    }
  });
  root.appendChild(box);
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.location.origin;
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ApiClient(base);
  const app = new App(root, api);

  const session = params.get("session");
  const dataset = params.get("dataset");
  try {
    if (session && dataset) {
      await app.attach(session, dataset);
    } else if (dataset) {
      await app.start(dataset);
    } else {
      landing(root, api, app);
    }
  } catch (e) {
    root.textContent = e instanceof Error ? e.message : String(e);
  }
}

document.addEventListener("DOMContentLoaded", () => void boot());
