/**
 * Typed fetch client for the tacmine service.
 *
 * Global previews and suggestions come back as background jobs; the client
 * polls those to completion so callers always receive the final payload.
 * Errors carry the server's stable code (UNPARSED, VALIDATION,
 * STALE_VERSION, NOT_FOUND, INVALID_DATASET) plus any extras such as the
 * nearest-template hints.
 */

import type {
  ConstraintDoc,
  DatasetInfo,
  HistoryEntryDoc,
  JobDoc,
  PreviewPayload,
  ProjectionDoc,
  RallyDoc,
  SessionState,
  UsageDoc,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly nearest: string[];

  constructor(status: number, code: string, message: string, nearest: string[] = []) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.nearest = nearest;
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

type FetchLike = typeof fetch;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const doc = text ? JSON.parse(text) : {};
    if (!res.ok) {
      throw new ApiError(
        res.status,
        typeof doc.code === "string" ? doc.code : "ERROR",
        typeof doc.message === "string" ? doc.message : res.statusText,
        Array.isArray(doc.nearest) ? doc.nearest : [],
      );
    }
    return doc as T;
  }

  // -- datasets --------------------------------------------------------------

  uploadDataset(doc: unknown): Promise<{ dataset_id: string; n_rallies: number; k: number }> {
    return this.request("POST", "/datasets", doc);
  }

  getDataset(datasetId: string): Promise<DatasetInfo> {
    return this.request("GET", `/datasets/${datasetId}`);
  }

  getRally(datasetId: string, rallyId: number): Promise<RallyDoc> {
    return this.request("GET", `/datasets/${datasetId}/rallies/${rallyId}`);
  }

  // -- sessions --------------------------------------------------------------

  createSession(payload: {
    dataset_id: string;
    seed?: number;
    max_iterations?: number;
    candidates_per_iteration?: number;
    max_tactic_length?: number;
    alpha?: number;
    beta?: number;
  }): Promise<{ session_id: string; job_id: string }> {
    return this.request("POST", "/sessions", payload);
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  getProjection(sessionId: string, channel: "freq" | "importance"): Promise<ProjectionDoc> {
    return this.request("GET", `/sessions/${sessionId}/projection?channel=${channel}`);
  }

  async getUsages(sessionId: string, tacticId: number): Promise<UsageDoc[]> {
    const doc = await this.request<{ usages: UsageDoc[] }>(
      "GET",
      `/sessions/${sessionId}/tactics/${tacticId}/usages`,
    );
    return doc.usages;
  }

  async getHistory(sessionId: string): Promise<HistoryEntryDoc[]> {
    const doc = await this.request<{ entries: HistoryEntryDoc[] }>(
      "GET",
      `/sessions/${sessionId}/history`,
    );
    return doc.entries;
  }

  // -- jobs ------------------------------------------------------------------

  async pollJob<T>(jobId: string, opts: PollOptions = {}): Promise<T> {
    const interval = opts.intervalMs ?? 150;
    const deadline = Date.now() + (opts.timeoutMs ?? 120_000);
    for (;;) {
      const job = await this.request<JobDoc>("GET", `/jobs/${jobId}`);
      if (job.status === "done") return job.result as T;
      if (job.status === "error") {
        const err = job.error ?? { code: "ERROR", message: "job failed" };
        throw new ApiError(500, err.code, err.message);
      }
      if (Date.now() > deadline) {
        throw new ApiError(504, "TIMEOUT", `job ${jobId} did not finish in time`);
      }
      await new Promise((r) => setTimeout(r, interval));
    }
  }

  /** Resolve a response that is either a payload or a `{job_id}` envelope. */
  private async settle<T extends object>(
    doc: T | { job_id: string },
    opts: PollOptions,
  ): Promise<T> {
    if ("job_id" in doc && typeof (doc as { job_id?: unknown }).job_id === "string") {
      return this.pollJob<T>((doc as { job_id: string }).job_id, opts);
    }
    return doc as T;
  }

  // -- the steering loop -----------------------------------------------------

  async preview(
    sessionId: string,
    constraint: ConstraintDoc,
    opts: PollOptions = {},
  ): Promise<PreviewPayload> {
    const doc = await this.request<PreviewPayload | { job_id: string }>(
      "POST",
      `/sessions/${sessionId}/preview`,
      { constraint },
    );
    return this.settle(doc, opts);
  }

  /**
   * Parse an utterance and preview the result.  Globals run server-side as a
   * job whose result lacks the parse, so the parse from the immediate
   * response is re-attached before returning.
   */
  async suggest(
    sessionId: string,
    text: string,
    selectedIds: number[] = [],
    opts: PollOptions = {},
  ): Promise<PreviewPayload> {
    const doc = await this.request<PreviewPayload | { job_id: string; parsed: PreviewPayload["parsed"] }>(
      "POST",
      `/sessions/${sessionId}/suggest`,
      { text, selected_ids: selectedIds },
    );
    const parsed = (doc as { parsed?: PreviewPayload["parsed"] }).parsed;
    const payload = await this.settle(doc as PreviewPayload | { job_id: string }, opts);
    return parsed && !payload.parsed ? { ...payload, parsed } : payload;
  }

  applyPreview(
    sessionId: string,
    previewId: string,
    baseVersion?: number,
  ): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/apply`, {
      preview_id: previewId,
      base_version: baseVersion,
    });
  }

  undo(sessionId: string): Promise<{ undone: ConstraintDoc; state: SessionState }> {
    return this.request("POST", `/sessions/${sessionId}/undo`);
  }

  pin(sessionId: string, tacticId: number, pinned: boolean): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/pin`, {
      tactic_id: tacticId,
      pinned,
    });
  }
}
