/** Thin typed client for the demand service.
 *
 * The fetch function is injected so tests can mock the API completely;
 * nothing here computes model numbers, it only moves payloads.
 */

import type {
  FitDoc,
  JobStatus,
  PredictiveBands,
  SongCurves,
  WhatifRequest,
  WhatifResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const text = await resp.text();
    if (!resp.ok) {
      let message = text;
      try {
        message = (JSON.parse(text) as { error?: string }).error ?? text;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, message);
    }
    return JSON.parse(text) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  listSongs(): Promise<{ songs: string[] }> {
    return this.request("GET", "/songs");
  }

  songCurves(songId: string): Promise<SongCurves> {
    return this.request("GET", `/songs/${encodeURIComponent(songId)}/curves`);
  }

  getFit(fitId: string): Promise<FitDoc> {
    return this.request("GET", `/fits/${encodeURIComponent(fitId)}`);
  }

  predictive(fitId: string, quantiles?: number[]): Promise<PredictiveBands> {
    const q = quantiles ? `?quantiles=${quantiles.join(",")}` : "";
    return this.request("GET", `/fits/${encodeURIComponent(fitId)}/predictive${q}`);
  }

  submitFit(kind: "null" | "forced", body: Record<string, unknown>): Promise<{ job_id: string }> {
    return this.request("POST", `/fit/${kind}`, body);
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  /** Poll a job until it leaves the queue; resolves on done, rejects on failed. */
  async waitForJob(
    jobId: string,
    opts: { intervalMs?: number; maxAttempts?: number; sleep?: (ms: number) => Promise<void> } = {},
  ): Promise<JobStatus> {
    const interval = opts.intervalMs ?? 500;
    const maxAttempts = opts.maxAttempts ?? 240;
    const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
    for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
      const status = await this.jobStatus(jobId);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        throw new ApiError(500, status.error ?? "job failed");
      }
      await sleep(interval);
    }
    throw new ApiError(504, `job ${jobId} still running after ${maxAttempts} polls`);
  }

  whatif(body: WhatifRequest): Promise<WhatifResponse> {
    return this.request("POST", "/optimize/whatif", body);
  }
}
