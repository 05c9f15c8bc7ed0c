import {
  DEFAULT_METRIC_NS,
  MetricsPayload,
  PerspectivesPayload,
  RunStatus,
  RunSubmission,
  RunSummary,
  ServiceStats,
  TERMINAL_STATUSES,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (summary: RunSummary) => void;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Thin typed client over the run service. All numbers displayed by the UI
 * come from these payloads; the client never recomputes scores or metrics.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json();
        detail = typeof body.detail === "string"
          ? body.detail : JSON.stringify(body.detail ?? body);
      } catch {
        // keep the status code
      }
      throw new Error(`${path} failed: ${detail}`);
    }
    return response.json() as Promise<T>;
  }

  submitRun(config: RunSubmission): Promise<{ run_id: string }> {
    return this.request("/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("/runs");
  }

  getRun(runId: string): Promise<RunSummary> {
    return this.request(`/runs/${runId}`);
  }

  listDatasets(): Promise<string[]> {
    return this.request("/datasets");
  }

  getPerspectives(runId: string): Promise<PerspectivesPayload> {
    return this.request(`/runs/${runId}/perspectives`);
  }

  /** Re-factorize a finished run server-side; never re-executes detectors. */
  patchPerspectives(runId: string, g: number): Promise<PerspectivesPayload> {
    return this.request(`/runs/${runId}/perspectives`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ g }),
    });
  }

  getMetrics(runId: string, nValues: number[] = DEFAULT_METRIC_NS): Promise<MetricsPayload> {
    return this.request(`/runs/${runId}/metrics?n=${nValues.join(",")}`);
  }

  getStats(): Promise<ServiceStats> {
    return this.request("/stats");
  }

  /**
   * Poll a submitted run until it reaches a terminal state
   * (completed / infeasible / failed). Resolves with the final summary.
   */
  async pollRun(runId: string, options: PollOptions = {}): Promise<RunSummary> {
    const intervalMs = options.intervalMs ?? 500;
    const timeoutMs = options.timeoutMs ?? 300_000;
    const startedAt = Date.now();
    for (;;) {
      const summary = await this.getRun(runId);
      options.onUpdate?.(summary);
      if (TERMINAL_STATUSES.has(summary.status as RunStatus)) {
        return summary;
      }
      if (Date.now() - startedAt > timeoutMs) {
        throw new Error(`run ${runId} did not finish within ${timeoutMs} ms`);
      }
      await sleep(intervalMs);
    }
  }
}
