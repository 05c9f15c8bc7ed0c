/** Wire formats of the run-management HTTP API. */

export type RunStatus = "queued" | "running" | "completed" | "infeasible" | "failed";

export interface RunSubmission {
  dataset: string;
  t_total: number;
  g: number;
  label_column?: string | null;
  strategy?: string;
  gamma?: number | null;
  k?: number;
  lam?: number;
  subspace_seed?: number;
  detector_seed?: number;
  nmf_seed?: number;
  strategy_seed?: number;
}

export interface RunSummary {
  run_id: string;
  status: RunStatus;
  dataset: string;
  strategy: string;
  t_total: number;
  g: number;
  infeasibility?: string[];
  error?: string;
  result?: RunDocument;
}

/** The persisted run document (subset the UI consumes). */
export interface RunDocument {
  run_id: string;
  status: RunStatus;
  ensemble: number[] | null;
  metric_table: Record<string, MetricRow> | null;
  timings: Record<string, number>;
  infeasibility: string[];
}

export interface MetricRow {
  precision: number;
  recall: number;
  f: number;
}

export interface PerspectiveComponent {
  component_index: number;
  values: number[][];
  member_detectors: number[];
  total_mass: number;
}

export interface PerspectivesPayload {
  g: number;
  detector_ids: string[];
  ensemble: number[];
  components: PerspectiveComponent[];
}

export interface MetricsPayload {
  labels: boolean;
  table: Record<string, MetricRow> | null;
}

export interface ServiceStats {
  runs: number;
  executions: number;
}

export const TERMINAL_STATUSES: ReadonlySet<RunStatus> = new Set([
  "completed", "infeasible", "failed",
]);

export const DEFAULT_METRIC_NS = [10, 13, 15, 17, 20];
