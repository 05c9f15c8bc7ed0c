import { DEFAULT_METRIC_NS, MetricsPayload, MetricRow } from "./types";

export interface RunMetrics {
  runId: string;
  dataset: string;
  metrics: MetricsPayload;
}

export interface ComparisonCell {
  runId: string;
  row: MetricRow | null; // null when the run lacks that N or has no labels
}

export interface ComparisonTable {
  nValues: number[];
  runIds: string[];
  rows: { n: number; cells: ComparisonCell[] }[];
  unlabeledRuns: string[];
  datasetMismatch: boolean;
}

/**
 * Side-by-side precision/recall/F table for two or more runs. Runs without
 * labels surface in `unlabeledRuns` so the view can show a notice instead
 * of empty cells; differing datasets only warn, never block.
 */
export function buildComparisonTable(
  runs: RunMetrics[],
  nValues: number[] = DEFAULT_METRIC_NS,
): ComparisonTable {
  if (runs.length < 2) {
    throw new Error("comparison needs at least two runs");
  }
  const datasets = new Set(runs.map((r) => r.dataset));
  const unlabeled = runs.filter((r) => !r.metrics.labels).map((r) => r.runId);
  const rows = nValues.map((n) => ({
    n,
    cells: runs.map((run) => ({
      runId: run.runId,
      row: run.metrics.table?.[String(n)] ?? null,
    })),
  }));
  return {
    nValues: nValues.slice(),
    runIds: runs.map((r) => r.runId),
    rows,
    unlabeledRuns: unlabeled,
    datasetMismatch: datasets.size > 1,
  };
}

export interface OverlapReport {
  n: number;
  shared: number[];
  percent: number;
}

/** Overlap of the top-N points of two server-provided ensembles. */
export function topNOverlap(a: number[], b: number[], n: number): OverlapReport {
  if (a.length !== b.length) {
    throw new Error("ensembles cover different point counts");
  }
  const bounded = Math.min(n, a.length);
  const top = (scores: number[]) =>
    scores
      .map((score, index) => ({ score, index }))
      .sort((x, y) => y.score - x.score || x.index - y.index)
      .slice(0, bounded)
      .map((entry) => entry.index);
  const setB = new Set(top(b));
  const shared = top(a).filter((index) => setB.has(index));
  return { n: bounded, shared, percent: bounded === 0 ? 0 : (100 * shared.length) / bounded };
}

/** DOM renderer for a comparison table. */
export function renderComparison(table: ComparisonTable, container: HTMLElement): HTMLElement {
  const doc = container.ownerDocument;
  const section = doc.createElement("section");
  section.className = "comparison";

  if (table.datasetMismatch) {
    const warning = doc.createElement("p");
    warning.className = "warning";
    warning.textContent = "Warning: runs are on different datasets.";
    section.appendChild(warning);
  }
  if (table.unlabeledRuns.length > 0) {
    const notice = doc.createElement("p");
    notice.className = "no-labels";
    notice.textContent =
      `No labels for run(s) ${table.unlabeledRuns.join(", ")}; ` +
      "metrics unavailable.";
    section.appendChild(notice);
  }

  const element = doc.createElement("table");
  element.className = "metric-table";
  const head = doc.createElement("tr");
  head.appendChild(doc.createElement("th")).textContent = "N";
  for (const runId of table.runIds) {
    for (const metric of ["P", "R", "F"]) {
      const th = doc.createElement("th");
      th.textContent = `${metric}@N (${runId.slice(0, 8)})`;
      head.appendChild(th);
    }
  }
  element.appendChild(head);
  for (const row of table.rows) {
    const tr = doc.createElement("tr");
    tr.appendChild(doc.createElement("td")).textContent = String(row.n);
    for (const cell of row.cells) {
      for (const key of ["precision", "recall", "f"] as const) {
        const td = doc.createElement("td");
        td.textContent = cell.row ? cell.row[key].toFixed(3) : "-";
        tr.appendChild(td);
      }
    }
    element.appendChild(tr);
  }
  section.appendChild(element);
  container.appendChild(section);
  return section;
}
