// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { buildComparisonTable, renderComparison, topNOverlap } from "../src/compare";
import { MetricsPayload } from "../src/types";

const labeledMetrics = (offset: number): MetricsPayload => ({
  labels: true,
  table: Object.fromEntries([10, 13, 15, 17, 20].map((n) => [
    String(n),
    { precision: 0.5 + offset, recall: 0.4 + offset, f: 0.44 + offset },
  ])),
});

describe("buildComparisonTable", () => {
  it("produces one row per default N value for two runs", () => {
    const table = buildComparisonTable([
      { runId: "aaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
      { runId: "bbb", dataset: "ds0.csv", metrics: labeledMetrics(0.1) },
    ]);
    expect(table.nValues).toEqual([10, 13, 15, 17, 20]);
    expect(table.rows.length).toBe(5);
    expect(table.rows[0].cells.length).toBe(2);
    expect(table.datasetMismatch).toBe(false);
    expect(table.unlabeledRuns).toEqual([]);
  });

  it("flags unlabeled runs instead of fabricating numbers", () => {
    const table = buildComparisonTable([
      { runId: "aaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
      { runId: "bbb", dataset: "ds0.csv", metrics: { labels: false, table: null } },
    ]);
    expect(table.unlabeledRuns).toEqual(["bbb"]);
    expect(table.rows[0].cells[1].row).toBeNull();
  });

  it("warns on dataset mismatch", () => {
    const table = buildComparisonTable([
      { runId: "aaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
      { runId: "bbb", dataset: "ds1.csv", metrics: labeledMetrics(0) },
    ]);
    expect(table.datasetMismatch).toBe(true);
  });

  it("requires at least two runs", () => {
    expect(() => buildComparisonTable([
      { runId: "aaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
    ])).toThrow(/at least two/);
  });
});

describe("topNOverlap", () => {
  it("is 100 percent for identical ensembles", () => {
    const scores = [0.9, 0.1, 0.5, 0.7];
    const overlap = topNOverlap(scores, scores.slice(), 3);
    expect(overlap.percent).toBe(100);
    expect(overlap.shared.sort()).toEqual([0, 2, 3]);
  });

  it("measures partial overlap", () => {
    const overlap = topNOverlap([0.9, 0.8, 0.1, 0.0], [0.0, 0.9, 0.8, 0.1], 2);
    expect(overlap.shared).toEqual([1]);
    expect(overlap.percent).toBe(50);
  });

  it("rejects mismatched point counts", () => {
    expect(() => topNOverlap([1, 2], [1, 2, 3], 2)).toThrow(/different point counts/);
  });
});

describe("renderComparison", () => {
  it("renders metric columns for both runs across the default Ns", () => {
    const container = document.createElement("div");
    const table = buildComparisonTable([
      { runId: "aaaaaaaaaaaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
      { runId: "bbbbbbbbbbbb", dataset: "ds0.csv", metrics: labeledMetrics(0.1) },
    ]);
    const section = renderComparison(table, container);
    const header = section.querySelectorAll("tr")[0];
    // N column + 3 metrics x 2 runs
    expect(header.querySelectorAll("th").length).toBe(1 + 6);
    const body = section.querySelectorAll("tr");
    expect(body.length).toBe(1 + 5);
    expect(body[1].querySelectorAll("td")[0].textContent).toBe("10");
  });

  it("shows the no-labels notice", () => {
    const container = document.createElement("div");
    const table = buildComparisonTable([
      { runId: "aaa", dataset: "ds0.csv", metrics: labeledMetrics(0) },
      { runId: "bbb", dataset: "ds0.csv", metrics: { labels: false, table: null } },
    ]);
    const section = renderComparison(table, container);
    expect(section.querySelector(".no-labels")!.textContent).toContain("bbb");
  });
});
