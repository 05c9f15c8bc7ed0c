import { ApiClient } from "./api";
import { buildAllHeatmaps, ColumnOrdering, renderHeatmap } from "./heatmap";
import { buildComparisonTable, renderComparison, RunMetrics, topNOverlap } from "./compare";
import { PerspectivesPayload, RunSummary } from "./types";

/**
 * Single-page exploration client. Pure consumer of the HTTP API: every
 * number on screen is server-provided; the client only renders and sorts.
 * Tried g values are kept per run so the analyst can flip between
 * factorizations (each flip is a server-side PATCH over the stored score
 * matrix; detectors never re-execute).
 */
export class ExplorerApp {
  private readonly gHistory = new Map<string, number[]>();
  private ordering: ColumnOrdering = "ensemble";

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async init(): Promise<void> {
    const doc = this.root.ownerDocument;
    this.root.innerHTML = "";
    const form = doc.createElement("form");
    form.id = "run-form";
    form.innerHTML = `
      <select name="dataset" id="dataset"></select>
      <label>budget <input name="t_total" id="t_total" value="0.5"></label>
      <label>perspectives <input name="g" id="g" value="1"></label>
      <button type="submit">explore</button>
      <span id="form-status"></span>
    `;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitFromForm();
    });
    this.root.appendChild(form);

    const status = doc.createElement("div");
    status.id = "run-status";
    this.root.appendChild(status);
    const views = doc.createElement("div");
    views.id = "perspective-views";
    this.root.appendChild(views);
    const compare = doc.createElement("div");
    compare.id = "compare-view";
    this.root.appendChild(compare);

    const datasets = await this.api.listDatasets();
    const select = form.querySelector("#dataset") as HTMLSelectElement;
    for (const name of datasets) {
      const option = doc.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
  }

  private field(id: string): HTMLInputElement {
    return this.root.querySelector(`#${id}`) as HTMLInputElement;
  }

  private setStatus(text: string): void {
    const element = this.root.querySelector("#run-status");
    if (element) {
      element.textContent = text;
    }
  }

  async submitFromForm(): Promise<RunSummary | null> {
    const dataset = (this.root.querySelector("#dataset") as HTMLSelectElement).value;
    const budget = Number(this.field("t_total").value);
    const g = Number(this.field("g").value);
    const statusField = this.root.querySelector("#form-status") as HTMLElement;
    if (!Number.isFinite(budget) || budget <= 0) {
      statusField.textContent = "budget must be a positive number";
      return null;
    }
    if (!Number.isInteger(g) || g < 1) {
      statusField.textContent = "perspective count must be a positive integer";
      return null;
    }
    statusField.textContent = "";
    return this.submitRun(dataset, budget, g);
  }

  /** POST the run, poll to a terminal state, then render its outcome. */
  async submitRun(dataset: string, budget: number, g: number): Promise<RunSummary> {
    const { run_id } = await this.api.submitRun({
      dataset, t_total: budget, g, label_column: "label",
    });
    this.setStatus(`run ${run_id}: queued`);
    const summary = await this.api.pollRun(run_id, {
      intervalMs: 300,
      onUpdate: (update) => this.setStatus(`run ${run_id}: ${update.status}`),
    });
    if (summary.status === "completed") {
      this.gHistory.set(run_id, [g]);
      await this.renderPerspectives(run_id);
    } else if (summary.status === "infeasible") {
      const reasons = (summary.infeasibility ?? []).join("; ");
      this.setStatus(`run ${run_id}: infeasible - ${reasons}`);
    } else {
      this.setStatus(`run ${run_id}: failed - ${summary.error ?? "unknown"}`);
    }
    return summary;
  }

  setColumnOrdering(ordering: ColumnOrdering): void {
    this.ordering = ordering;
  }

  async renderPerspectives(runId: string): Promise<PerspectivesPayload> {
    const payload = await this.api.getPerspectives(runId);
    this.paintPerspectives(runId, payload);
    return payload;
  }

  private paintPerspectives(runId: string, payload: PerspectivesPayload): void {
    const container = this.root.querySelector("#perspective-views") as HTMLElement;
    container.innerHTML = "";
    for (const view of buildAllHeatmaps(payload, this.ordering)) {
      renderHeatmap(view, container);
    }
    this.setStatus(`run ${runId}: completed (${payload.g} perspectives)`);
  }

  /** Server-side re-factorization; history records every g the analyst tried. */
  async adjustG(runId: string, g: number): Promise<PerspectivesPayload> {
    const payload = await this.api.patchPerspectives(runId, g);
    const history = this.gHistory.get(runId) ?? [];
    history.push(g);
    this.gHistory.set(runId, history);
    this.paintPerspectives(runId, payload);
    return payload;
  }

  triedGValues(runId: string): number[] {
    return (this.gHistory.get(runId) ?? []).slice();
  }

  /** Side-by-side metric tables plus top-N outlier overlap for two runs. */
  async compareRuns(runIds: string[], overlapN = 10): Promise<void> {
    const entries: RunMetrics[] = [];
    const ensembles: number[][] = [];
    for (const runId of runIds) {
      const summary = await this.api.getRun(runId);
      entries.push({
        runId,
        dataset: summary.dataset,
        metrics: await this.api.getMetrics(runId),
      });
      ensembles.push(summary.result?.ensemble ?? []);
    }
    const container = this.root.querySelector("#compare-view") as HTMLElement;
    container.innerHTML = "";
    renderComparison(buildComparisonTable(entries), container);
    if (ensembles.length === 2 && ensembles[0].length === ensembles[1].length
        && ensembles[0].length > 0) {
      const overlap = topNOverlap(ensembles[0], ensembles[1], overlapN);
      const doc = this.root.ownerDocument;
      const note = doc.createElement("p");
      note.className = "overlap";
      note.textContent =
        `top-${overlap.n} overlap: ${overlap.percent.toFixed(0)}% ` +
        `(${overlap.shared.length} shared points)`;
      container.appendChild(note);
    }
  }
}
