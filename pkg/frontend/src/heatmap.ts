import { PerspectiveComponent, PerspectivesPayload } from "./types";

export type ColumnOrdering = "ensemble" | "dataset";

/**
 * Render-ready view of one rank-1 perspective: a detectors-by-points grid
 * of intensities in [0, 1], with columns ordered either by descending
 * ensemble score (outliers cluster left) or by dataset order.
 */
export interface HeatmapView {
  perspectiveIndex: number;
  detectorLabels: string[];
  memberDetectors: ReadonlySet<number>;
  columnOrder: number[]; // position -> original point index
  grid: number[][];      // grid[row][position], clipped to [0, 1]
  totalMass: number;
}

const clip01 = (value: number) => Math.min(1, Math.max(0, value));

export function orderColumns(ensemble: number[], ordering: ColumnOrdering): number[] {
  const indices = ensemble.map((_, i) => i);
  if (ordering === "dataset") {
    return indices;
  }
  // descending score, ties by ascending point index
  return indices.sort((a, b) => ensemble[b] - ensemble[a] || a - b);
}

export function buildHeatmapView(
  payload: PerspectivesPayload,
  component: PerspectiveComponent,
  ordering: ColumnOrdering = "ensemble",
): HeatmapView {
  const columnOrder = orderColumns(payload.ensemble, ordering);
  const grid = component.values.map((row) =>
    columnOrder.map((pointIndex) => clip01(row[pointIndex])));
  if (grid.length !== payload.detector_ids.length) {
    throw new Error(
      `component has ${grid.length} rows for ${payload.detector_ids.length} detectors`);
  }
  return {
    perspectiveIndex: component.component_index,
    detectorLabels: payload.detector_ids.slice(),
    memberDetectors: new Set(component.member_detectors),
    columnOrder,
    grid,
    totalMass: component.total_mass,
  };
}

export function buildAllHeatmaps(
  payload: PerspectivesPayload,
  ordering: ColumnOrdering = "ensemble",
): HeatmapView[] {
  return payload.components.map((component) =>
    buildHeatmapView(payload, component, ordering));
}

const intensityColor = (value: number) => {
  // white -> deep blue ramp
  const channel = Math.round(255 * (1 - clip01(value)));
  return `rgb(${channel}, ${channel}, 255)`;
};

/** DOM renderer: one table per perspective, cells carry hover tooltips. */
export function renderHeatmap(view: HeatmapView, container: HTMLElement): HTMLElement {
  const doc = container.ownerDocument;
  const section = doc.createElement("section");
  section.className = "heatmap";

  const title = doc.createElement("h3");
  title.textContent =
    `Perspective ${view.perspectiveIndex} ` +
    `(${view.memberDetectors.size} detectors, mass ${view.totalMass.toFixed(2)})`;
  section.appendChild(title);

  const table = doc.createElement("table");
  table.className = "heatmap-grid";
  view.grid.forEach((row, r) => {
    const tr = doc.createElement("tr");
    const label = doc.createElement("th");
    label.textContent = view.detectorLabels[r];
    if (view.memberDetectors.has(r)) {
      label.className = "member";
    }
    tr.appendChild(label);
    row.forEach((value, position) => {
      const td = doc.createElement("td");
      td.style.backgroundColor = intensityColor(value);
      td.title = `${view.detectorLabels[r]} / point ${view.columnOrder[position]}: ` +
        value.toFixed(3);
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  section.appendChild(table);

  const legend = doc.createElement("div");
  legend.className = "legend";
  legend.textContent = "intensity 0.0";
  const ramp = doc.createElement("span");
  ramp.className = "legend-ramp";
  legend.appendChild(ramp);
  const high = doc.createElement("span");
  high.textContent = "1.0";
  legend.appendChild(high);
  section.appendChild(legend);

  container.appendChild(section);
  return section;
}
