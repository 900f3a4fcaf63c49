/** Model tracker: one bar per trained version, height = convergence delta
 *  (mean |likelihood change| on the labeled set versus the prior version). */

import { select } from "d3";

import type { ModelSummaryJson } from "../types";

export const CHART_W = 360;
export const CHART_H = 140;
const MARGIN = { top: 16, right: 8, bottom: 22, left: 8 };
const BAR_GAP = 6;
export const PLOT_H = CHART_H - MARGIN.top - MARGIN.bottom;

/** Bar height in px for one delta against the summary's max delta. */
export function deltaBarHeight(delta: number, maxDelta: number): number {
  if (delta <= 0 || maxDelta <= 0) return 0;
  return Math.max(1, Math.round((delta / maxDelta) * PLOT_H));
}

export function renderModelSummary(container: HTMLElement, summary: ModelSummaryJson | null): void {
  container.innerHTML = "";
  if (!summary || summary.versions.length === 0) {
    const empty = container.ownerDocument.createElement("div");
    empty.className = "model-empty";
    empty.textContent = "no trained versions yet";
    container.appendChild(empty);
    return;
  }

  const deltas = summary.versions.map((v) => v.convergence_delta ?? 0);
  const maxDelta = Math.max(...deltas, 1e-12);
  const barW = Math.max(
    8,
    Math.floor((CHART_W - MARGIN.left - MARGIN.right) / summary.versions.length) - BAR_GAP,
  );

  const svg = select(container)
    .append("svg")
    .attr("class", "model-chart")
    .attr("data-concept", summary.concept)
    .attr("width", CHART_W)
    .attr("height", CHART_H);

  const version = svg
    .selectAll("g.model-version")
    .data(summary.versions)
    .join("g")
    .attr("class", "model-version")
    .attr("data-version", (d) => d.version)
    .attr(
      "transform",
      (_d, i) => `translate(${MARGIN.left + i * (barW + BAR_GAP)},${MARGIN.top})`,
    );

  version
    .append("rect")
    .attr("class", "model-bar")
    .attr("width", barW)
    .attr("y", (d) => PLOT_H - deltaBarHeight(d.convergence_delta ?? 0, maxDelta))
    .attr("height", (d) => deltaBarHeight(d.convergence_delta ?? 0, maxDelta));

  version
    .append("text")
    .attr("class", "model-delta")
    .attr("x", barW / 2)
    .attr("y", (d) => PLOT_H - deltaBarHeight(d.convergence_delta ?? 0, maxDelta) - 4)
    .attr("text-anchor", "middle")
    .text((d) => (d.convergence_delta === null ? "first" : d.convergence_delta.toFixed(4)));

  version
    .append("text")
    .attr("class", "model-version-label")
    .attr("x", barW / 2)
    .attr("y", PLOT_H + 14)
    .attr("text-anchor", "middle")
    .text((d) => `v${d.version}`);
}
