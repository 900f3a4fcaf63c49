import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { createWorkbench, type WorkbenchApp } from "../src/app";
import { PAD, PLOT_SIZE } from "../src/views/scatter";
import { PLOT_H } from "../src/views/model";
import type { DayLoadResult, ModelSummaryJson } from "../src/types";
import { FakeBackend, fakeTree, gridPoints, makeYearCells } from "./fakes";

const SPAN = PLOT_SIZE - 2 * PAD;
const px = (x: number) => PAD + (x / 9) * SPAN;
const py = (y: number) => PLOT_SIZE - PAD - (y / 9) * SPAN;
// rectangle strictly containing grid columns 2..4 and rows 3..5: 9 frames
const NINE_FRAMES: [[number, number], [number, number]] = [
  [px(1.9), py(5.1)],
  [px(4.1), py(2.9)],
];

function summaryV1(concept: string): ModelSummaryJson {
  return {
    concept,
    versions: [
      {
        version: 1,
        created_at: "2022-06-01T00:00:00+00:00",
        convergence_delta: null,
        representatives: [{ sensor: "s00", clip_start: 1_640_995_200, frame_index: 0 }],
      },
    ],
  };
}

describe("workbench", () => {
  let backend: FakeBackend;
  let app: WorkbenchApp;
  let root: HTMLElement;

  const status = () => app.elements.status.textContent;
  const waitForStatus = (expected: string) =>
    vi.waitFor(() => expect(status()).toBe(expected), { timeout: 3000 });
  const button = (cls: string) => root.querySelector<HTMLButtonElement>(`button.${cls}`)!;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.appendChild(root);

    const points = gridPoints(100);
    const { tree, members } = fakeTree(points);
    const day: DayLoadResult = {
      session: "sess-1",
      sensor: "s00",
      date: "2022-01-01",
      frame_count: points.length,
      layout: { layout_id: "lay-day", parent: null, params: {}, points },
      tree,
    };
    backend = new FakeBackend({ day, nodeMembers: members, concepts: ["siren"] });
    app = createWorkbench(root, new ApiClient("", backend.fetch));
  });

  async function loadDay(): Promise<void> {
    await app.actions.init();
    await app.actions.loadDay("s00", "2022-01-01");
    await waitForStatus("s00 2022-01-01: 100 frames on the layout");
  }

  it("connects on init and fills the sensor and concept pickers", async () => {
    await app.actions.init();
    expect(status()).toBe("connected — sonoscope 0.1.0-fake, 1 sensor(s)");
    const sensorOptions = [...app.elements.sensorSelect.options].map((o) => o.value);
    expect(sensorOptions).toEqual(["s00"]);
    const conceptOptions = [...app.elements.conceptSelect.options].map((o) => o.value);
    expect(conceptOptions).toEqual(["siren"]);
  });

  it("loads a day onto the layout view and mixture tree", async () => {
    await loadDay();
    expect(root.querySelectorAll("circle.pt")).toHaveLength(100);
    expect(root.querySelectorAll(".tree-node")).toHaveLength(5);
    expect(app.store.get().session).toBe("sess-1");
  });

  it("reports the brushed frame count acknowledged by the server", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");

    const selection = backend.callsTo("/v1/selection").at(-1)!.body as {
      session: string;
      refs: unknown[];
    };
    expect(selection.session).toBe("sess-1");
    expect(selection.refs).toHaveLength(9);
    expect(root.querySelectorAll("circle.pt.sel")).toHaveLength(9);
  });

  it("clears the selection when the brush is dismissed", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");
    app.scatter.applyBrush(null);
    await waitForStatus("selection cleared");
    expect(root.querySelectorAll("circle.pt.sel")).toHaveLength(0);
  });

  it("selects exactly a node's members when its tree row is clicked", async () => {
    await loadDay();
    root
      .querySelector<HTMLElement>('.tree-node[data-node-id="2"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await waitForStatus("node 2: 67 frames selected");

    const call = backend.callsTo("/v1/selection").at(-1)!.body as Record<string, unknown>;
    expect(call).toMatchObject({ session: "sess-1", node: 2 });
    expect(call.refs).toBeUndefined();
    expect(root.querySelectorAll("circle.pt.sel")).toHaveLength(67);
    expect(app.store.get().selectionSize).toBe(67);
  });

  it("surfaces an unknown node id as a typed error in the status bar", async () => {
    await loadDay();
    await app.actions.selectTreeNode(99);
    await waitForStatus("error — unknown_node: no node 99");
  });

  it("refuses frame selection before a day is loaded", async () => {
    await app.actions.init();
    await app.actions.brushRefs([{ sensor: "s00", clip_start: 0, frame_index: 0 }]);
    expect(status()).toBe("load a day before selecting");
    expect(backend.callsTo("/v1/selection")).toHaveLength(0);
  });

  it("round-trips a labeling-dialog annotation to the server", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");

    button("label-btn").click();
    expect(app.labelDialog.isOpen).toBe(true);
    expect(root.querySelector(".label-count")!.textContent).toBe("9 frames selected");

    root.querySelector<HTMLInputElement>("input.label-concept")!.value = "jackhammer";
    root.querySelector<HTMLButtonElement>("button.label-apply")!.click();
    await waitForStatus("labeled 9 frames positive for jackhammer");

    expect(backend.annotations).toHaveLength(1);
    const annotation = backend.annotations[0]!;
    expect(annotation.concept).toBe("jackhammer");
    expect(annotation.polarity).toBe("positive");
    expect(annotation.refs).toHaveLength(9);
    // the new concept becomes available in the picker
    const options = [...app.elements.conceptSelect.options].map((o) => o.value);
    expect(options).toEqual(["siren", "jackhammer"]);
  });

  it("trains the labeled concept and charts the new version", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");
    button("label-btn").click();
    root.querySelector<HTMLInputElement>("input.label-concept")!.value = "jackhammer";
    root.querySelector<HTMLButtonElement>("button.label-apply")!.click();
    await waitForStatus("labeled 9 frames positive for jackhammer");

    backend.summaries.jackhammer = summaryV1("jackhammer");
    backend.concepts = ["siren", "jackhammer"];
    button("train-btn").click();
    await waitForStatus("trained jackhammer v1 — 1 representative(s)");

    const trainBody = backend.callsTo("/v1/prototype/train")[0]!.body as { concept: string };
    expect(trainBody.concept).toBe("jackhammer");
    const chart = app.elements.modelPanel.querySelector("svg.model-chart")!;
    expect(chart.getAttribute("data-concept")).toBe("jackhammer");
    expect(chart.querySelectorAll("g.model-version")).toHaveLength(1);
  });

  it("updates the model chart from fresh server deltas on retrain", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");
    button("label-btn").click();
    root.querySelector<HTMLInputElement>("input.label-concept")!.value = "jackhammer";
    root.querySelector<HTMLButtonElement>("button.label-apply")!.click();
    await waitForStatus("labeled 9 frames positive for jackhammer");

    backend.summaries.jackhammer = summaryV1("jackhammer");
    button("train-btn").click();
    await waitForStatus("trained jackhammer v1 — 1 representative(s)");

    const v2 = summaryV1("jackhammer");
    v2.versions.push({
      version: 2,
      created_at: "2022-06-02T00:00:00+00:00",
      convergence_delta: 0.08,
      representatives: v2.versions[0]!.representatives,
    });
    backend.summaries.jackhammer = v2;
    button("train-btn").click();
    await waitForStatus("trained jackhammer v2 — 1 representative(s)");

    const heights = [...app.elements.modelPanel.querySelectorAll("rect.model-bar")].map((r) =>
      Number(r.getAttribute("height")),
    );
    expect(heights).toEqual([0, PLOT_H]);
  });

  it("shades the year calendar from a prototype sweep", async () => {
    backend.hits = {
      source: { concept: "siren" },
      score: "prototype_likelihood",
      hits: [{ sensor: "s00", clip_start: 1_654_819_200, frame_index: 4, score: 0.93 }],
    };
    backend.calendar = {
      year: 2022,
      cells: makeYearCells(2022, (_d, i) => [i % 3, 1, 0, 2]),
    };
    await app.actions.init();
    button("sweep-btn").click();
    await waitForStatus("1 hits for siren across 2022");

    const cells = app.elements.calendarPanel.querySelectorAll("g.cal-cell");
    expect(cells).toHaveLength(365);
    for (const cell of [cells[0]!, cells[180]!, cells[364]!]) {
      expect(cell.querySelectorAll("rect.cal-bar")).toHaveLength(4);
    }
    expect(backend.callsTo("/v1/calendar")[0]!.query).toBe("?year=2022&query_id=q-1");
  });

  it("loads the day picked on the calendar", async () => {
    backend.hits = {
      source: { concept: "siren" },
      score: "prototype_likelihood",
      hits: [{ sensor: "s00", clip_start: 1_654_819_200, frame_index: 4, score: 0.93 }],
    };
    backend.calendar = { year: 2022, cells: makeYearCells(2022, () => [1, 1, 1, 1]) };
    await app.actions.init();
    button("sweep-btn").click();
    await waitForStatus("1 hits for siren across 2022");

    app.elements.calendarPanel
      .querySelector<SVGGElement>('[data-date="2022-01-01"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await waitForStatus("s00 2022-01-01: 100 frames on the layout");
    expect(app.elements.dateInput.value).toBe("2022-01-01");
  });

  it("reprojects the current selection into a fresh layout", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");
    button("reproject-btn").click();
    await waitForStatus("reprojected 9 frames");
    expect(root.querySelectorAll("circle.pt")).toHaveLength(9);
    expect(app.store.get().layoutId).not.toBe("lay-day");
  });

  it("removes the selection and relayouts the remainder", async () => {
    await loadDay();
    app.scatter.applyBrush(NINE_FRAMES);
    await waitForStatus("9 frames selected");
    button("remove-btn").click();
    await waitForStatus("removed selection; 91 frames remain");
    expect(root.querySelectorAll("circle.pt")).toHaveLength(91);
    expect(app.store.get().selectionSize).toBe(0);
  });

  it("guards reproject and remove behind a non-empty selection", async () => {
    await loadDay();
    button("reproject-btn").click();
    await waitForStatus("select frames before reprojecting");
    button("remove-btn").click();
    await waitForStatus("select frames to remove first");
    expect(backend.callsTo("/v1/layout/reproject")).toHaveLength(0);
    expect(backend.callsTo("/v1/layout/remove")).toHaveLength(0);
  });

  it("steers the layout by the picked concept", async () => {
    await loadDay();
    button("steer-btn").click();
    await waitForStatus("steered layout by siren");
    const body = backend.callsTo("/v1/layout/steer")[0]!.body as Record<string, unknown>;
    expect(body).toMatchObject({ session: "sess-1", concept: "siren", attract: 2, repel: 1.2 });
  });
});
