/** Drives the built UI against a real server on a freshly generated corpus:
 *  one sensor-day of 43,200 frames, loaded, brushed, labeled through the
 *  dialog, trained, swept onto the calendar. Runs the whole journey in order;
 *  each step builds on the one before. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { createWorkbench, type WorkbenchApp } from "../src/app";
import { deltaBarHeight } from "../src/views/model";
import { PAD, PLOT_SIZE } from "../src/views/scatter";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const SENSOR = "s00";
const DATE = "2022-01-01";

let workdir: string;
let server: ChildProcess | null = null;
let serverLog = "";
let api: ApiClient;
let app: WorkbenchApp;

const status = () => app.elements.status.textContent ?? "";
const waitForStatus = (want: string | RegExp, timeout = 60_000) =>
  vi.waitFor(
    () => {
      const s = status();
      if (typeof want === "string" ? s !== want : !want.test(s)) {
        throw new Error(`status is ${JSON.stringify(s)}; server log tail: ${serverLog.slice(-400)}`);
      }
    },
    { timeout, interval: 250 },
  );
const button = (cls: string) =>
  app.elements.status.ownerDocument.querySelector<HTMLButtonElement>(`button.${cls}`)!;

/** First square patch anchored at (x0, y0) whose frame count lands in
 *  [min, max] — keeps later labeling and training runs fast. */
function patchExtent(
  min: number,
  max: number,
  x0 = PAD,
  y0 = PAD,
): [[number, number], [number, number]] {
  let fallback: [[number, number], [number, number]] = [
    [x0, y0],
    [Math.min(x0 + 200, PLOT_SIZE), Math.min(y0 + 200, PLOT_SIZE)],
  ];
  for (let size = 30; size <= PLOT_SIZE; size += 15) {
    const extent: [[number, number], [number, number]] = [
      [x0, y0],
      [Math.min(x0 + size, PLOT_SIZE), Math.min(y0 + size, PLOT_SIZE)],
    ];
    const n = app.scatter.pick(extent).length;
    if (n >= min && n <= max) return extent;
    if (n > 0) fallback = extent;
    if (n > max) break;
  }
  return fallback;
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "sonoscope-ui-"));
  const corpus = join(workdir, "corpus");
  execFileSync(
    "sonoscope",
    ["generate", "--out", corpus, "--sensors", "1", "--days", "1", "--dim", "16", "--seed", "77", "--concepts", "siren,drill"],
    { stdio: "pipe" },
  );
  execFileSync("sonoscope", ["index", "--corpus", corpus, "--store", corpus, "--seed", "1"], {
    stdio: "pipe",
  });

  const proc = spawn(
    "sonoscope",
    ["serve", "--corpus", corpus, "--store", corpus, "--host", "127.0.0.1", "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  proc.stdout.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  proc.stderr.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  server = proc;

  await vi.waitFor(
    async () => {
      const resp = await fetch(`${BASE}/v1/health`);
      if (!resp.ok) throw new Error(`health ${resp.status}`);
    },
    { timeout: 60_000, interval: 500 },
  );

  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  api = new ApiClient(BASE);
  app = createWorkbench(root, api);
}, 180_000);

afterAll(() => {
  server?.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("workbench against a live server", () => {
  it("connects and loads a full sensor-day", async () => {
    await app.actions.init();
    expect(status()).toMatch(/^connected — sonoscope .+, 1 sensor\(s\)$/);
    expect([...app.elements.sensorSelect.options].map((o) => o.value)).toEqual([SENSOR]);

    await app.actions.loadDay(SENSOR, DATE);
    await waitForStatus(`${SENSOR} ${DATE}: 43,200 frames on the layout`, 240_000);
    expect(app.store.get().points).toHaveLength(43_200);
    expect(app.store.get().tree).not.toBeNull();
    expect(document.querySelectorAll("circle.pt")).toHaveLength(43_200);
    expect(document.querySelectorAll(".tree-node").length).toBeGreaterThan(0);
  }, 300_000);

  it("reports exactly the brushed frame count", async () => {
    const extent = patchExtent(20, 2_000);
    const expected = app.scatter.pick(extent).length;
    expect(expected).toBeGreaterThan(0);

    app.scatter.applyBrush(extent);
    await waitForStatus(`${expected.toLocaleString("en-US")} frames selected`, 120_000);

    const session = app.store.get().session!;
    const serverState = await api.session(session);
    expect(serverState.selection).toHaveLength(expected);
  }, 180_000);

  it("selects exactly a tree node's members on click", async () => {
    const tree = app.store.get().tree!;
    const node = tree.children[0] ?? tree;
    document
      .querySelector<HTMLElement>(`.tree-node[data-node-id="${node.id}"]`)!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await waitForStatus(
      `node ${node.id}: ${node.size.toLocaleString("en-US")} frames selected`,
      120_000,
    );

    const serverState = await api.session(app.store.get().session!);
    expect(serverState.selection).toHaveLength(node.size);
    expect(app.store.get().selectionSize).toBe(node.size);
  }, 180_000);

  it("refuses to train a concept that has no labels yet", async () => {
    await app.actions.trainConcept("hum");
    await vi.waitFor(() => expect(status()).toMatch(/no_positives/), { timeout: 60_000 });
  }, 120_000);

  it("round-trips a dialog annotation into the next training run", async () => {
    const extent = patchExtent(20, 2_000);
    const expected = app.scatter.pick(extent).length;
    app.scatter.applyBrush(extent);
    await waitForStatus(`${expected.toLocaleString("en-US")} frames selected`, 120_000);

    button("label-btn").click();
    expect(app.labelDialog.isOpen).toBe(true);
    document.querySelector<HTMLInputElement>("input.label-concept")!.value = "hum";
    document.querySelector<HTMLButtonElement>("button.label-apply")!.click();
    await waitForStatus(
      `labeled ${expected.toLocaleString("en-US")} frames positive for hum`,
      60_000,
    );

    button("train-btn").click();
    await waitForStatus(/^trained hum v1 — \d+ representative\(s\)$/, 240_000);

    const summary = await api.modelSummary("hum");
    expect(summary.versions).toHaveLength(1);
    expect(summary.versions[0]!.convergence_delta).toBeNull();
    const chart = app.elements.modelPanel.querySelector("svg.model-chart")!;
    expect(chart.getAttribute("data-concept")).toBe("hum");
    expect(chart.querySelector("text.model-delta")!.textContent).toBe("first");
  }, 420_000);

  it("charts the convergence deltas the server reports after retraining", async () => {
    // a second, disjoint patch labeled negative changes the prototype
    const extent = patchExtent(20, 2_000, PLOT_SIZE / 2, PLOT_SIZE / 2);
    const expected = app.scatter.pick(extent).length;
    expect(expected).toBeGreaterThan(0);
    app.scatter.applyBrush(extent);
    await waitForStatus(`${expected.toLocaleString("en-US")} frames selected`, 120_000);

    button("label-btn").click();
    document.querySelector<HTMLInputElement>("input.label-concept")!.value = "hum";
    document.querySelector<HTMLInputElement>('input[value="negative"]')!.click();
    document.querySelector<HTMLButtonElement>("button.label-apply")!.click();
    await waitForStatus(
      `labeled ${expected.toLocaleString("en-US")} frames negative for hum`,
      60_000,
    );

    button("train-btn").click();
    await waitForStatus(/^trained hum v2 — \d+ representative\(s\)$/, 240_000);

    const summary = await api.modelSummary("hum");
    expect(summary.versions).toHaveLength(2);
    const deltas = summary.versions.map((v) => v.convergence_delta ?? 0);
    expect(typeof summary.versions[1]!.convergence_delta).toBe("number");

    const maxDelta = Math.max(...deltas, 1e-12);
    const heights = [...app.elements.modelPanel.querySelectorAll("rect.model-bar")].map((r) =>
      Number(r.getAttribute("height")),
    );
    expect(heights).toEqual(deltas.map((d) => deltaBarHeight(d, maxDelta)));
  }, 420_000);

  it("sweeps the trained concept across the year calendar", async () => {
    app.elements.conceptSelect.value = "hum";
    button("sweep-btn").click();
    await waitForStatus(/^[\d,]+ hits for hum across 2022$/, 240_000);

    const cells = app.elements.calendarPanel.querySelectorAll("g.cal-cell");
    expect(cells).toHaveLength(365);
    for (const cell of [cells[0]!, cells[100]!, cells[364]!]) {
      expect(cell.querySelectorAll("rect.cal-bar")).toHaveLength(4);
    }
    // the single generated day is the only one with any mass
    const loaded = app.elements.calendarPanel.querySelector(`[data-date="${DATE}"]`)!;
    const loadedHeights = [...loaded.querySelectorAll("rect.cal-bar")].map((r) =>
      Number(r.getAttribute("height")),
    );
    expect(Math.max(...loadedHeights)).toBeGreaterThan(0);
    const quiet = app.elements.calendarPanel.querySelector('[data-date="2022-08-01"]')!;
    for (const bar of quiet.querySelectorAll("rect.cal-bar")) {
      expect(Number(bar.getAttribute("height"))).toBe(0);
    }
  }, 300_000);

  it("reprojects the selection and steers the sub-layout by the concept", async () => {
    // steering pulls positives together and pushes negatives away, so the
    // sub-layout must contain both labeled patches
    const positives = app.scatter.pick(patchExtent(20, 2_000));
    const negatives = app.scatter.pick(patchExtent(20, 2_000, PLOT_SIZE / 2, PLOT_SIZE / 2));
    const union = [...positives, ...negatives];
    await app.actions.brushRefs(union);
    await waitForStatus(`${union.length.toLocaleString("en-US")} frames selected`, 120_000);

    button("reproject-btn").click();
    await waitForStatus(`reprojected ${union.length.toLocaleString("en-US")} frames`, 240_000);
    expect(app.store.get().points).toHaveLength(union.length);

    button("steer-btn").click();
    await waitForStatus("steered layout by hum", 240_000);
    expect(app.store.get().points).toHaveLength(union.length);
    expect(app.store.get().layoutId).toMatch(/./);
  }, 420_000);
});
