/** Assembles the workbench: toolbar, calendar, layout view, mixture tree,
 *  model tracker, labeling dialog — all state flows through one store and
 *  every data access goes through the HTTP client. */

import { ApiClient, ApiError } from "./api";
import { WorkbenchStore } from "./state";
import {
  keyToRef,
  refKey,
  type DayLoadResult,
  type FrameRefJson,
  type ModelSummaryJson,
  type RefKey,
  type TrainResultJson,
} from "./types";
import { renderCalendar } from "./views/calendar";
import { LabelDialog, type Polarity } from "./views/label";
import { renderModelSummary } from "./views/model";
import { ScatterView } from "./views/scatter";
import { renderTree } from "./views/tree";

export interface WorkbenchActions {
  init(): Promise<void>;
  loadDay(sensor: string, date: string): Promise<void>;
  brushRefs(refs: FrameRefJson[]): Promise<void>;
  clearSelection(): Promise<void>;
  selectTreeNode(nodeId: number): Promise<void>;
  annotateSelection(concept: string, polarity: Polarity): Promise<void>;
  trainConcept(concept: string, seed?: number): Promise<void>;
  sweepConcept(concept: string): Promise<void>;
  reprojectSelection(): Promise<void>;
  removeSelection(): Promise<void>;
  steerByConcept(concept: string): Promise<void>;
}

export interface WorkbenchApp {
  api: ApiClient;
  store: WorkbenchStore;
  actions: WorkbenchActions;
  scatter: ScatterView;
  labelDialog: LabelDialog;
  elements: {
    status: HTMLElement;
    calendarPanel: HTMLElement;
    treePanel: HTMLElement;
    modelPanel: HTMLElement;
    sensorSelect: HTMLSelectElement;
    dateInput: HTMLInputElement;
    conceptSelect: HTMLSelectElement;
  };
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

export function createWorkbench(root: HTMLElement, api: ApiClient): WorkbenchApp {
  const doc = root.ownerDocument;
  const store = new WorkbenchStore();

  // --- static shell -------------------------------------------------------
  const shell = el(doc, "div", "wb");
  const toolbar = el(doc, "header", "wb-toolbar");
  const sensorSelect = el(doc, "select", "sensor-select");
  const dateInput = el(doc, "input", "date-input");
  dateInput.type = "date";
  const loadButton = el(doc, "button", "load-day-btn", "Load day");
  const conceptSelect = el(doc, "select", "concept-select");
  const labelButton = el(doc, "button", "label-btn", "Label…");
  const trainButton = el(doc, "button", "train-btn", "Train");
  const sweepButton = el(doc, "button", "sweep-btn", "Sweep corpus");
  const reprojectButton = el(doc, "button", "reproject-btn", "Reproject selection");
  const removeButton = el(doc, "button", "remove-btn", "Remove selection");
  const steerButton = el(doc, "button", "steer-btn", "Steer by concept");
  toolbar.append(
    sensorSelect,
    dateInput,
    loadButton,
    conceptSelect,
    labelButton,
    trainButton,
    sweepButton,
    reprojectButton,
    removeButton,
    steerButton,
  );

  const body = el(doc, "div", "wb-body");
  const calendarPanel = el(doc, "section", "panel calendar-panel");
  const scatterPanel = el(doc, "section", "panel scatter-panel");
  const treePanel = el(doc, "section", "panel tree-panel");
  const modelPanel = el(doc, "section", "panel model-panel");
  body.append(calendarPanel, scatterPanel, treePanel, modelPanel);

  const status = el(doc, "footer", "status-bar", "ready");
  shell.append(toolbar, body, status);
  root.appendChild(shell);

  // --- views --------------------------------------------------------------
  const scatter = new ScatterView(scatterPanel, {
    onBrush: (refs) => void actions.brushRefs(refs),
    onClear: () => void actions.clearSelection(),
  });

  const labelDialog = new LabelDialog(root, {
    onSubmit: (concept, polarity) => void actions.annotateSelection(concept, polarity),
  });

  // --- store-driven rendering ---------------------------------------------
  let renderedPoints: unknown = null;
  let renderedTree: unknown = null;
  let renderedCalendar: unknown = null;
  let renderedSummary: unknown = null;
  let renderedConcepts = "";

  store.subscribe((s) => {
    status.textContent = s.status;
    for (const button of [
      loadButton,
      labelButton,
      trainButton,
      sweepButton,
      reprojectButton,
      removeButton,
      steerButton,
    ]) {
      button.disabled = s.busy;
    }

    if (s.points !== renderedPoints) {
      renderedPoints = s.points;
      scatter.render(s.points, s.selection);
    } else {
      scatter.setHighlight(s.selection);
    }
    if (s.tree !== renderedTree) {
      renderedTree = s.tree;
      renderTree(treePanel, s.tree, { onSelectNode: (id) => void actions.selectTreeNode(id) });
    }
    if (s.calendar !== renderedCalendar) {
      renderedCalendar = s.calendar;
      if (s.calendar) {
        renderCalendar(calendarPanel, s.calendar, {
          onPickDay: (date) => {
            dateInput.value = date;
            const sensor = sensorSelect.value || s.sensor;
            if (sensor) void actions.loadDay(sensor, date);
          },
        });
      } else {
        calendarPanel.innerHTML = "";
        calendarPanel.appendChild(
          el(doc, "div", "calendar-empty", "sweep a concept to shade the year"),
        );
      }
    }
    if (s.modelSummary !== renderedSummary) {
      renderedSummary = s.modelSummary;
      renderModelSummary(modelPanel, s.modelSummary);
    }
    const conceptsKey = s.concepts.join("|");
    if (conceptsKey !== renderedConcepts) {
      renderedConcepts = conceptsKey;
      conceptSelect.innerHTML = "";
      for (const concept of s.concepts) {
        const option = doc.createElement("option");
        option.value = concept;
        option.textContent = concept;
        conceptSelect.appendChild(option);
      }
    }
  });

  // --- actions --------------------------------------------------------------
  async function guarded(stage: string, work: () => Promise<void>): Promise<void> {
    store.update({ busy: true, status: stage });
    try {
      await work();
    } catch (err) {
      store.update({ status: `error — ${errorText(err)}` });
    } finally {
      store.update({ busy: false });
    }
  }

  async function refreshSelectionHighlight(session: string): Promise<Set<RefKey>> {
    const state = await api.session(session);
    return new Set(state.selection.map(refKey));
  }

  const actions: WorkbenchActions = {
    async init() {
      await guarded("connecting…", async () => {
        const health = await api.health();
        const sensors = await api.sensors();
        sensorSelect.innerHTML = "";
        for (const sensor of sensors) {
          const option = doc.createElement("option");
          option.value = sensor.id;
          option.textContent = `${sensor.id} — ${sensor.name}`;
          sensorSelect.appendChild(option);
        }
        const known = await api.prototypes();
        store.update({
          concepts: known.concepts,
          status: `connected — sonoscope ${health.version}, ${sensors.length} sensor(s)`,
        });
      });
    },

    async loadDay(sensor: string, date: string) {
      await guarded(`loading ${sensor} ${date}…`, async () => {
        const result: DayLoadResult = await api.loadDayAndWait(
          sensor,
          date,
          store.get().session ?? undefined,
        );
        store.update({
          session: result.session,
          sensor: result.sensor,
          date: result.date,
          layoutId: result.layout.layout_id,
          points: result.layout.points,
          tree: result.tree,
          selection: new Set(),
          selectionSize: 0,
          status: `${result.sensor} ${result.date}: ${result.frame_count.toLocaleString("en-US")} frames on the layout`,
        });
      });
    },

    async brushRefs(refs: FrameRefJson[]) {
      const session = store.get().session;
      if (!session) {
        store.update({ status: "load a day before selecting" });
        return;
      }
      await guarded("selecting…", async () => {
        const ack = await api.selectRefs(session, refs);
        store.update({
          selection: new Set(refs.map(refKey)),
          selectionSize: ack.size,
          status: `${ack.size.toLocaleString("en-US")} frames selected`,
        });
      });
    },

    async clearSelection() {
      const session = store.get().session;
      if (!session) return;
      await guarded("clearing selection…", async () => {
        await api.selectRefs(session, []);
        store.update({ selection: new Set(), selectionSize: 0, status: "selection cleared" });
      });
    },

    async selectTreeNode(nodeId: number) {
      const session = store.get().session;
      if (!session) {
        store.update({ status: "load a day before selecting" });
        return;
      }
      await guarded(`selecting node ${nodeId}…`, async () => {
        const ack = await api.selectNode(session, nodeId);
        const keys = await refreshSelectionHighlight(session);
        store.update({
          selection: keys,
          selectionSize: ack.size,
          status: `node ${nodeId}: ${ack.size.toLocaleString("en-US")} frames selected`,
        });
      });
    },

    async annotateSelection(concept: string, polarity: Polarity) {
      const s = store.get();
      if (!s.session || s.selection.size === 0) {
        store.update({ status: "select frames before labeling" });
        return;
      }
      const refs = [...s.selection].map(keyToRef);
      await guarded("labeling…", async () => {
        await api.annotate("workbench", concept, polarity, refs);
        const concepts = s.concepts.includes(concept) ? s.concepts : [...s.concepts, concept];
        store.update({
          concepts,
          activeConcept: concept,
          status: `labeled ${refs.length.toLocaleString("en-US")} frames ${polarity} for ${concept}`,
        });
      });
    },

    async trainConcept(concept: string, seed?: number) {
      await guarded(`training ${concept}…`, async () => {
        const started = await api.train(concept, seed === undefined ? {} : { seed });
        const job = await api.pollJob(started.job);
        if (job.status !== "done") {
          const reason = job.error ? `${job.error.code}: ${job.error.message}` : job.status;
          store.update({ status: `training failed — ${reason}` });
          return;
        }
        const result = job.result as TrainResultJson;
        const summary: ModelSummaryJson = await api.modelSummary(concept);
        const known = await api.prototypes();
        store.update({
          concepts: known.concepts,
          activeConcept: concept,
          modelSummary: summary,
          status: `trained ${concept} v${result.version} — ${result.representatives.length} representative(s)`,
        });
      });
    },

    async sweepConcept(concept: string) {
      await guarded(`sweeping ${concept}…`, async () => {
        const { hits, queryId } = await api.queryPrototype(concept, 100_000);
        if (hits.hits.length === 0) {
          store.update({ calendar: null, status: `no frames matched ${concept}` });
          return;
        }
        const year = new Date(hits.hits[0]!.clip_start * 1000).getUTCFullYear();
        const calendar = await api.calendar(year, { queryId });
        store.update({
          activeConcept: concept,
          calendar,
          status: `${hits.hits.length.toLocaleString("en-US")} hits for ${concept} across ${year}`,
        });
      });
    },

    async reprojectSelection() {
      const s = store.get();
      if (!s.session || s.selectionSize === 0) {
        store.update({ status: "select frames before reprojecting" });
        return;
      }
      await guarded("reprojecting…", async () => {
        const layout = await api.reproject(s.session!);
        store.update({
          layoutId: layout.layout_id,
          points: layout.points,
          status: `reprojected ${layout.points.length.toLocaleString("en-US")} frames`,
        });
      });
    },

    async removeSelection() {
      const s = store.get();
      if (!s.session || s.selectionSize === 0) {
        store.update({ status: "select frames to remove first" });
        return;
      }
      await guarded("removing…", async () => {
        const layout = await api.removeAndReproject(s.session!);
        store.update({
          layoutId: layout.layout_id,
          points: layout.points,
          selection: new Set(),
          selectionSize: 0,
          status: `removed selection; ${layout.points.length.toLocaleString("en-US")} frames remain`,
        });
      });
    },

    async steerByConcept(concept: string) {
      const session = store.get().session;
      if (!session) {
        store.update({ status: "load a day before steering" });
        return;
      }
      await guarded(`steering by ${concept}…`, async () => {
        const layout = await api.steer(session, { concept, attract: 2.0, repel: 1.2 });
        store.update({
          layoutId: layout.layout_id,
          points: layout.points,
          status: `steered layout by ${concept}`,
        });
      });
    },
  };

  // --- toolbar wiring -------------------------------------------------------
  loadButton.addEventListener("click", () => {
    if (sensorSelect.value && dateInput.value) {
      void actions.loadDay(sensorSelect.value, dateInput.value);
    }
  });
  labelButton.addEventListener("click", () => {
    labelDialog.open(store.get().selectionSize, store.get().concepts);
  });
  trainButton.addEventListener("click", () => {
    const concept = store.get().activeConcept ?? conceptSelect.value;
    if (concept) void actions.trainConcept(concept);
  });
  sweepButton.addEventListener("click", () => {
    const concept = conceptSelect.value || store.get().activeConcept;
    if (concept) void actions.sweepConcept(concept);
  });
  reprojectButton.addEventListener("click", () => void actions.reprojectSelection());
  removeButton.addEventListener("click", () => void actions.removeSelection());
  steerButton.addEventListener("click", () => {
    const concept = conceptSelect.value || store.get().activeConcept;
    if (concept) void actions.steerByConcept(concept);
  });
  conceptSelect.addEventListener("change", () => {
    store.update({ activeConcept: conceptSelect.value || null });
  });

  store.update({});

  return {
    api,
    store,
    actions,
    scatter,
    labelDialog,
    elements: {
      status,
      calendarPanel,
      treePanel,
      modelPanel,
      sensorSelect,
      dateInput,
      conceptSelect,
    },
  };
}
