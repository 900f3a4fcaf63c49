/** Minimal observable store holding one analyst tab's workbench state. */

import type {
  CalendarJson,
  LayoutPointJson,
  ModelSummaryJson,
  RefKey,
  TreeNodeJson,
} from "./types";

export interface Workbench {
  session: string | null;
  sensor: string | null;
  date: string | null;
  layoutId: string | null;
  points: LayoutPointJson[];
  tree: TreeNodeJson | null;
  /** Keys of the selected frames, as last acknowledged locally. */
  selection: Set<RefKey>;
  /** Selection size acknowledged by the server (authoritative). */
  selectionSize: number;
  concepts: string[];
  activeConcept: string | null;
  calendar: CalendarJson | null;
  modelSummary: ModelSummaryJson | null;
  status: string;
  busy: boolean;
}

export type Listener = (state: Workbench) => void;

function initial(): Workbench {
  return {
    session: null,
    sensor: null,
    date: null,
    layoutId: null,
    points: [],
    tree: null,
    selection: new Set(),
    selectionSize: 0,
    concepts: [],
    activeConcept: null,
    calendar: null,
    modelSummary: null,
    status: "ready",
    busy: false,
  };
}

export class WorkbenchStore {
  private state: Workbench = initial();
  private readonly listeners = new Set<Listener>();

  get(): Workbench {
    return this.state;
  }

  update(patch: Partial<Workbench>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  reset(): void {
    this.state = initial();
    for (const listener of this.listeners) listener(this.state);
  }
}
