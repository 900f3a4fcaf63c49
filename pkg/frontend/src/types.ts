/** Wire types for the /v1 HTTP API, mirrored field-for-field. */

export interface FrameRefJson {
  sensor: string;
  clip_start: number;
  frame_index: number;
}

/** Stable dictionary key for a frame reference. */
export type RefKey = string;

export function refKey(r: FrameRefJson): RefKey {
  return `${r.sensor}:${r.clip_start}:${r.frame_index}`;
}

export function keyToRef(key: RefKey): FrameRefJson {
  const at = key.lastIndexOf(":");
  const mid = key.lastIndexOf(":", at - 1);
  if (mid <= 0 || at <= mid + 1 || at === key.length - 1) {
    throw new Error(`malformed ref key: ${key}`);
  }
  return {
    sensor: key.slice(0, mid),
    clip_start: Number(key.slice(mid + 1, at)),
    frame_index: Number(key.slice(at + 1)),
  };
}

export interface SensorJson {
  id: string;
  lat: number;
  lon: number;
  name: string;
}

export interface LayoutPointJson extends FrameRefJson {
  x: number;
  y: number;
}

export interface LayoutJson {
  layout_id: string;
  parent: string | null;
  params: Record<string, unknown>;
  points: LayoutPointJson[];
}

export interface TreeNodeJson {
  id: number;
  size: number;
  decoration: Record<string, number>;
  children: TreeNodeJson[];
}

export interface DayLoadResult {
  session: string;
  sensor: string;
  date: string;
  frame_count: number;
  layout: LayoutJson;
  tree: TreeNodeJson;
}

export type JobStatus = "queued" | "running" | "done" | "failed" | "cancelled";

export interface JobJson {
  job: string;
  kind: string;
  status: JobStatus;
  result?: unknown;
  error?: { code: string; message: string };
}

export interface HitJson extends FrameRefJson {
  score: number;
}

export interface HitSetJson {
  source: Record<string, unknown>;
  score: string;
  hits: HitJson[];
}

export interface CalendarCellJson {
  date: string;
  total: number;
  /** Four six-hour UTC slices: 00-06, 06-12, 12-18, 18-24. */
  slices: number[];
  density: number;
}

export interface CalendarJson {
  year: number;
  cells: CalendarCellJson[];
}

export interface SelectionSummaryJson {
  hour_histogram: number[];
  likelihood_histogram: number[] | null;
  concept: string | null;
}

export interface VersionSummaryJson {
  version: number;
  created_at: string;
  convergence_delta: number | null;
  representatives: FrameRefJson[];
}

export interface ModelSummaryJson {
  concept: string;
  versions: VersionSummaryJson[];
}

export interface TrainResultJson {
  concept: string;
  version: number;
  representatives: FrameRefJson[];
  training_digest: string;
}

export interface SessionStateJson {
  session: string;
  sensor: string | null;
  date: string | null;
  layouts: string[];
  selection: FrameRefJson[];
}

export interface ClassificationJson {
  sensor: string;
  clip_start: number;
  concepts: string[];
  likelihoods: number[][];
}

/** Concept names the server accepts (mirrors the training-side rule). */
export const CONCEPT_NAME = /^[A-Za-z0-9][A-Za-z0-9._-]*$/;
