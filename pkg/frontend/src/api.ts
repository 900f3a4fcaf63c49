/** Typed client for the workbench service; every call goes over HTTP. */

import type {
  CalendarJson,
  DayLoadResult,
  FrameRefJson,
  HitSetJson,
  JobJson,
  LayoutJson,
  ModelSummaryJson,
  SelectionSummaryJson,
  SensorJson,
  SessionStateJson,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface QueryResult {
  hits: HitSetJson;
  queryId: string;
}

export interface SteerOptions {
  concept?: string;
  labels?: Array<FrameRefJson & { polarity: "positive" | "negative" }>;
  attract?: number;
  repel?: number;
  seed?: number;
}

export interface TrainOptions {
  seed?: number;
  n_trees?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    public readonly base: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}/v1${path}`, init);
    } catch (err) {
      // a dropped idle connection surfaces as a network error; GETs are
      // idempotent, so retry once on a fresh connection like browsers do
      if (method !== "GET") throw err;
      await sleep(250);
      resp = await this.fetchFn(`${this.base}/v1${path}`, init);
    }
    if (!resp.ok) {
      let code = "http_error";
      let message = `${method} ${path} -> ${resp.status}`;
      try {
        const payload = (await resp.json()) as { code?: string; message?: string };
        if (payload.code) code = payload.code;
        if (payload.message) message = payload.message;
      } catch {
        // non-JSON error body; keep the transport-level message
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    return (await this.request(method, path, body)).json() as Promise<T>;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.json("GET", "/health");
  }

  sensors(): Promise<SensorJson[]> {
    return this.json("GET", "/sensors");
  }

  session(sessionId: string): Promise<SessionStateJson> {
    return this.json("GET", `/session/${sessionId}`);
  }

  loadDay(sensor: string, date: string, session?: string): Promise<{ job: string; session: string }> {
    const body: Record<string, unknown> = { sensor, date };
    if (session) body.session = session;
    return this.json("POST", "/day/load", body);
  }

  job(jobId: string): Promise<JobJson> {
    return this.json("GET", `/jobs/${jobId}`);
  }

  /** Poll until the job settles; resolves with the terminal job body.
   *  Transient network failures are retried: while the server grinds through
   *  a CPU-heavy job it may drop idle keep-alive connections, and a dropped
   *  poll must not abort the wait. */
  async pollJob(jobId: string, intervalMs = 400, timeoutMs = 180_000): Promise<JobJson> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      let job: JobJson;
      try {
        job = await this.job(jobId);
      } catch (err) {
        if (err instanceof ApiError || Date.now() > deadline) throw err;
        await sleep(intervalMs);
        continue;
      }
      if (job.status === "done" || job.status === "failed" || job.status === "cancelled") {
        return job;
      }
      if (Date.now() > deadline) {
        throw new ApiError(0, "job_timeout", `job ${jobId} still ${job.status} after ${timeoutMs} ms`);
      }
      await sleep(intervalMs);
    }
  }

  async loadDayAndWait(sensor: string, date: string, session?: string): Promise<DayLoadResult> {
    const started = await this.loadDay(sensor, date, session);
    const job = await this.pollJob(started.job);
    if (job.status !== "done") {
      const err = job.error ?? { code: job.status, message: `day load ${job.status}` };
      throw new ApiError(0, err.code, err.message);
    }
    return job.result as DayLoadResult;
  }

  selectRefs(session: string, refs: FrameRefJson[]): Promise<{ session: string; size: number }> {
    return this.json("POST", "/selection", { session, refs });
  }

  selectNode(session: string, node: number): Promise<{ session: string; size: number }> {
    return this.json("POST", "/selection", { session, node });
  }

  selectionSummary(session: string, concept?: string): Promise<SelectionSummaryJson> {
    const body: Record<string, unknown> = { session };
    if (concept) body.concept = concept;
    return this.json("POST", "/selection/summary", body);
  }

  annotate(
    user: string,
    concept: string,
    polarity: "positive" | "negative",
    refs: FrameRefJson[],
  ): Promise<{ annotation_id: string }> {
    return this.json("POST", "/annotate", { user, concept, polarity, refs });
  }

  train(concept: string, options: TrainOptions = {}): Promise<{ job: string }> {
    return this.json("POST", "/prototype/train", { concept, ...options });
  }

  prototypes(): Promise<{ concepts: string[] }> {
    return this.json("GET", "/prototypes");
  }

  modelSummary(concept: string): Promise<ModelSummaryJson> {
    return this.json("GET", `/prototype/${encodeURIComponent(concept)}/summary`);
  }

  private async query(path: string, body: unknown): Promise<QueryResult> {
    const resp = await this.request("POST", path, body);
    return {
      hits: (await resp.json()) as HitSetJson,
      queryId: resp.headers.get("X-Query-Id") ?? "",
    };
  }

  queryExample(seed: FrameRefJson | { embedding: number[] }, n: number): Promise<QueryResult> {
    return this.query("/query/example", { seed, n });
  }

  queryPrototype(concept: string, n: number, tau?: number): Promise<QueryResult> {
    const body: Record<string, unknown> = { concept, n };
    if (tau !== undefined) body.tau = tau;
    return this.query("/query/prototype", body);
  }

  calendar(year: number, source: { concept?: string; queryId?: string }): Promise<CalendarJson> {
    const params = new URLSearchParams({ year: String(year) });
    if (source.queryId) params.set("query_id", source.queryId);
    else if (source.concept) params.set("concept", source.concept);
    return this.json("GET", `/calendar?${params}`);
  }

  reproject(session: string, refs?: FrameRefJson[], seed?: number): Promise<LayoutJson> {
    const body: Record<string, unknown> = { session };
    if (refs) body.refs = refs;
    if (seed !== undefined) body.seed = seed;
    return this.json("POST", "/layout/reproject", body);
  }

  removeAndReproject(session: string, refs?: FrameRefJson[], seed?: number): Promise<LayoutJson> {
    const body: Record<string, unknown> = { session };
    if (refs) body.refs = refs;
    if (seed !== undefined) body.seed = seed;
    return this.json("POST", "/layout/remove", body);
  }

  steer(session: string, options: SteerOptions): Promise<LayoutJson> {
    return this.json("POST", "/layout/steer", { session, ...options });
  }

  spectrogramPngUrl(sensor: string, clipStart: number): string {
    return `${this.base}/v1/clip/${sensor}:${clipStart}/spectrogram?format=png`;
  }

  audioUrl(sensor: string, clipStart: number): string {
    return `${this.base}/v1/clip/${sensor}:${clipStart}/audio`;
  }
}
