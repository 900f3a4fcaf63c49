"""HTTP facade over the whole package: corpora, queries, layouts, prototypes.

Every endpoint is a thin adapter; response bodies are the canonical JSON
serialization of the underlying module result, so in-process callers, the
command line, and HTTP clients all see identical bytes. Long operations
(day loads, training) run as background jobs polled via /v1/jobs/{id}.
Session state (loaded day, layout stack, selection) is per-session and
in-memory; annotations and trained prototypes are global and durable.
"""

from __future__ import annotations

import io
import json
import re
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .audio import DB_FLOOR, load_wav, spectrogram
from .clustering import ClusterTree, build_cluster_tree, decorate_tree
from .errors import (
    DegenerateTrainingError,
    DuplicateDayError,
    FormatError,
    MissingDayError,
    NoAudioError,
    NoPositivesError,
    SonoscopeError,
    TrainingInProgressError,
    UnindexedScopeError,
    UnknownConceptError,
    UnknownFrameError,
    UnknownJobError,
    UnknownNodeError,
    UnknownQueryError,
    UnknownSensorError,
    UnknownSessionError,
)
from .frames import FrameRef
from .index import load_index
from .projection import Layout, project, remove_and_reproject, reproject_subset, steer
from .prototypes import PrototypeEngine
from .queries import HitSet, QueryEngine, calendar_summary
from .store import CorpusStore

API_PREFIX = "/v1"
INDEX_DIR = "indexes"

_HTTP_STATUS: dict[type, int] = {
    UnknownSensorError: 404,
    MissingDayError: 404,
    UnknownFrameError: 404,
    UnknownConceptError: 404,
    UnindexedScopeError: 404,
    UnknownSessionError: 404,
    UnknownJobError: 404,
    UnknownNodeError: 404,
    UnknownQueryError: 404,
    NoAudioError: 404,
    DuplicateDayError: 409,
    TrainingInProgressError: 409,
    NoPositivesError: 409,
    FormatError: 400,
    DegenerateTrainingError: 400,
}


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    if name.endswith("Error"):
        name = name[: -len("Error")]
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def canonical_bytes(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _canonical_response(obj: Any, headers: dict | None = None) -> Response:
    return Response(canonical_bytes(obj), media_type="application/json", headers=headers)


def format_clip_id(sensor_id: str, clip_start: int) -> str:
    return f"{sensor_id}:{clip_start}"


def parse_clip_id(clip_id: str) -> tuple[str, int]:
    sensor, sep, start = clip_id.rpartition(":")
    if not sep or not sensor or not re.fullmatch(r"-?\d+", start):
        raise ValueError(f"clip id must look like <sensor>:<clip_start>, got {clip_id!r}")
    return sensor, int(start)


def _parse_refs(items: list) -> list[FrameRef]:
    return [FrameRef.from_json(obj) for obj in items]


@dataclass
class Job:
    job_id: str
    kind: str
    status: str = "queued"  # queued | running | done | failed | cancelled
    result: Any = None
    error: dict | None = None
    cancel: threading.Event = field(default_factory=threading.Event)

    def to_json(self) -> dict:
        out: dict = {"job": self.job_id, "kind": self.kind, "status": self.status}
        if self.status == "done":
            out["result"] = self.result
        if self.status == "failed":
            out["error"] = self.error
        return out


@dataclass
class SessionState:
    """Exploration state of one analyst tab; never persisted."""

    session_id: str
    sensor: str | None = None
    day: date | None = None
    layout_stack: list[str] = field(default_factory=list)
    selection: set[FrameRef] = field(default_factory=set)
    day_refs: set[FrameRef] = field(default_factory=set)
    tree: ClusterTree | None = None

    def to_json(self) -> dict:
        return {
            "session": self.session_id,
            "sensor": self.sensor,
            "date": self.day.isoformat() if self.day else None,
            "layouts": list(self.layout_stack),
            "selection": [r.to_json() for r in sorted(self.selection)],
        }


class ServiceContext:
    """All server-side state; shared across requests, guarded by one lock."""

    def __init__(
        self,
        corpus_root: str | Path,
        store_root: str | Path | None = None,
        dim: int | None = None,
    ):
        self.store = CorpusStore(corpus_root)
        self.prototypes = PrototypeEngine(self.store, store_root)
        self.queries = QueryEngine(self.store, self.prototypes)
        self.dim = dim
        self.lock = threading.Lock()
        self.sessions: dict[str, SessionState] = {}
        self.layouts: dict[str, Layout] = {}
        self.jobs: dict[str, Job] = {}
        self.hitsets: dict[str, HitSet] = {}
        self.training: set[str] = set()
        self.day_jobs: dict[str, str] = {}  # session id -> active day-load job
        self.executor = ThreadPoolExecutor(max_workers=4)
        self._load_indexes()

    def _load_indexes(self) -> None:
        index_dir = self.prototypes.root / INDEX_DIR
        if not index_dir.is_dir():
            return
        for path in sorted(index_dir.glob("*.urix")):
            self.queries.add_index(load_index(path))

    def close(self) -> None:
        self.executor.shutdown(wait=False, cancel_futures=True)

    # -- sessions ----------------------------------------------------------

    def new_session(self) -> SessionState:
        state = SessionState(uuid.uuid4().hex)
        with self.lock:
            self.sessions[state.session_id] = state
        return state

    def session(self, session_id: str) -> SessionState:
        with self.lock:
            state = self.sessions.get(session_id)
        if state is None:
            raise UnknownSessionError(f"unknown session: {session_id}")
        return state

    def top_layout(self, state: SessionState) -> Layout:
        if not state.layout_stack:
            raise ValueError("session has no loaded day")
        with self.lock:
            return self.layouts[state.layout_stack[-1]]

    def push_layout(self, state: SessionState, layout: Layout) -> None:
        with self.lock:
            self.layouts[layout.layout_id] = layout
            state.layout_stack.append(layout.layout_id)

    # -- jobs ----------------------------------------------------------------

    def submit(self, kind: str, fn) -> Job:
        job = Job(uuid.uuid4().hex, kind)
        with self.lock:
            self.jobs[job.job_id] = job

        def run() -> None:
            if job.cancel.is_set():
                job.status = "cancelled"
                return
            job.status = "running"
            try:
                result = fn(job)
                job.status = "cancelled" if job.cancel.is_set() else "done"
                if job.status == "done":
                    job.result = result
            except (SonoscopeError, ValueError, FileNotFoundError) as exc:
                job.status = "failed"
                job.error = {"code": _error_code(exc), "message": str(exc)}

        self.executor.submit(run)
        return job

    def job(self, job_id: str) -> Job:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise UnknownJobError(f"unknown job: {job_id}")
        return job

    def remember_hits(self, hits: HitSet) -> str:
        query_id = uuid.uuid4().hex
        with self.lock:
            self.hitsets[query_id] = hits
        return query_id

    def hitset(self, query_id: str) -> HitSet:
        with self.lock:
            hits = self.hitsets.get(query_id)
        if hits is None:
            raise UnknownQueryError(f"unknown query: {query_id}")
        return hits


def create_app(
    corpus_root: str | Path,
    store_root: str | Path | None = None,
    dim: int | None = None,
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    ctx = ServiceContext(corpus_root, store_root, dim)
    app = FastAPI(title="sonoscope", version=__version__)
    app.state.ctx = ctx
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SonoscopeError)
    async def _domain_error(request: Request, exc: SonoscopeError) -> JSONResponse:
        status = _HTTP_STATUS.get(type(exc), 400)
        return JSONResponse({"code": _error_code(exc), "message": str(exc)}, status_code=status)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse({"code": "invalid_request", "message": str(exc)}, status_code=400)

    @app.on_event("shutdown")
    def _shutdown() -> None:
        ctx.close()

    # -- health and corpus ----------------------------------------------------

    @app.get(f"{API_PREFIX}/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get(f"{API_PREFIX}/sensors")
    def sensors() -> Response:
        return _canonical_response([s.to_json() for s in ctx.store.sensors()])

    # -- queries ---------------------------------------------------------------

    def _scope(body: dict):
        return body.get("scope")

    @app.post(f"{API_PREFIX}/query/example")
    async def query_example(request: Request) -> Response:
        body = await request.json()
        seed_obj = body.get("seed") or {}
        if "embedding" in seed_obj:
            seed = np.asarray(seed_obj["embedding"], dtype=np.float32)
        else:
            seed = FrameRef.from_json(seed_obj)
        hits = ctx.queries.query_by_example(seed, int(body.get("n", 100)), _scope(body))
        query_id = ctx.remember_hits(hits)
        return Response(
            hits.canonical_json(),
            media_type="application/json",
            headers={"X-Query-Id": query_id},
        )

    @app.post(f"{API_PREFIX}/query/prototype")
    async def query_prototype(request: Request) -> Response:
        body = await request.json()
        hits = ctx.queries.query_by_prototype(
            str(body["concept"]),
            int(body.get("n", 100)),
            threshold=float(body.get("tau", 0.5)),
            scope=_scope(body),
            version=body.get("version"),
        )
        query_id = ctx.remember_hits(hits)
        return Response(
            hits.canonical_json(),
            media_type="application/json",
            headers={"X-Query-Id": query_id},
        )

    @app.get(f"{API_PREFIX}/calendar")
    def calendar(year: int, concept: str | None = None, query_id: str | None = None) -> Response:
        if query_id is not None:
            hits = ctx.hitset(query_id)
        elif concept is not None:
            hits = ctx.queries.query_by_prototype(concept, n=1_000_000)
        else:
            raise ValueError("calendar needs either concept or query_id")
        return _canonical_response(calendar_summary(hits, year).to_json())

    # -- sessions and layouts -----------------------------------------------------

    @app.post(f"{API_PREFIX}/session")
    def new_session() -> dict:
        return {"session": ctx.new_session().session_id}

    @app.get(f"{API_PREFIX}/session/{{session_id}}")
    def get_session(session_id: str) -> Response:
        return _canonical_response(ctx.session(session_id).to_json())

    @app.get(f"{API_PREFIX}/layout/{{layout_id}}")
    def get_layout(layout_id: str) -> Response:
        with ctx.lock:
            layout = ctx.layouts.get(layout_id)
        if layout is None:
            raise UnknownQueryError(f"unknown layout: {layout_id}")
        return _canonical_response(layout.to_json())

    @app.post(f"{API_PREFIX}/day/load")
    async def day_load(request: Request) -> dict:
        body = await request.json()
        sensor = str(body["sensor"])
        day = date.fromisoformat(str(body["date"]))
        seed = int(body.get("seed", 0))
        state = ctx.session(body["session"]) if "session" in body else ctx.new_session()
        if not ctx.store.has_day(sensor, day):
            raise MissingDayError(f"no ingested day {day.isoformat()} for sensor {sensor!r}")

        def load(job: Job) -> dict:
            dayset = ctx.store.load_day(sensor, day)
            if job.cancel.is_set():
                return {}
            layout = project(dayset, seed=seed)
            if job.cancel.is_set():
                return {}
            tree = build_cluster_tree(dayset, seed=seed)
            likelihoods = {
                concept: ctx.prototypes.version(concept).predict(dayset.vectors)
                for concept in ctx.prototypes.concepts()
            }
            if likelihoods:
                decorate_tree(tree, likelihoods)
            if job.cancel.is_set():
                return {}
            with ctx.lock:
                ctx.layouts[layout.layout_id] = layout
            state.sensor, state.day = sensor, day
            state.layout_stack = [layout.layout_id]
            state.selection = set()
            state.day_refs = set(dayset.refs)
            state.tree = tree
            return {
                "session": state.session_id,
                "sensor": sensor,
                "date": day.isoformat(),
                "frame_count": len(dayset),
                "layout": layout.to_json(),
                "tree": tree.to_json(),
            }

        with ctx.lock:
            previous = ctx.day_jobs.get(state.session_id)
        if previous is not None:
            old = ctx.job(previous)
            if old.status in ("queued", "running"):
                old.cancel.set()
                old.status = "cancelled"
        job = ctx.submit("day_load", load)
        with ctx.lock:
            ctx.day_jobs[state.session_id] = job.job_id
        return {"job": job.job_id, "session": state.session_id}

    @app.post(f"{API_PREFIX}/layout/reproject")
    async def layout_reproject(request: Request) -> Response:
        body = await request.json()
        state = ctx.session(str(body["session"]))
        base = ctx.top_layout(state)
        subset = _parse_refs(body["refs"]) if "refs" in body else sorted(state.selection)
        layout = reproject_subset(base, subset, seed=int(body.get("seed", 0)))
        ctx.push_layout(state, layout)
        return _canonical_response(layout.to_json())

    @app.post(f"{API_PREFIX}/layout/remove")
    async def layout_remove(request: Request) -> Response:
        body = await request.json()
        state = ctx.session(str(body["session"]))
        base = ctx.top_layout(state)
        excluded = _parse_refs(body["refs"]) if "refs" in body else sorted(state.selection)
        layout = remove_and_reproject(base, excluded, seed=int(body.get("seed", 0)))
        ctx.push_layout(state, layout)
        return _canonical_response(layout.to_json())

    @app.post(f"{API_PREFIX}/layout/steer")
    async def layout_steer(request: Request) -> Response:
        body = await request.json()
        state = ctx.session(str(body["session"]))
        base = ctx.top_layout(state)
        concept = str(body["concept"]) if "concept" in body else None
        if "labels" in body:
            labels = {
                FrameRef.from_json(obj): str(obj["polarity"]) for obj in body["labels"]
            }
        elif concept is None:
            raise ValueError("steer needs either explicit labels or a concept")
        else:
            on_layout = set(base.refs)
            labels = {
                ref: pol
                for ref, pol in ctx.prototypes.effective_labels(concept).items()
                if ref in on_layout
            }
        kwargs = {}
        if "attract" in body:
            kwargs["attract"] = float(body["attract"])
        if "repel" in body:
            kwargs["repel"] = float(body["repel"])
        layout = steer(
            base.frames(), labels, seed=int(body.get("seed", 0)), concept=concept, **kwargs
        )
        ctx.push_layout(state, layout)
        return _canonical_response(layout.to_json())

    @app.post(f"{API_PREFIX}/selection")
    async def set_selection(request: Request) -> dict:
        body = await request.json()
        state = ctx.session(str(body["session"]))
        if "node" in body:
            # member refs travel only through node selection; the tree JSON
            # itself carries ids and sizes to keep day-load payloads bounded
            if state.tree is None:
                raise ValueError("no loaded day to select a cluster node from")
            node_id = int(body["node"])
            try:
                refs = state.tree.select_node(node_id)
            except KeyError:
                raise UnknownNodeError(f"no node {node_id} in the current day tree") from None
        else:
            refs = set(_parse_refs(body["refs"]))
            stray = refs - state.day_refs
            if stray:
                raise ValueError(f"selection outside the loaded day: {sorted(stray)[:3]}")
        state.selection = refs
        return {"session": state.session_id, "size": len(refs)}

    @app.post(f"{API_PREFIX}/selection/summary")
    async def selection_summary_route(request: Request) -> Response:
        body = await request.json()
        if "refs" in body:
            refs = _parse_refs(body["refs"])
        else:
            refs = sorted(ctx.session(str(body["session"])).selection)
        summary = ctx.queries.selection_summary(refs, body.get("concept"))
        return _canonical_response(summary.to_json())

    # -- annotation and training -------------------------------------------------

    @app.post(f"{API_PREFIX}/annotate")
    async def annotate(request: Request) -> dict:
        body = await request.json()
        annotation_id = ctx.prototypes.record_annotation(
            str(body.get("user", "anonymous")),
            str(body["concept"]),
            _parse_refs(body["refs"]),
            str(body["polarity"]),
        )
        return {"annotation_id": annotation_id}

    @app.post(f"{API_PREFIX}/prototype/train")
    async def prototype_train(request: Request) -> dict:
        body = await request.json()
        concept = str(body["concept"])
        seed = int(body.get("seed", 0))
        n_trees = int(body.get("n_trees", 100))
        with ctx.lock:
            if concept in ctx.training:
                raise TrainingInProgressError(f"concept {concept!r} is already training")
            ctx.training.add(concept)

        def train(job: Job) -> dict:
            try:
                proto = ctx.prototypes.train_version(concept, seed=seed, n_trees=n_trees)
            finally:
                with ctx.lock:
                    ctx.training.discard(concept)
            return {
                "concept": concept,
                "version": proto.version,
                "representatives": [r.to_json() for r in proto.representatives],
                "training_digest": proto.training_digest,
            }

        job = ctx.submit("train", train)
        return {"job": job.job_id}

    @app.get(f"{API_PREFIX}/prototypes")
    def list_prototypes() -> Response:
        return _canonical_response({"concepts": ctx.prototypes.concepts()})

    @app.get(f"{API_PREFIX}/prototype/{{concept}}/summary")
    def prototype_summary(concept: str) -> Response:
        return _canonical_response(ctx.prototypes.model_summary(concept).to_json())

    @app.get(f"{API_PREFIX}/jobs/{{job_id}}")
    def job_status(job_id: str) -> Response:
        return _canonical_response(ctx.job(job_id).to_json())

    # -- clip inspection ------------------------------------------------------------

    def _clip_audio_path(clip_id: str) -> tuple[str, int, Path]:
        sensor, clip_start = parse_clip_id(clip_id)
        path = ctx.store.audio_path(sensor, clip_start)
        if not path.exists():
            raise NoAudioError(f"clip {clip_id} has no stored audio")
        return sensor, clip_start, path

    @app.get(f"{API_PREFIX}/clip/{{clip_id}}/spectrogram")
    def clip_spectrogram(clip_id: str, format: str = "json") -> Response:
        sensor, clip_start, path = _clip_audio_path(clip_id)
        matrix = spectrogram(load_wav(path))
        if format == "json":
            return _canonical_response(
                {
                    "sensor": sensor,
                    "clip_start": clip_start,
                    "sample_rate": matrix.sample_rate,
                    "window": matrix.window,
                    "hop": matrix.hop,
                    "db_floor": DB_FLOOR,
                    "values": [[float(v) for v in row] for row in matrix.values],
                }
            )
        if format == "png":
            from PIL import Image

            # map [-80, 0] dB to 0..255 and put low frequencies at the bottom
            gray = ((matrix.values - DB_FLOOR) / -DB_FLOOR * 255.0).astype(np.uint8)
            image = Image.fromarray(gray[::-1], mode="L")
            buf = io.BytesIO()
            image.save(buf, format="PNG")
            return Response(buf.getvalue(), media_type="image/png")
        raise ValueError(f"format must be json or png, got {format!r}")

    @app.get(f"{API_PREFIX}/clip/{{clip_id}}/audio")
    def clip_audio(clip_id: str) -> Response:
        _, _, path = _clip_audio_path(clip_id)
        return Response(path.read_bytes(), media_type="audio/wav")

    @app.get(f"{API_PREFIX}/clip/{{clip_id}}/classification")
    def clip_classification(clip_id: str, concepts: str | None = None) -> Response:
        sensor, clip_start = parse_clip_id(clip_id)
        names = (
            [c for c in concepts.split(",") if c]
            if concepts is not None
            else ctx.prototypes.concepts()
        )
        matrix = ctx.queries.frame_classification_matrix(sensor, clip_start, names)
        return _canonical_response(matrix.to_json())

    return app


def serve(
    corpus_root: str | Path,
    store_root: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8080,
    dim: int | None = None,
) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    app = create_app(corpus_root, store_root, dim)
    # Long CPU-bound jobs (day loads, training) can starve the event loop for
    # seconds at a time; with the default 5 s keep-alive the expired timer then
    # races the next queued poll and resets idle client connections.
    uvicorn.run(app, host=host, port=port, log_level="info", timeout_keep_alive=75)
