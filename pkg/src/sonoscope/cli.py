"""Command line: corpus generation, ingestion, indexing, training, queries.

`query` and `train` print the same canonical JSON the HTTP facade serves,
so scripted pipelines and the API see identical bytes. All other output
is one JSON object per processed item. Errors exit nonzero with a
message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

import numpy as np

from .audio import baseline_embedding, load_wav
from .errors import SonoscopeError
from .frames import FrameRef
from .index import IndexParams, build_index, save_index
from .prototypes import PrototypeEngine
from .queries import QueryEngine
from .service import INDEX_DIR, ServiceContext, canonical_bytes
from .store import CorpusStore
from .synthetic import ConceptSpec, CorpusSpec, TemporalPattern, generate_synthetic_corpus


def _planted_concepts(names: list[str], dim: int, seed: int) -> tuple[ConceptSpec, ...]:
    """Deterministic axis-spread blob centers derived from the corpus seed."""
    specs = []
    for i, name in enumerate(names):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xC0, i])))
        direction = rng.standard_normal(dim)
        center = 4.0 * direction / np.linalg.norm(direction)
        specs.append(
            ConceptSpec(
                name=name,
                center=tuple(float(v) for v in center),
                stddev=0.5,
                pattern=TemporalPattern(rate=0.05),
            )
        )
    return tuple(specs)


def _cmd_generate(args: argparse.Namespace) -> int:
    names = [n for n in args.concepts.split(",") if n] if args.concepts else []
    spec = CorpusSpec(
        sensors=args.sensors,
        days=args.days,
        dim=args.dim,
        seed=args.seed,
        start_day=date.fromisoformat(args.start_day),
        concepts=_planted_concepts(names, args.dim, args.seed),
    )
    store, truth = generate_synthetic_corpus(spec, args.out)
    print(
        json.dumps(
            {
                "corpus": str(store.root),
                "sensors": args.sensors,
                "days": args.days,
                "dim": args.dim,
                "seed": args.seed,
                "frames": store.total_frame_count(),
                "planted": {name: len(truth.frames_of(name)) for name in names},
            }
        )
    )
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    store = CorpusStore(args.corpus, create=True)
    for path in args.files:
        report = store.ingest_frameset(path, sensor_id=args.sensor, overwrite=args.overwrite)
        print(
            json.dumps(
                {
                    "file": str(path),
                    "sensor": report.sensor_id,
                    "date": report.day.isoformat(),
                    "frames": report.frame_count,
                    "dim": report.dim,
                }
            )
        )
    return 0


def _cmd_index(args: argparse.Namespace) -> int:
    store = CorpusStore(args.corpus)
    out_dir = Path(args.store) / INDEX_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    by_scope: dict[tuple[str, int], list] = {}
    for sensor_id, day in store.iter_days(args.sensor):
        if args.year is not None and day.year != args.year:
            continue
        by_scope.setdefault((sensor_id, day.year), []).append(day)
    if not by_scope:
        raise SonoscopeError("no ingested days match the requested scope")
    params = IndexParams(args.degree, args.beam, args.seed)
    for (sensor_id, year), days in sorted(by_scope.items()):
        frames: list[tuple[FrameRef, np.ndarray]] = []
        for day in days:
            dayset = store.load_day(sensor_id, day)
            frames.extend(zip(dayset.refs, dayset.vectors))
        index = build_index(frames, params, scope={"sensor": sensor_id, "year": year})
        path = out_dir / f"{sensor_id}-{year}.urix"
        save_index(index, path)
        print(
            json.dumps(
                {
                    "index": str(path),
                    "sensor": sensor_id,
                    "year": year,
                    "frames": index.count,
                    "days": len(days),
                }
            )
        )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    store = CorpusStore(args.corpus)
    engine = PrototypeEngine(store, args.store)
    proto = engine.train_version(args.concept, seed=args.seed, n_trees=args.trees)
    print(
        canonical_bytes(
            {
                "concept": proto.concept,
                "version": proto.version,
                "representatives": [r.to_json() for r in proto.representatives],
                "training_digest": proto.training_digest,
            }
        )
    )
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    ctx = ServiceContext(args.corpus, args.store)
    engine: QueryEngine = ctx.queries
    scope = None
    if args.scope_sensor or args.scope_year is not None:
        scope = {}
        if args.scope_sensor:
            scope["sensor"] = args.scope_sensor
        if args.scope_year is not None:
            scope["year"] = args.scope_year
    if args.mode == "prototype":
        if not args.concept:
            raise SonoscopeError("prototype queries need --concept")
        hits = engine.query_by_prototype(args.concept, args.n, threshold=args.tau, scope=scope)
    else:
        if args.wav:
            wave = load_wav(args.wav)
            seed = baseline_embedding(wave, ctx.store.dim())[args.wav_frame]
        elif args.sensor and args.clip_start is not None:
            seed = FrameRef(args.sensor, args.clip_start, args.frame)
        else:
            raise SonoscopeError(
                "example queries need --sensor/--clip-start or --wav"
            )
        hits = engine.query_by_example(seed, args.n, scope=scope)
    print(hits.canonical_json())
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(args.corpus, args.store, host=args.host, port=args.port, dim=args.dim)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonoscope", description="Concept mining over audio-embedding corpora."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic corpus with planted concepts")
    p.add_argument("--out", required=True)
    p.add_argument("--sensors", type=int, default=1)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-day", default="2022-01-01")
    p.add_argument("--concepts", default="siren,jackhammer", help="comma-separated names")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("ingest", help="ingest frameset files into a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sensor", default=None)
    p.add_argument("--overwrite", action="store_true")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("index", help="build per sensor-year ANN indexes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--sensor", default=None)
    p.add_argument("--year", type=int, default=None)
    p.add_argument("--degree", type=int, default=16)
    p.add_argument("--beam", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_index)

    p = sub.add_parser("train", help="train the next prototype version of a concept")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--concept", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=100)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("query", help="query by example frame, uploaded audio, or prototype")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--mode", choices=("example", "prototype"), default="example")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--sensor", default=None)
    p.add_argument("--clip-start", type=int, default=None)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--wav", default=None, help="query by an uploaded clip instead of a frame")
    p.add_argument("--wav-frame", type=int, default=0)
    p.add_argument("--concept", default=None)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--scope-sensor", default=None)
    p.add_argument("--scope-year", type=int, default=None)
    p.set_defaults(fn=_cmd_query)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--dim", type=int, default=None)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SonoscopeError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
