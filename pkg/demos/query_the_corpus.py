"""
Query a month of audio and read the calendar
============================================

Builds an index over a multi-day corpus, runs example and prototype
queries, and renders the calendar of concept activity as text: the
10,000-foot view the workbench opens with.
"""

import tempfile
from pathlib import Path

import numpy as np

from sonoscope import (
    ConceptSpec,
    CorpusSpec,
    PrototypeEngine,
    QueryEngine,
    TemporalPattern,
    build_index,
    calendar_summary,
    generate_synthetic_corpus,
)

workdir = Path(tempfile.mkdtemp(prefix="sonoscope-demo-"))

# 1. A week of audio embeddings; sirens planted only on weekdays.
spec = CorpusSpec(
    sensors=1,
    days=7,
    dim=16,
    seed=3,
    concepts=(
        ConceptSpec(
            name="siren",
            center=tuple([4.0] * 8 + [0.0] * 8),
            stddev=0.5,
            pattern=TemporalPattern(rate=0.05, weekdays=(0, 1, 2, 3, 4)),
        ),
    ),
)
store, truth = generate_synthetic_corpus(spec, workdir / "corpus")

# 2. One index covers the whole sensor-year; queries hit it directly.
frames = []
for sensor_id, day in store.iter_days():
    dayset = store.load_day(sensor_id, day)
    frames.extend(zip(dayset.refs, dayset.vectors))
index = build_index(frames, scope={"sensor": "s00", "year": 2022})
print(f"indexed {len(frames)} frames")

# 3. Query by example: the nearest neighbors of one planted siren frame
#    are overwhelmingly other siren frames.
engine = PrototypeEngine(store, workdir / "models")
queries = QueryEngine(store, engine, [index])
probe = sorted(truth.frames_of("siren"))[0]
hits = queries.query_by_example(probe, 200)
sirens = sum("siren" in truth.concepts_of(r) for r in hits.refs())
print(f"example query: {sirens}/200 nearest frames are planted sirens")

# 4. Train a prototype from a handful of labels, then sweep the corpus.
#    A wider neighborhood per representative lets the sweep reach past
#    the default 2000-frame pool around each archetype.
positives = sorted(truth.frames_of("siren"))[:40]
engine.record_annotation("demo-analyst", "siren", positives, "positive")
engine.train_version("siren", seed=1, n_trees=50)
proto_hits = queries.query_by_prototype(
    "siren", 5000, neighbors_per_representative=20_000
)
print(f"prototype query: {len(proto_hits.hits)} frames over threshold")

# 5. The calendar groups hits into per-day 6-hour slices. Planted
#    weekday-only sirens leave the weekend blank.
calendar = calendar_summary(proto_hits, 2022)
print("\ndate        total  night  morning  afternoon  evening")
for cell in calendar.to_json()["cells"][:7]:
    n, m, a, e = cell["slices"]
    print(
        f"{cell['date']}  {cell['total']:5d}  {n:5d}  {m:7d}  {a:9d}  {e:7d}"
    )

# 6. Selection summaries answer "when does this happen?" for any set of
#    frames, here the prototype's hits on the first weekday (Jan 1, 2022
#    was a Saturday, so Monday is the corpus's third day).
monday = 1_640_995_200 + 2 * 86_400
hits_monday = [r for r in proto_hits.refs() if monday <= r.clip_start < monday + 86_400]
summary = queries.selection_summary(hits_monday, concept="siren")
bars = "".join("#" if c else "." for c in summary.hour_histogram)
print(f"\nmonday hit histogram by hour: {bars}")
likely = sum(summary.likelihood_histogram[5:])
print(f"hits with likelihood >= 0.5: {likely}/{len(hits_monday)}")
