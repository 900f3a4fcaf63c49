"""
Teach the system a concept, iteratively
=======================================

Simulates the analyst loop: label a few frames, train a prototype,
label some more, retrain, and watch the model settle. Each version is
persisted with its training digest, so any run can be audited later.
"""

import tempfile
from datetime import date
from pathlib import Path

import numpy as np

from sonoscope import (
    ConceptSpec,
    CorpusSpec,
    PrototypeEngine,
    TemporalPattern,
    generate_synthetic_corpus,
)

workdir = Path(tempfile.mkdtemp(prefix="sonoscope-demo-"))

# 1. Corpus with one planted concept to learn and recover.
spec = CorpusSpec(
    sensors=1,
    days=1,
    dim=16,
    seed=7,
    concepts=(
        ConceptSpec(
            name="siren",
            center=tuple([4.0] * 8 + [0.0] * 8),
            stddev=0.5,
            pattern=TemporalPattern(rate=0.05),
        ),
    ),
)
store, truth = generate_synthetic_corpus(spec, workdir / "corpus")
engine = PrototypeEngine(store, workdir / "models")

planted = sorted(truth.frames_of("siren"))
day = store.load_day("s00", date(2022, 1, 1))
background = [r for r in day.refs if not truth.concepts_of(r)]
print(f"{len(planted)} planted siren frames among {len(day.refs)}")

# 2. Five labeling rounds of 20 frames each (12 positive, 8 negative),
#    retraining after every round. Random negatives are drawn
#    automatically at twice the positive count, so the analyst only
#    marks what they actually heard.
rng = np.random.default_rng(0)
pos_order = rng.permutation(len(planted))
neg_order = rng.permutation(len(background))
for round_no in range(5):
    pos = [planted[i] for i in pos_order[round_no * 12 : (round_no + 1) * 12]]
    neg = [background[i] for i in neg_order[round_no * 8 : (round_no + 1) * 8]]
    engine.record_annotation("demo-analyst", "siren", pos, "positive")
    engine.record_annotation("demo-analyst", "siren", neg, "negative")
    version = engine.train_version("siren", seed=round_no, n_trees=40)
    print(
        f"round {round_no + 1}: trained v{version.version} "
        f"({len(version.representatives)} representative(s), "
        f"digest {version.training_digest[:12]})"
    )

# 3. The model summary shows how much each retraining moved the scores
#    of the labeled frames; a shrinking delta means the concept settled.
summary = engine.model_summary("siren")
print("\nversion  delta")
for vs in summary.versions:
    delta = "-" if vs.convergence_delta is None else f"{vs.convergence_delta:.4f}"
    print(f"     v{vs.version}  {delta}")

# 4. Held-out sanity check: planted frames the analyst never labeled
#    should score high, background should score low.
latest = engine.version("siren")
labeled = set(engine.effective_labels("siren"))
held_pos = [r for r in planted if r not in labeled][:300]
held_neg = [r for r in background if r not in labeled][:300]
pos_scores = latest.predict(store.get_frames(held_pos))
neg_scores = latest.predict(store.get_frames(held_neg))
print(f"\nheld-out planted mean likelihood    {pos_scores.mean():.3f}")
print(f"held-out background mean likelihood {neg_scores.mean():.3f}")

# 5. Representatives are the audition shortlist: one archetype frame per
#    dense region of the positives.
print("\nrepresentatives:")
for ref in latest.representatives:
    print(f"  {ref.sensor_id} clip {ref.clip_start} frame {ref.frame_index}")
