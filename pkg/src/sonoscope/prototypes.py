"""Concept prototypes: annotation log, training assembly, versioned forests.

A prototype stands in for a sound concept as the pair (classification
model, representative frames). Users accumulate positive and negative
frame labels in an append-only log; each training run replays the log,
assembles a training set, fits a random forest, extracts one
representative frame per density cluster of the positives, and persists
the result as the next immutable version of the concept.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clustering import NOISE, dbscan
from .errors import (
    FormatError,
    MissingDayError,
    NoPositivesError,
    UnknownConceptError,
    UnknownFrameError,
    UnknownSensorError,
)
from .forest import DEFAULT_TREES, Forest, load_forest, save_forest, train_forest
from .frames import NEGATIVE, POSITIVE, DayFrameSet, FrameRef, utc_now_iso
from .store import CorpusStore

MANIFEST_VERSION = 1
ANNOTATION_LOG = "annotations.jsonl"
_NEGATIVE_SAMPLE_TAG = 0x504E
# concept names double as directory names under store_root/prototypes/
_CONCEPT_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")


def _validate_concept(concept: str) -> None:
    if not isinstance(concept, str) or not _CONCEPT_NAME.fullmatch(concept):
        raise ValueError(
            f"concept must be a simple name (letters, digits, '._-'), got {concept!r}"
        )


@dataclass(frozen=True)
class Annotation:
    """One append-only labeling event over a set of frames."""

    annotation_id: str
    user: str
    concept: str
    refs: tuple[FrameRef, ...]
    polarity: str
    created_at: str  # UTC ISO 8601

    def to_json(self) -> dict:
        return {
            "id": self.annotation_id,
            "user": self.user,
            "concept": self.concept,
            "refs": [r.to_json() for r in self.refs],
            "polarity": self.polarity,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Annotation":
        return cls(
            str(obj["id"]),
            str(obj["user"]),
            str(obj["concept"]),
            tuple(FrameRef.from_json(r) for r in obj["refs"]),
            str(obj["polarity"]),
            str(obj["created_at"]),
        )


@dataclass(frozen=True)
class TrainingSet:
    """Labeled frames for one training run.

    Random negatives are drawn uniformly over the corpus minus the labeled
    frames, twice the positive count when the pool allows, else the whole
    pool. The three ref groups are pairwise disjoint.
    """

    concept: str
    positives: tuple[FrameRef, ...]
    explicit_negatives: tuple[FrameRef, ...]
    random_negatives: tuple[FrameRef, ...]
    seed: int

    def all_refs(self) -> tuple[FrameRef, ...]:
        return self.positives + self.explicit_negatives + self.random_negatives

    def labels(self) -> np.ndarray:
        y = np.zeros(len(self.all_refs()), dtype=np.int64)
        y[: len(self.positives)] = 1
        return y

    def digest(self) -> str:
        obj = {
            "concept": self.concept,
            "positives": [r.to_json() for r in self.positives],
            "explicit_negatives": [r.to_json() for r in self.explicit_negatives],
            "random_negatives": [r.to_json() for r in self.random_negatives],
            "seed": self.seed,
        }
        blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class PrototypeVersion:
    """One immutable trained snapshot of a concept."""

    concept: str
    version: int
    forest: Forest
    representatives: tuple[FrameRef, ...]
    training_digest: str
    created_at: str
    seed: int

    def predict(self, embeddings: np.ndarray) -> np.ndarray:
        """Likelihood in [0,1] per row: mean leaf fraction across trees."""
        return self.forest.predict(embeddings)

    def classify_day(self, day: DayFrameSet) -> dict[FrameRef, float]:
        scores = self.forest.predict(day.vectors)
        return {ref: float(s) for ref, s in zip(day.refs, scores)}


@dataclass(frozen=True)
class VersionSummary:
    version: int
    created_at: str
    convergence_delta: float | None  # None on the first version
    representatives: tuple[FrameRef, ...]


@dataclass(frozen=True)
class ModelSummary:
    """Per-version history of a concept, with likelihood drift deltas.

    delta_v is the mean absolute likelihood change between consecutive
    versions, evaluated over the concept's currently labeled frames.
    """

    concept: str
    versions: tuple[VersionSummary, ...]

    def to_json(self) -> dict:
        return {
            "concept": self.concept,
            "versions": [
                {
                    "version": v.version,
                    "created_at": v.created_at,
                    "convergence_delta": v.convergence_delta,
                    "representatives": [r.to_json() for r in v.representatives],
                }
                for v in self.versions
            ],
        }


def representatives_of(
    refs: Sequence[FrameRef], embeddings: np.ndarray
) -> tuple[FrameRef, ...]:
    """One frame per density cluster, the member nearest its centroid.

    All-noise clusterings fall back to a single pick nearest the global
    centroid, so at least one representative always survives.
    """
    if len(refs) == 0:
        raise NoPositivesError("representatives need at least one frame")
    x = np.asarray(embeddings, dtype=np.float64)
    if x.shape[0] != len(refs):
        raise ValueError("refs and embeddings differ in length")
    if len(refs) == 1:
        return (refs[0],)
    clusters = dbscan(x)
    ids = sorted(set(clusters.assignment.tolist()) - {NOISE})
    groups = [clusters.members(cid) for cid in ids]
    if not groups:
        groups = [np.arange(len(refs))]
    out: list[FrameRef] = []
    for members in groups:
        centroid = x[members].mean(axis=0)
        d = np.linalg.norm(x[members] - centroid, axis=1)
        out.append(refs[int(members[int(np.argmin(d))])])
    return tuple(out)


class PrototypeEngine:
    """Owns one store root: the annotation log plus versioned prototypes.

    Appends to the log are serialized; at most one training run per
    concept proceeds at a time; trained versions are immutable, so
    prediction on existing versions never blocks on training.
    """

    def __init__(self, corpus: CorpusStore, store_root: str | Path | None = None):
        self.corpus = corpus
        self.root = Path(store_root) if store_root is not None else corpus.root
        self.root.mkdir(parents=True, exist_ok=True)
        self._state_lock = threading.Lock()
        self._train_locks: dict[str, threading.Lock] = {}
        self._cache: dict[tuple[str, int], PrototypeVersion] = {}

    @property
    def log_path(self) -> Path:
        return self.root / ANNOTATION_LOG

    @property
    def prototypes_dir(self) -> Path:
        return self.root / "prototypes"

    # -- annotation log ----------------------------------------------------

    def record_annotation(
        self, user: str, concept: str, refs: Iterable[FrameRef], polarity: str
    ) -> str:
        _validate_concept(concept)
        refs = tuple(refs)
        if not refs:
            raise ValueError("refs must be nonempty")
        if polarity not in (POSITIVE, NEGATIVE):
            raise ValueError(
                f"polarity must be {POSITIVE!r} or {NEGATIVE!r}, got {polarity!r}"
            )
        for ref in refs:
            try:
                self.corpus.get_frame(ref)
            except (UnknownSensorError, MissingDayError) as exc:
                raise UnknownFrameError(f"unknown frame: {ref}") from exc
        ann = Annotation(
            uuid.uuid4().hex,
            str(user),
            concept,
            tuple(sorted(set(refs))),
            polarity,
            utc_now_iso(),
        )
        line = json.dumps(ann.to_json(), sort_keys=True, separators=(",", ":"))
        with self._state_lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return ann.annotation_id

    def annotations(self, concept: str | None = None) -> list[Annotation]:
        if not self.log_path.exists():
            return []
        out: list[Annotation] = []
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                ann = Annotation.from_json(json.loads(line))
                if concept is None or ann.concept == concept:
                    out.append(ann)
        return out

    def effective_labels(self, concept: str) -> dict[FrameRef, str]:
        """Replay the log in order; the latest annotation of a frame wins."""
        labels: dict[FrameRef, str] = {}
        for ann in self.annotations(concept):
            for ref in ann.refs:
                labels[ref] = ann.polarity
        return labels

    # -- training ------------------------------------------------------------

    def assemble_training_set(self, concept: str, seed: int = 0) -> TrainingSet:
        labels = self.effective_labels(concept)
        positives = tuple(sorted(r for r, pol in labels.items() if pol == POSITIVE))
        explicit = tuple(sorted(r for r, pol in labels.items() if pol == NEGATIVE))
        if not positives:
            raise NoPositivesError(f"no positive labels for concept {concept!r}")
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, _NEGATIVE_SAMPLE_TAG]))
        )
        drawn = self.corpus.sample_refs(2 * len(positives), rng, exclude=set(labels))
        return TrainingSet(concept, positives, explicit, tuple(sorted(drawn)), seed)

    def train_version(
        self, concept: str, seed: int = 0, n_trees: int = DEFAULT_TREES
    ) -> PrototypeVersion:
        with self._train_lock(concept):
            ts = self.assemble_training_set(concept, seed)
            x = self.corpus.get_frames(list(ts.all_refs()))
            forest = train_forest(x, ts.labels(), n_trees=n_trees, seed=seed)
            reps = representatives_of(ts.positives, x[: len(ts.positives)])
            known = self.versions(concept)
            version = (known[-1] if known else 0) + 1
            proto = PrototypeVersion(
                concept, version, forest, reps, ts.digest(), utc_now_iso(), seed
            )
            self._persist(proto, ts)
            return proto

    def _train_lock(self, concept: str) -> threading.Lock:
        with self._state_lock:
            return self._train_locks.setdefault(concept, threading.Lock())

    def _persist(self, proto: PrototypeVersion, ts: TrainingSet) -> None:
        vdir = self.prototypes_dir / proto.concept / f"v{proto.version}"
        vdir.mkdir(parents=True, exist_ok=False)
        save_forest(proto.forest, vdir / "forest.npz")
        manifest = {
            "format_version": MANIFEST_VERSION,
            "concept": proto.concept,
            "version": proto.version,
            "created_at": proto.created_at,
            "seed": proto.seed,
            "training_digest": proto.training_digest,
            "counts": {
                "positives": len(ts.positives),
                "explicit_negatives": len(ts.explicit_negatives),
                "random_negatives": len(ts.random_negatives),
            },
            "representatives": [r.to_json() for r in proto.representatives],
        }
        (vdir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with self._state_lock:
            self._cache[(proto.concept, proto.version)] = proto

    # -- versions -------------------------------------------------------------

    def concepts(self) -> list[str]:
        if not self.prototypes_dir.is_dir():
            return []
        return sorted(
            child.name for child in self.prototypes_dir.iterdir() if self.versions(child.name)
        )

    def versions(self, concept: str) -> list[int]:
        cdir = self.prototypes_dir / concept
        if not cdir.is_dir():
            return []
        out: list[int] = []
        for child in cdir.iterdir():
            m = re.fullmatch(r"v(\d+)", child.name)
            if m and (child / "manifest.json").exists():
                out.append(int(m.group(1)))
        return sorted(out)

    def version(self, concept: str, k: int | None = None) -> PrototypeVersion:
        """Load one trained version (the latest when k is None)."""
        known = self.versions(concept)
        if not known:
            raise UnknownConceptError(f"no trained versions for concept {concept!r}")
        if k is None:
            k = known[-1]
        if k not in known:
            raise UnknownConceptError(f"concept {concept!r} has no version {k}")
        with self._state_lock:
            cached = self._cache.get((concept, k))
        if cached is not None:
            return cached
        vdir = self.prototypes_dir / concept / f"v{k}"
        manifest = json.loads((vdir / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("format_version") != MANIFEST_VERSION:
            raise FormatError(
                f"unsupported prototype manifest version: {manifest.get('format_version')}"
            )
        proto = PrototypeVersion(
            concept,
            k,
            load_forest(vdir / "forest.npz"),
            tuple(FrameRef.from_json(r) for r in manifest["representatives"]),
            str(manifest["training_digest"]),
            str(manifest["created_at"]),
            int(manifest["seed"]),
        )
        with self._state_lock:
            self._cache[(concept, k)] = proto
        return proto

    # -- prediction and summaries ----------------------------------------------

    def predict(
        self, concept: str, embeddings: np.ndarray, k: int | None = None
    ) -> np.ndarray:
        return self.version(concept, k).predict(embeddings)

    def classify_day(
        self, concept: str, day: DayFrameSet, k: int | None = None
    ) -> dict[FrameRef, float]:
        return self.version(concept, k).classify_day(day)

    def compute_representatives(self, concept: str) -> tuple[FrameRef, ...]:
        """Representatives of the current effective positives."""
        labels = self.effective_labels(concept)
        positives = tuple(sorted(r for r, pol in labels.items() if pol == POSITIVE))
        if not positives:
            raise NoPositivesError(f"no positive labels for concept {concept!r}")
        return representatives_of(positives, self.corpus.get_frames(positives))

    def model_summary(self, concept: str) -> ModelSummary:
        known = self.versions(concept)
        if not known:
            raise UnknownConceptError(f"no trained versions for concept {concept!r}")
        labeled = sorted(self.effective_labels(concept))
        x = self.corpus.get_frames(labeled)
        prev: np.ndarray | None = None
        rows: list[VersionSummary] = []
        for k in known:
            proto = self.version(concept, k)
            cur = proto.predict(x) if labeled else np.zeros(0)
            delta = None
            if prev is not None:
                delta = float(np.mean(np.abs(cur - prev))) if cur.size else 0.0
            rows.append(VersionSummary(k, proto.created_at, delta, proto.representatives))
            prev = cur
        return ModelSummary(concept, tuple(rows))
