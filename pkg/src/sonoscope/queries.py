"""Corpus-wide concept queries: by example, by prototype, and summaries.

Queries run over a set of immutable per-scope indexes (typically one per
sensor-year). Example queries rank by ascending embedding distance;
prototype queries sample ANN neighborhoods around each representative
frame, score the pooled candidates with the concept forest, and rank by
descending likelihood. Calendar and selection summaries aggregate hits
into UTC time bins.
"""

from __future__ import annotations

import calendar as _calendar
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UnindexedScopeError, UnknownConceptError
from .frames import FrameRef, as_embedding
from .index import AnnIndex, knn_query
from .prototypes import PrototypeEngine
from .store import CorpusStore

DEFAULT_THRESHOLD = 0.5
DEFAULT_NEIGHBORS_PER_REPRESENTATIVE = 2000

SCORE_DISTANCE = "distance"
SCORE_LIKELIHOOD = "likelihood"

_SLICE_SECONDS = 6 * 3600  # four slices per day: 00-06, 06-12, 12-18, 18-24


@dataclass(frozen=True)
class HitSet:
    """Ranked query result; scores are distances or likelihoods."""

    source: dict
    score_kind: str
    hits: tuple[tuple[FrameRef, float], ...]

    def __post_init__(self) -> None:
        if self.score_kind not in (SCORE_DISTANCE, SCORE_LIKELIHOOD):
            raise ValueError(f"unknown score kind: {self.score_kind!r}")
        refs = [ref for ref, _ in self.hits]
        if len(set(refs)) != len(refs):
            raise ValueError("hits must be unique by frame")
        scores = [s for _, s in self.hits]
        ordered = all(a <= b for a, b in zip(scores, scores[1:]))
        if self.score_kind == SCORE_LIKELIHOOD:
            ordered = all(a >= b for a, b in zip(scores, scores[1:]))
        if not ordered:
            raise ValueError(f"hits out of order for score kind {self.score_kind!r}")

    def __len__(self) -> int:
        return len(self.hits)

    def refs(self) -> list[FrameRef]:
        return [ref for ref, _ in self.hits]

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "score": self.score_kind,
            "hits": [dict(r.to_json(), score=float(s)) for r, s in self.hits],
        }

    def canonical_json(self) -> str:
        """Stable byte-for-byte serialization shared by every facade."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class CalendarSummary:
    """Hit counts per calendar day, split into four 6-hour UTC slices."""

    year: int
    slice_counts: np.ndarray  # (n_days, 4) int64

    @property
    def n_days(self) -> int:
        return self.slice_counts.shape[0]

    @property
    def totals(self) -> np.ndarray:
        return self.slice_counts.sum(axis=1)

    @property
    def densities(self) -> np.ndarray:
        totals = self.totals
        peak = totals.max() if totals.size else 0
        if peak == 0:
            return np.zeros_like(totals, dtype=np.float64)
        return totals / float(peak)

    def cell(self, day: date) -> dict:
        if day.year != self.year:
            raise ValueError(f"day {day.isoformat()} outside year {self.year}")
        i = (day - date(self.year, 1, 1)).days
        return {
            "date": day.isoformat(),
            "total": int(self.totals[i]),
            "slices": [int(c) for c in self.slice_counts[i]],
            "density": float(self.densities[i]),
        }

    def to_json(self) -> dict:
        start = date(self.year, 1, 1)
        totals = self.totals
        densities = self.densities
        cells = []
        for i in range(self.n_days):
            d = start.fromordinal(start.toordinal() + i)
            cells.append(
                {
                    "date": d.isoformat(),
                    "total": int(totals[i]),
                    "slices": [int(c) for c in self.slice_counts[i]],
                    "density": float(densities[i]),
                }
            )
        return {"year": self.year, "cells": cells}


@dataclass(frozen=True)
class SelectionSummary:
    """Histograms over a frame selection: hour of day, and likelihood."""

    hour_histogram: tuple[int, ...]
    likelihood_histogram: tuple[int, ...] | None
    concept: str | None

    def to_json(self) -> dict:
        return {
            "hour_histogram": list(self.hour_histogram),
            "likelihood_histogram": (
                None if self.likelihood_histogram is None else list(self.likelihood_histogram)
            ),
            "concept": self.concept,
        }


@dataclass(frozen=True)
class FrameClassificationMatrix:
    """Per-frame likelihood of each concept over one clip's 10 frames."""

    sensor_id: str
    clip_start: int
    concepts: tuple[str, ...]
    values: np.ndarray  # (10, n_concepts) float64

    def to_json(self) -> dict:
        return {
            "sensor": self.sensor_id,
            "clip_start": int(self.clip_start),
            "concepts": list(self.concepts),
            "likelihoods": [[float(v) for v in row] for row in self.values],
        }


def calendar_summary(hits: HitSet | Iterable[FrameRef], year: int) -> CalendarSummary:
    """Group hits by (UTC day, 6-hour slice); hits outside the year drop."""
    refs: Iterable[FrameRef] = hits.refs() if isinstance(hits, HitSet) else hits
    n_days = 366 if _calendar.isleap(year) else 365
    start = int(datetime(year, 1, 1, tzinfo=timezone.utc).timestamp())
    ts = np.array([r.timestamp for r in refs], dtype=np.int64)
    counts = np.zeros((n_days, 4), dtype=np.int64)
    if ts.size:
        rel = ts - start
        keep = (rel >= 0) & (rel < n_days * 86400)
        rel = rel[keep]
        flat = (rel // 86400) * 4 + (rel % 86400) // _SLICE_SECONDS
        counts = np.bincount(flat, minlength=n_days * 4).reshape(n_days, 4)
    return CalendarSummary(year, counts)


class QueryEngine:
    """Stateless queries over a corpus, its indexes, and trained concepts."""

    def __init__(
        self,
        corpus: CorpusStore,
        prototypes: PrototypeEngine | None = None,
        indices: Iterable[AnnIndex] = (),
    ):
        self.corpus = corpus
        self.prototypes = prototypes
        self._indices: list[AnnIndex] = list(indices)

    def add_index(self, index: AnnIndex) -> None:
        self._indices.append(index)

    def indices_for(self, scope: Mapping | None = None) -> list[AnnIndex]:
        """Indexes whose scope dict contains every given key/value pair."""
        if scope is None:
            return list(self._indices)
        items = dict(scope).items()
        return [ix for ix in self._indices if items <= ix.scope.items()]

    def _scoped(self, scope: Mapping | None) -> list[AnnIndex]:
        found = self.indices_for(scope)
        if not found:
            raise UnindexedScopeError(f"no index covers scope {dict(scope or {})!r}")
        return found

    def _require_prototypes(self) -> PrototypeEngine:
        if self.prototypes is None:
            raise UnknownConceptError("no prototype store attached")
        return self.prototypes

    def _neighborhood(
        self, indexes: Sequence[AnnIndex], vec: np.ndarray, k: int
    ) -> dict[FrameRef, float]:
        best: dict[FrameRef, float] = {}
        for index in indexes:
            for hit in knn_query(index, vec, min(k, index.count)):
                d = float(hit.distance)
                if hit.ref not in best or d < best[hit.ref]:
                    best[hit.ref] = d
        return best

    def query_by_example(
        self,
        seed: FrameRef | np.ndarray | Sequence[float],
        n: int,
        scope: Mapping | None = None,
    ) -> HitSet:
        """Top-n nearest frames to a corpus frame or an uploaded embedding."""
        if n < 1:
            raise ValueError("n must be >= 1")
        indexes = self._scoped(scope)
        if isinstance(seed, FrameRef):
            vec, _ = self.corpus.get_frame(seed)
            source = {"kind": "example", "ref": seed.to_json()}
        else:
            vec = as_embedding(seed)
            source = {"kind": "upload"}
        best = self._neighborhood(indexes, vec, n)
        ordered = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))[:n]
        return HitSet(source, SCORE_DISTANCE, tuple(ordered))

    def query_by_prototype(
        self,
        concept: str,
        n: int,
        threshold: float = DEFAULT_THRESHOLD,
        scope: Mapping | None = None,
        neighbors_per_representative: int = DEFAULT_NEIGHBORS_PER_REPRESENTATIVE,
        version: int | None = None,
    ) -> HitSet:
        """Sample around each representative, filter the pool by likelihood.

        Hits are the top-n pool members with likelihood >= threshold under
        the concept forest, descending.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        indexes = self._scoped(scope)
        proto = self._require_prototypes().version(concept, version)
        if not proto.representatives:
            raise UnknownConceptError(f"concept {concept!r} has no representatives")
        pool: set[FrameRef] = set()
        for rep in proto.representatives:
            vec, _ = self.corpus.get_frame(rep)
            near = self._neighborhood(indexes, vec, neighbors_per_representative)
            ranked = sorted(near.items(), key=lambda kv: (kv[1], kv[0]))
            pool.update(ref for ref, _ in ranked[:neighbors_per_representative])
        refs = sorted(pool)
        likelihoods = proto.predict(self.corpus.get_frames(refs))
        kept = [(r, float(s)) for r, s in zip(refs, likelihoods) if s >= threshold]
        kept.sort(key=lambda kv: (-kv[1], kv[0]))
        source = {"kind": "prototype", "concept": concept, "version": proto.version}
        return HitSet(source, SCORE_LIKELIHOOD, tuple(kept[:n]))

    def selection_summary(
        self, frames: Iterable[FrameRef], concept: str | None = None
    ) -> SelectionSummary:
        """Hour-of-day counts, plus 10 likelihood bins when a concept is given."""
        refs = sorted(set(frames))
        x = self.corpus.get_frames(refs)  # also validates existence
        hours = np.array([r.timestamp % 86400 // 3600 for r in refs], dtype=np.int64)
        hour_hist = np.bincount(hours, minlength=24) if refs else np.zeros(24, dtype=np.int64)
        lik_hist: tuple[int, ...] | None = None
        if concept is not None:
            lik = self._require_prototypes().predict(concept, x)
            bins = np.clip((lik * 10).astype(np.int64), 0, 9)
            lik_hist = tuple(int(c) for c in np.bincount(bins, minlength=10))
        return SelectionSummary(tuple(int(c) for c in hour_hist), lik_hist, concept)

    def frame_classification_matrix(
        self, sensor_id: str, clip_start: int, concepts: Sequence[str]
    ) -> FrameClassificationMatrix:
        """Latest-version likelihood of every concept on each clip frame."""
        refs = [FrameRef(sensor_id, clip_start, i) for i in range(10)]
        x = self.corpus.get_frames(refs)
        values = np.zeros((10, len(concepts)), dtype=np.float64)
        engine = self._require_prototypes() if concepts else None
        for j, concept in enumerate(concepts):
            values[:, j] = engine.predict(concept, x)
        return FrameClassificationMatrix(sensor_id, clip_start, tuple(concepts), values)
