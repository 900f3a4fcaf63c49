"""Deterministic synthetic corpora with planted concepts.

Stands in for a real sensor deployment at desk scale: each sensor-day
follows the production cadence (3 ten-second clips per minute, 10 frames
per clip, 43,200 frames/day). Frames matching a concept's temporal pattern
are drawn from that concept's Gaussian blob; everything else comes from a
broad isotropic background, so planted structure is recoverable and a
GroundTruth oracle records exactly where it was planted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .frames import FRAMES_PER_CLIP, FrameRef, SensorInfo, day_bounds
from .store import CorpusStore, GroundTruth, write_frameset_columns

CLIPS_PER_MINUTE = 3


@dataclass(frozen=True)
class TemporalPattern:
    """When a concept occurs: a daily minute window plus calendar filters.

    start_minute/end_minute are minutes since UTC midnight, [start, end).
    months and weekdays (0=Monday) of None mean "every". rate is the
    probability that a frame inside the window carries the concept.
    """

    start_minute: int = 0
    end_minute: int = 1440
    months: tuple[int, ...] | None = None
    weekdays: tuple[int, ...] | None = None
    rate: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.start_minute < self.end_minute <= 1440:
            raise ValueError("need 0 <= start_minute < end_minute <= 1440")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError("rate must be in (0, 1]")

    def matches_day(self, day: date) -> bool:
        if self.months is not None and day.month not in self.months:
            return False
        if self.weekdays is not None and day.weekday() not in self.weekdays:
            return False
        return True


@dataclass(frozen=True)
class ConceptSpec:
    name: str
    center: tuple[float, ...]
    stddev: float
    pattern: TemporalPattern = field(default_factory=TemporalPattern)

    def __post_init__(self) -> None:
        if self.stddev <= 0:
            raise ValueError(f"stddev must be positive, got {self.stddev}")


@dataclass(frozen=True)
class CorpusSpec:
    sensors: int
    days: int
    concepts: tuple[ConceptSpec, ...]
    dim: int = 32
    seed: int = 0
    start_day: date = date(2022, 1, 1)
    background_stddev: float | None = None  # default: 3x largest concept stddev

    def __post_init__(self) -> None:
        if self.days <= 0:
            raise ValueError("days must be positive")
        if self.sensors <= 0:
            raise ValueError("sensors must be positive")
        centers = [c.center for c in self.concepts]
        if len(set(centers)) != len(centers):
            raise ValueError("concept centers must be pairwise distinct")
        for c in self.concepts:
            if len(c.center) != self.dim:
                raise ValueError(f"concept {c.name!r} center has wrong dim")

    @property
    def effective_background_stddev(self) -> float:
        if self.background_stddev is not None:
            return self.background_stddev
        if not self.concepts:
            return 1.0
        return 3.0 * max(c.stddev for c in self.concepts)


def spread_concept_centers(
    n: int, dim: int, radius: float, seed: int = 0
) -> list[tuple[float, ...]]:
    """n well-separated unit directions scaled to `radius` (test helper)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = []
    for _ in range(n):
        v = rng.standard_normal(dim)
        v = radius * v / np.linalg.norm(v)
        centers.append(tuple(float(x) for x in v))
    return centers


def _clip_starts_for_day(day_start: int, rng: np.random.Generator) -> np.ndarray:
    """Three non-overlapping 10 s clips per minute, at random offsets.

    Offsets are drawn so clips fit in the minute without overlapping:
    three sorted draws from [0, 30] shifted by 0/10/20 seconds.
    """
    raw = rng.integers(0, 31, size=(1440, CLIPS_PER_MINUTE))
    raw.sort(axis=1)
    offsets = raw + np.array([0, 10, 20])
    minutes = np.arange(1440, dtype=np.int64) * 60
    return (day_start + minutes[:, None] + offsets).reshape(-1)


def generate_synthetic_corpus(
    spec: CorpusSpec, out_root: str | Path
) -> tuple[CorpusStore, GroundTruth]:
    """Generate a corpus under out_root; byte-identical for a fixed spec.

    Each frame is assigned at most one planted concept (first matching
    pattern wins); its embedding is drawn from that concept's blob,
    otherwise from the isotropic background.
    """
    store = CorpusStore(out_root, create=True)
    store.register_sensors(
        SensorInfo(
            sensor_id=f"s{idx:02d}",
            latitude=40.7 + 0.01 * idx,
            longitude=-74.0 - 0.01 * idx,
            name=f"synthetic sensor {idx}",
        )
        for idx in range(spec.sensors)
    )

    bg_std = spec.effective_background_stddev
    truth: dict[FrameRef, frozenset[str]] = {}

    for s_idx in range(spec.sensors):
        sensor_id = f"s{s_idx:02d}"
        for d_idx in range(spec.days):
            day = spec.start_day + timedelta(days=d_idx)
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([spec.seed, s_idx, d_idx]))
            )
            day_start, _ = day_bounds(day)
            clip_starts = _clip_starts_for_day(day_start, rng)
            n = clip_starts.size * FRAMES_PER_CLIP
            frame_clip = np.repeat(clip_starts, FRAMES_PER_CLIP)
            frame_idx = np.tile(np.arange(FRAMES_PER_CLIP, dtype=np.int64), clip_starts.size)
            frame_time = frame_clip + frame_idx
            minute_of_day = ((frame_time - day_start) // 60).astype(np.int64)

            # eligible[i] = 1 + index of planted concept, 0 = background
            assigned = np.zeros(n, dtype=np.int64)
            for c_i, concept in enumerate(spec.concepts):
                if not concept.pattern.matches_day(day):
                    continue
                in_window = (minute_of_day >= concept.pattern.start_minute) & (
                    minute_of_day < concept.pattern.end_minute
                )
                mask = in_window & (assigned == 0)
                if concept.pattern.rate < 1.0:
                    mask &= rng.random(n) < concept.pattern.rate
                assigned[mask] = c_i + 1

            vectors = rng.standard_normal((n, spec.dim)).astype(np.float32)
            vectors *= bg_std
            for c_i, concept in enumerate(spec.concepts):
                mask = assigned == c_i + 1
                if not mask.any():
                    continue
                center = np.asarray(concept.center, dtype=np.float32)
                vectors[mask] = (
                    vectors[mask] * (concept.stddev / bg_std) + center
                ).astype(np.float32)

            path = store.day_path(sensor_id, day)
            write_frameset_columns(frame_clip, frame_idx, vectors, path)

            planted = np.flatnonzero(assigned)
            for i in planted.tolist():
                ref = FrameRef(sensor_id, int(frame_clip[i]), int(frame_idx[i]))
                truth[ref] = frozenset({spec.concepts[assigned[i] - 1].name})

    ground_truth = GroundTruth(truth)
    ground_truth.save(store.ground_truth_path)
    return store, ground_truth
