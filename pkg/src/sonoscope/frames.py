"""Core identities shared by every subsystem: sensors, frames, and day sets.

A sensor records 10-second clips; each clip is embedded as 10 one-second
frames. A frame is therefore identified by (sensor_id, clip_start,
frame_index) where clip_start is integer UTC epoch seconds and frame_index
runs 0..9. All timestamp arithmetic in this package is UTC.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Iterator, NamedTuple, Sequence

import numpy as np

FRAMES_PER_CLIP = 10
CLIP_SECONDS = 10
DEFAULT_DIM = 512

POSITIVE = "positive"
NEGATIVE = "negative"


class FrameRef(NamedTuple):
    """Identity of one 1-second audio frame."""

    sensor_id: str
    clip_start: int
    frame_index: int

    @property
    def timestamp(self) -> int:
        """UTC epoch second at which this frame begins."""
        return self.clip_start + self.frame_index

    def to_json(self) -> dict:
        return {
            "sensor": self.sensor_id,
            "clip_start": int(self.clip_start),
            "frame_index": int(self.frame_index),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FrameRef":
        return cls(str(obj["sensor"]), int(obj["clip_start"]), int(obj["frame_index"]))


def validate_frame_ref(ref: FrameRef) -> None:
    if not 0 <= ref.frame_index < FRAMES_PER_CLIP:
        raise ValueError(
            f"frame_index must be in [0, {FRAMES_PER_CLIP - 1}], got {ref.frame_index}"
        )
    if not ref.sensor_id:
        raise ValueError("sensor_id must be a nonempty token")


@dataclass(frozen=True)
class SensorInfo:
    sensor_id: str
    latitude: float
    longitude: float
    name: str = ""

    def __post_init__(self) -> None:
        if not self.sensor_id:
            raise ValueError("sensor_id must be nonempty")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")

    def to_json(self) -> dict:
        return {
            "id": self.sensor_id,
            "lat": self.latitude,
            "lon": self.longitude,
            "name": self.name,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SensorInfo":
        return cls(str(obj["id"]), float(obj["lat"]), float(obj["lon"]), str(obj.get("name", "")))


def as_embedding(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float32 vector, optionally checking its length."""
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise ValueError(f"embedding must be 1-D, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise ValueError(f"dim mismatch: expected {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("embedding contains non-finite values")
    return vec


def day_bounds(day: date) -> tuple[int, int]:
    """[start, end) epoch seconds of a UTC calendar day."""
    start = int(datetime(day.year, day.month, day.day, tzinfo=timezone.utc).timestamp())
    return start, start + 86400


def epoch_to_date(ts: int) -> date:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date()


def utc_now_iso() -> str:
    return datetime.now(tz=timezone.utc).isoformat(timespec="seconds")


@dataclass
class DayFrameSet:
    """All frames a sensor stored on one UTC calendar day.

    Column layout (clip_starts, frame_indices, vectors) keeps the 40k+
    frames of a real day cheap to slice; rows are sorted by
    (clip_start, frame_index).
    """

    sensor_id: str
    day: date
    clip_starts: np.ndarray  # int64, shape (n,)
    frame_indices: np.ndarray  # uint8, shape (n,)
    vectors: np.ndarray  # float32, shape (n, dim)
    _refs: list[FrameRef] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        n = len(self.clip_starts)
        if not (len(self.frame_indices) == n and self.vectors.shape[0] == n):
            raise ValueError("column lengths disagree")
        start, end = day_bounds(self.day)
        if n and (self.clip_starts.min() < start or self.clip_starts.max() >= end):
            raise ValueError("frames fall outside the stated day")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.clip_starts)

    @property
    def refs(self) -> list[FrameRef]:
        if self._refs is None:
            self._refs = [
                FrameRef(self.sensor_id, int(c), int(f))
                for c, f in zip(self.clip_starts.tolist(), self.frame_indices.tolist())
            ]
        return self._refs

    def __iter__(self) -> Iterator[tuple[FrameRef, np.ndarray]]:
        for i, ref in enumerate(self.refs):
            yield ref, self.vectors[i]

    def index_of(self, ref: FrameRef) -> int:
        """Position of ref in the sorted columns; raises KeyError if absent."""
        if ref.sensor_id != self.sensor_id:
            raise KeyError(ref)
        i = int(np.searchsorted(self.clip_starts, ref.clip_start))
        while i < len(self) and self.clip_starts[i] == ref.clip_start:
            if self.frame_indices[i] == ref.frame_index:
                return i
            i += 1
        raise KeyError(ref)
