"""Persistent frame storage: the frameset binary format and the corpus tree.

On disk a corpus is a directory tree; the filesystem is the catalog:

    corpus_root/
      sensors.json                    # array of {id, lat, lon, name}
      ground_truth.jsonl              # optional, synthetic corpora only
      <sensor_id>/<YYYY>/<MM>/<DD>.urfs
      <sensor_id>/audio/<clip_start>.wav   # optional raw clips

Frameset file layout (all little-endian, packed):

    magic "URFS" | version u32 = 1 | dim u32 | count u64
    then `count` records of [clip_start i64, frame_index u8, dim x f32]

Records are written sorted by (clip_start, frame_index), which makes
single-frame reads a binary search over fixed-size records.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateDayError,
    FormatError,
    MissingDayError,
    UnknownFrameError,
    UnknownSensorError,
)
from .frames import (
    FRAMES_PER_CLIP,
    DayFrameSet,
    FrameRef,
    SensorInfo,
    day_bounds,
    epoch_to_date,
    validate_frame_ref,
)

FRAMESET_MAGIC = b"URFS"
FRAMESET_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")  # magic, version, dim, count


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype(
        [("clip_start", "<i8"), ("frame_index", "u1"), ("values", "<f4", (dim,))],
        align=False,
    )


def write_frameset_columns(
    clip_starts: np.ndarray,
    frame_indices: np.ndarray,
    vectors: np.ndarray,
    path: str | Path,
) -> None:
    """Column-oriented frameset writer (vectorized validation).

    All frames must fall on one UTC calendar day and form complete clips
    (each clip_start contributes exactly frame indices 0..9). Records are
    written sorted by (clip_start, frame_index).
    """
    clip_starts = np.asarray(clip_starts, dtype=np.int64)
    frame_indices = np.asarray(frame_indices, dtype=np.uint8)
    vectors = np.asarray(vectors, dtype=np.float32)
    n = clip_starts.shape[0]
    if n == 0:
        raise ValueError("cannot write an empty frameset")
    if frame_indices.shape[0] != n or vectors.shape[0] != n or vectors.ndim != 2:
        raise ValueError("column lengths disagree")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("non-finite embedding values")
    if epoch_to_date(int(clip_starts.min())) != epoch_to_date(int(clip_starts.max())):
        raise ValueError("mixed days in one frameset")
    if n % FRAMES_PER_CLIP != 0:
        raise ValueError("incomplete clip: frame count not a multiple of 10")

    order = np.lexsort((frame_indices, clip_starts))
    clip_starts, frame_indices, vectors = clip_starts[order], frame_indices[order], vectors[order]
    idx_grid = frame_indices.reshape(-1, FRAMES_PER_CLIP)
    clip_grid = clip_starts.reshape(-1, FRAMES_PER_CLIP)
    if not np.array_equal(idx_grid, np.tile(np.arange(FRAMES_PER_CLIP, dtype=np.uint8), (n // FRAMES_PER_CLIP, 1))) or not np.all(clip_grid == clip_grid[:, :1]):
        raise ValueError("incomplete clip: each clip needs exactly frame indices 0..9")

    dim = vectors.shape[1]
    records = np.empty(n, dtype=_record_dtype(dim))
    records["clip_start"] = clip_starts
    records["frame_index"] = frame_indices
    records["values"] = vectors

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(FRAMESET_MAGIC, FRAMESET_VERSION, dim, n))
        fh.write(records.tobytes())
    os.replace(tmp, path)


def write_frameset(frames: Sequence[tuple[FrameRef, np.ndarray]], path: str | Path) -> None:
    """Write one sensor-day of frames to a standalone .urfs file.

    All frames must share one sensor and one UTC calendar day, carry a
    uniform dim, and form complete clips (each clip_start contributes
    exactly frame indices 0..9). Read-back yields bit-identical values.
    """
    if not frames:
        raise ValueError("cannot write an empty frameset")
    sensors = {ref.sensor_id for ref, _ in frames}
    if len(sensors) != 1:
        raise ValueError(f"mixed sensors in one frameset: {sorted(sensors)}")

    dims = {np.asarray(vec).shape[-1] for _, vec in frames}
    if len(dims) != 1:
        raise ValueError(f"dim mismatch: records carry dims {sorted(dims)}")
    dim = dims.pop()

    seen: set[tuple[int, int]] = set()
    for ref, _ in frames:
        validate_frame_ref(ref)
        key = (ref.clip_start, ref.frame_index)
        if key in seen:
            raise ValueError(f"duplicate frame {key}")
        seen.add(key)

    clip_starts = np.array([ref.clip_start for ref, _ in frames], dtype=np.int64)
    frame_indices = np.array([ref.frame_index for ref, _ in frames], dtype=np.uint8)
    vectors = np.empty((len(frames), dim), dtype=np.float32)
    for i, (_, vec) in enumerate(frames):
        vectors[i] = vec
    write_frameset_columns(clip_starts, frame_indices, vectors, path)


def read_frameset_header(path: str | Path) -> tuple[int, int]:
    """(dim, count) from a frameset file, validating magic and version."""
    path = Path(path)
    size = path.stat().st_size
    if size < _HEADER.size:
        raise FormatError(f"truncated frameset file (size {size}): {path}")
    with open(path, "rb") as fh:
        magic, version, dim, count = _HEADER.unpack(fh.read(_HEADER.size))
    if magic != FRAMESET_MAGIC:
        raise FormatError(f"bad magic {magic!r} in {path}")
    if version != FRAMESET_VERSION:
        raise FormatError(f"unsupported frameset version {version} in {path}")
    expected = _HEADER.size + count * _record_dtype(dim).itemsize
    if size != expected:
        raise FormatError(f"truncated frameset file: {path} has {size} bytes, expected {expected}")
    return dim, count


def read_frameset(path: str | Path) -> np.ndarray:
    """All records of a frameset as a structured array (validated)."""
    dim, count = read_frameset_header(path)
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size)
        records = np.frombuffer(fh.read(), dtype=_record_dtype(dim))
    if len(records) != count:
        raise FormatError(f"truncated frameset file: {path}")
    return records


@dataclass(frozen=True)
class IngestReport:
    sensor_id: str
    day: date
    frame_count: int
    dim: int


@dataclass(frozen=True)
class ClipMeta:
    sensor_id: str
    clip_start: int
    day: date
    audio_path: Path | None


class GroundTruth:
    """Planted-concept oracle for synthetic corpora: FrameRef -> concept names.

    Serialized as JSON-lines, one {sensor, clip_start, frame_index,
    concepts:[...]} object per frame that carries at least one concept;
    absent frames are background.
    """

    def __init__(self, mapping: dict[FrameRef, frozenset[str]] | None = None):
        self._map: dict[FrameRef, frozenset[str]] = dict(mapping or {})

    def add(self, ref: FrameRef, concept: str) -> None:
        self._map[ref] = self._map.get(ref, frozenset()) | {concept}

    def concepts_of(self, ref: FrameRef) -> frozenset[str]:
        return self._map.get(ref, frozenset())

    def frames_of(self, concept: str) -> set[FrameRef]:
        return {ref for ref, names in self._map.items() if concept in names}

    def __len__(self) -> int:
        return len(self._map)

    def items(self):
        return self._map.items()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ref in sorted(self._map):
                obj = ref.to_json()
                obj["concepts"] = sorted(self._map[ref])
                fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        mapping: dict[FrameRef, frozenset[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                mapping[FrameRef.from_json(obj)] = frozenset(obj["concepts"])
        return cls(mapping)


class CorpusStore:
    """Ingestion and retrieval over one corpus root.

    Reads are safe from any thread once a day is ingested; ingestion of a
    given sensor-day is serialized by an internal lock and finalized with
    an atomic rename, so readers never observe partial files.
    """

    def __init__(self, root: str | Path, create: bool = False):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        if not self.root.is_dir():
            raise FileNotFoundError(f"corpus root does not exist: {self.root}")
        self._ingest_lock = threading.Lock()

    # -- sensors ---------------------------------------------------------

    @property
    def sensors_path(self) -> Path:
        return self.root / "sensors.json"

    def sensors(self) -> list[SensorInfo]:
        if not self.sensors_path.exists():
            return []
        with open(self.sensors_path, encoding="utf-8") as fh:
            return [SensorInfo.from_json(obj) for obj in json.load(fh)]

    def register_sensors(self, sensors: Iterable[SensorInfo]) -> None:
        existing = {s.sensor_id: s for s in self.sensors()}
        for sensor in sensors:
            existing[sensor.sensor_id] = sensor
        payload = [existing[k].to_json() for k in sorted(existing)]
        tmp = self.sensors_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.sensors_path)

    def sensor(self, sensor_id: str) -> SensorInfo:
        for s in self.sensors():
            if s.sensor_id == sensor_id:
                return s
        raise UnknownSensorError(f"unknown sensor: {sensor_id}")

    # -- layout ----------------------------------------------------------

    def day_path(self, sensor_id: str, day: date) -> Path:
        return self.root / sensor_id / f"{day.year:04d}" / f"{day.month:02d}" / f"{day.day:02d}.urfs"

    def audio_path(self, sensor_id: str, clip_start: int) -> Path:
        return self.root / sensor_id / "audio" / f"{clip_start}.wav"

    def has_day(self, sensor_id: str, day: date) -> bool:
        return self.day_path(sensor_id, day).exists()

    def iter_days(self, sensor_id: str | None = None) -> list[tuple[str, date]]:
        """Every ingested (sensor, day), sorted."""
        out: list[tuple[str, date]] = []
        sensors = [sensor_id] if sensor_id else sorted(
            p.name for p in self.root.iterdir() if p.is_dir()
        )
        for sid in sensors:
            base = self.root / sid
            if not base.is_dir():
                continue
            for f in sorted(base.glob("[0-9]*/[0-9]*/[0-9]*.urfs")):
                y, m = int(f.parent.parent.name), int(f.parent.name)
                d = int(f.stem)
                out.append((sid, date(y, m, d)))
        return out

    # -- ingestion -------------------------------------------------------

    def ingest_frameset(
        self,
        path: str | Path,
        sensor_id: str | None = None,
        overwrite: bool = False,
    ) -> IngestReport:
        """Validate a frameset file and install it at its canonical location.

        The sensor is taken from `sensor_id` or, failing that, parsed from a
        path of the form .../<sensor>/<YYYY>/<MM>/<DD>.urfs. The day always
        comes from the records themselves.
        """
        path = Path(path)
        records = read_frameset(path)  # validates magic/version/size
        dim, _ = read_frameset_header(path)
        if len(records) == 0:
            raise FormatError(f"empty frameset file: {path}")

        days = {epoch_to_date(int(c)) for c in np.unique(records["clip_start"])}
        if len(days) != 1:
            raise FormatError(f"frameset spans multiple days: {sorted(days)}")
        day = days.pop()

        if sensor_id is None:
            parts = path.parts
            if len(parts) >= 4 and parts[-2].isdigit() and parts[-3].isdigit():
                sensor_id = parts[-4]
            else:
                raise ValueError(
                    "sensor_id not given and path does not follow <sensor>/<YYYY>/<MM>/<DD>.urfs"
                )

        by_clip: dict[int, set[int]] = {}
        for c, f in zip(records["clip_start"].tolist(), records["frame_index"].tolist()):
            by_clip.setdefault(c, set()).add(f)
        for clip_start, indices in by_clip.items():
            if indices != set(range(FRAMES_PER_CLIP)):
                raise FormatError(f"incomplete clip at {clip_start} in {path}")

        target = self.day_path(sensor_id, day)
        with self._ingest_lock:
            if target.exists() and not overwrite:
                raise DuplicateDayError(
                    f"duplicate day: {sensor_id} {day.isoformat()} already ingested"
                )
            if path.resolve() != target.resolve():
                target.parent.mkdir(parents=True, exist_ok=True)
                tmp = target.with_suffix(".urfs.tmp")
                tmp.write_bytes(path.read_bytes())
                os.replace(tmp, target)
        return IngestReport(sensor_id, day, len(records), dim)

    # -- retrieval -------------------------------------------------------

    def _require_day_path(self, sensor_id: str, day: date) -> Path:
        p = self.day_path(sensor_id, day)
        if not p.exists():
            registered = any(s.sensor_id == sensor_id for s in self.sensors())
            if not registered and not (self.root / sensor_id).is_dir():
                raise UnknownSensorError(f"unknown sensor: {sensor_id}")
            raise MissingDayError(f"missing day: {sensor_id} {day.isoformat()}")
        return p

    def load_day(self, sensor_id: str, day: date) -> DayFrameSet:
        p = self._require_day_path(sensor_id, day)
        records = read_frameset(p)
        return DayFrameSet(
            sensor_id=sensor_id,
            day=day,
            clip_starts=records["clip_start"].copy(),
            frame_indices=records["frame_index"].copy(),
            vectors=records["values"].copy(),
        )

    def day_frame_count(self, sensor_id: str, day: date) -> int:
        _, count = read_frameset_header(self._require_day_path(sensor_id, day))
        return count

    def dim(self) -> int:
        for sensor_id, day in self.iter_days():
            d, _ = read_frameset_header(self.day_path(sensor_id, day))
            return d
        raise MissingDayError("corpus holds no ingested days")

    def get_frame(self, ref: FrameRef) -> tuple[np.ndarray, ClipMeta]:
        """Random access to one frame: binary search over sorted records."""
        validate_frame_ref(ref)
        day = epoch_to_date(ref.clip_start)
        p = self._require_day_path(ref.sensor_id, day)
        dim, count = read_frameset_header(p)
        rec_size = _record_dtype(dim).itemsize
        key = (ref.clip_start, ref.frame_index)
        with open(p, "rb") as fh:
            lo, hi = 0, count
            while lo < hi:
                mid = (lo + hi) // 2
                fh.seek(_HEADER.size + mid * rec_size)
                c, f = struct.unpack("<qB", fh.read(9))
                if (c, f) < key:
                    lo = mid + 1
                elif (c, f) > key:
                    hi = mid
                else:
                    fh.seek(_HEADER.size + mid * rec_size + 9)
                    vec = np.frombuffer(fh.read(4 * dim), dtype="<f4").copy()
                    audio = self.audio_path(ref.sensor_id, ref.clip_start)
                    meta = ClipMeta(
                        ref.sensor_id, ref.clip_start, day, audio if audio.exists() else None
                    )
                    return vec, meta
        raise UnknownFrameError(f"unknown frame: {ref}")

    def get_frames(self, refs: Sequence[FrameRef]) -> np.ndarray:
        """Embeddings for many refs, row-aligned with `refs`.

        Groups refs by day and loads whole days only when a day is hit
        densely; otherwise seeks individual records.
        """
        if not refs:
            return np.empty((0, 0), dtype=np.float32)
        by_day: dict[tuple[str, date], list[int]] = {}
        for i, ref in enumerate(refs):
            by_day.setdefault((ref.sensor_id, epoch_to_date(ref.clip_start)), []).append(i)
        out: np.ndarray | None = None
        for (sensor_id, day), positions in by_day.items():
            if len(positions) > 200:
                dayset = self.load_day(sensor_id, day)
                for i in positions:
                    vec = dayset.vectors[dayset.index_of(refs[i])]
                    if out is None:
                        out = np.empty((len(refs), len(vec)), dtype=np.float32)
                    out[i] = vec
            else:
                for i in positions:
                    vec, _ = self.get_frame(refs[i])
                    if out is None:
                        out = np.empty((len(refs), len(vec)), dtype=np.float32)
                    out[i] = vec
        assert out is not None
        return out

    def total_frame_count(self) -> int:
        return sum(self.day_frame_count(s, d) for s, d in self.iter_days())

    def iter_all_frames(self) -> Iterable[tuple[FrameRef, np.ndarray]]:
        """Stream every frame of the corpus, day by day, sorted."""
        for sensor_id, day in self.iter_days():
            yield from self.load_day(sensor_id, day)

    def sample_refs(
        self,
        k: int,
        rng: np.random.Generator,
        exclude: set[FrameRef] | None = None,
    ) -> list[FrameRef]:
        """Uniform sample of k distinct frame refs over the whole corpus.

        Samples global record positions, then reads only the 9-byte record
        keys, so it stays cheap on million-frame corpora.
        """
        exclude = exclude or set()
        days = self.iter_days()
        counts = [self.day_frame_count(s, d) for s, d in days]
        total = sum(counts)
        if total - len(exclude) < k:
            # pool too small for rejection sampling: materialize it
            pool = [r for s, d in days for r in self.load_day(s, d).refs if r not in exclude]
            idx = rng.permutation(len(pool))[:k]
            return [pool[i] for i in sorted(idx.tolist())]
        cumulative = np.cumsum([0] + counts)
        chosen: list[FrameRef] = []
        seen: set[FrameRef] = set()
        handles: dict[int, tuple] = {}
        try:
            while len(chosen) < k:
                g = int(rng.integers(0, total))
                day_i = int(np.searchsorted(cumulative, g, side="right")) - 1
                offset = g - int(cumulative[day_i])
                sensor_id, day = days[day_i]
                if day_i not in handles:
                    p = self.day_path(sensor_id, day)
                    dim, _ = read_frameset_header(p)
                    handles[day_i] = (open(p, "rb"), _record_dtype(dim).itemsize)
                fh, rec_size = handles[day_i]
                fh.seek(_HEADER.size + offset * rec_size)
                c, f = struct.unpack("<qB", fh.read(9))
                ref = FrameRef(sensor_id, c, f)
                if ref in exclude or ref in seen:
                    continue
                seen.add(ref)
                chosen.append(ref)
        finally:
            for fh, _ in handles.values():
                fh.close()
        return chosen

    # -- ground truth ----------------------------------------------------

    @property
    def ground_truth_path(self) -> Path:
        return self.root / "ground_truth.jsonl"

    def ground_truth(self) -> GroundTruth:
        if not self.ground_truth_path.exists():
            return GroundTruth()
        return GroundTruth.load(self.ground_truth_path)
