"""Similarity index: brute-force oracle, recall canary, persistence, filters."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from sonoscope.errors import FormatError
from sonoscope.frames import FrameRef
from sonoscope.index import (
    INDEX_MAGIC,
    AnnIndex,
    IndexParams,
    brute_force_knn,
    build_index,
    knn_query,
    load_index,
    save_index,
)

DAY0 = 1_640_995_200


def gaussian_frames(n: int, dim: int, seed: int, sensor: str = "s00"):
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((n, dim)).astype(np.float32)
    return [
        (FrameRef(sensor, DAY0 + 10 * (i // 10), i % 10), vecs[i]) for i in range(n)
    ], vecs


class TestBruteForceOracle:
    def test_pythagorean_triangle(self):
        frames = [
            (FrameRef("s", DAY0, 0), np.array([3.0, 4.0], np.float32)),
            (FrameRef("s", DAY0, 1), np.array([1.0, 0.0], np.float32)),
            (FrameRef("s", DAY0, 2), np.array([0.0, 0.5], np.float32)),
        ]
        hits = brute_force_knn(frames, np.zeros(2, np.float32), 3)
        assert [h.ref.frame_index for h in hits] == [2, 1, 0]
        assert hits[2].distance == pytest.approx(5.0)

    def test_single_frame_returns_itself(self):
        frames = [(FrameRef("s", DAY0, 0), np.array([1.0, 2.0], np.float32))]
        hits = brute_force_knn(frames, np.array([9.0, 9.0], np.float32), 1)
        assert hits[0].ref == frames[0][0]

    def test_duplicate_vectors_tie_break_deterministic(self):
        v = np.array([1.0, 1.0], np.float32)
        frames = [
            (FrameRef("s", DAY0 + 20, 5), v),
            (FrameRef("s", DAY0, 7), v),
            (FrameRef("s", DAY0, 2), v),
        ]
        hits = brute_force_knn(frames, v, 3)
        assert [(h.ref.clip_start, h.ref.frame_index) for h in hits] == [
            (DAY0, 2),
            (DAY0, 7),
            (DAY0 + 20, 5),
        ]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            brute_force_knn([], np.zeros(2, np.float32), 1)


class TestIndexQueries:
    def test_count_one_index(self):
        frames, _ = gaussian_frames(1, 8, 0)
        idx = build_index(frames)
        assert idx.count == 1
        hits = knn_query(idx, np.zeros(8, np.float32), 1)
        assert hits[0].ref == frames[0][0]

    def test_small_corpus_exact_match_with_oracle(self):
        # 1,000 frames stays on the exact path: results equal brute force
        frames, _ = gaussian_frames(1000, 16, 1)
        idx = build_index(frames)
        q = np.random.default_rng(2).standard_normal(16).astype(np.float32)
        hits = knn_query(idx, q, 10)
        oracle = brute_force_knn(frames, q, 10)
        assert [(h.ref, pytest.approx(h.distance)) for h in oracle] == [
            (h.ref, h.distance) for h in hits
        ]

    def test_recall_canary_on_graph_path(self):
        # cheap regression guard; the acceptance suite runs the full-size bar
        frames, _ = gaussian_frames(6000, 16, 3)
        idx = build_index(frames, IndexParams(seed=0))
        recalls = []
        for s in range(3):
            q = np.random.default_rng(50 + s).standard_normal(16).astype(np.float32)
            truth = {h.ref for h in brute_force_knn(frames, q, 100)}
            got = {h.ref for h in knn_query(idx, q, 100)}
            recalls.append(len(truth & got) / 100)
        assert float(np.mean(recalls)) >= 0.85

    def test_distances_monotone_and_recomputable(self):
        frames, vecs = gaussian_frames(5000, 12, 4)
        idx = build_index(frames, IndexParams(seed=1))
        by_ref = {ref: v for ref, v in frames}
        q = np.random.default_rng(9).standard_normal(12).astype(np.float32)
        for k in (1, 17, 300, 2000):
            hits = knn_query(idx, q, k)
            assert len(hits) == k
            dists = [h.distance for h in hits]
            assert dists == sorted(dists)
            for h in hits[:50]:
                exact = float(
                    np.linalg.norm(by_ref[h.ref].astype(np.float64) - q.astype(np.float64))
                )
                assert abs(h.distance - exact) <= 1e-5 * max(exact, 1e-12)

    def test_filter_soundness(self):
        frames, _ = gaussian_frames(3000, 8, 5, sensor="s00")
        frames = [
            (FrameRef("s%02d" % (i % 4), r.clip_start, r.frame_index), v)
            for i, (r, v) in enumerate(frames)
        ]
        idx = build_index(frames)
        q = np.random.default_rng(1).standard_normal(8).astype(np.float32)
        pool = {h.ref for h in knn_query(idx, q, len(frames))}
        hits = knn_query(idx, q, 40, filter=lambda r: r.sensor_id == "s02")
        assert hits
        assert all(h.ref.sensor_id == "s02" for h in hits)
        assert {h.ref for h in hits} <= pool

    def test_build_determinism(self):
        frames, _ = gaussian_frames(2000, 8, 6)
        a = build_index(frames, IndexParams(seed=7))
        b = build_index(frames, IndexParams(seed=7))
        assert np.array_equal(a.adj, b.adj)
        assert np.array_equal(a.levels, b.levels)
        assert a.entry == b.entry

    def test_errors(self):
        frames, _ = gaussian_frames(50, 8, 7)
        idx = build_index(frames)
        with pytest.raises(ValueError, match="k must be"):
            knn_query(idx, np.zeros(8, np.float32), 0)
        with pytest.raises(ValueError, match="dim mismatch"):
            knn_query(idx, np.zeros(5, np.float32), 1)
        with pytest.raises(ValueError):
            build_index([])
        with pytest.raises(ValueError, match="dim mismatch"):
            build_index(
                [
                    (FrameRef("s", DAY0, 0), np.zeros(3, np.float32)),
                    (FrameRef("s", DAY0, 1), np.zeros(4, np.float32)),
                ]
            )


class TestPersistence:
    def build(self, tmp_path):
        frames, _ = gaussian_frames(1500, 8, 8)
        idx = build_index(frames, IndexParams(seed=2), scope={"sensor": "s00", "year": 2022})
        path = tmp_path / "x.urix"
        save_index(idx, path)
        return frames, idx, path

    def test_save_load_identical_results(self, tmp_path):
        frames, idx, path = self.build(tmp_path)
        loaded = load_index(path)
        assert loaded.scope == {"sensor": "s00", "year": 2022}
        assert loaded.count == idx.count
        for s in range(5):
            q = np.random.default_rng(s).standard_normal(8).astype(np.float32)
            a = [(h.ref, h.distance) for h in knn_query(idx, q, 25)]
            b = [(h.ref, h.distance) for h in knn_query(loaded, q, 25)]
            assert a == b

    def test_header_fields(self, tmp_path):
        _, idx, path = self.build(tmp_path)
        magic, version, dim, count = struct.unpack_from("<4sIIQ", path.read_bytes())
        assert magic == INDEX_MAGIC == b"URIX"
        assert version == 1
        assert (dim, count) == (8, 1500)

    def test_bad_magic(self, tmp_path):
        _, _, path = self.build(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="bad magic"):
            load_index(path)

    def test_version_mismatch(self, tmp_path):
        _, _, path = self.build(tmp_path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 4, 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="version"):
            load_index(path)

    def test_truncation(self, tmp_path):
        _, _, path = self.build(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[: int(len(raw) * 0.7)])
        with pytest.raises(FormatError, match="truncated"):
            load_index(path)
