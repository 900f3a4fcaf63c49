"""Synthetic corpus generator: cadence, determinism, planted patterns."""

from __future__ import annotations

from datetime import date

import numpy as np
import pytest

from sonoscope import ConceptSpec, CorpusSpec, TemporalPattern, generate_synthetic_corpus
from sonoscope.frames import day_bounds

from conftest import two_concept_spec


def corpus_bytes(root) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestCadence:
    def test_day_holds_43200_frames(self, small_corpus):
        store, _ = small_corpus
        assert store.day_frame_count("s00", date(2022, 1, 1)) == 43_200

    def test_every_minute_holds_three_clips(self, small_corpus):
        store, _ = small_corpus
        day = store.load_day("s00", date(2022, 1, 1))
        clip_starts = np.unique(day.clip_starts)
        assert clip_starts.size == 4320
        lo, _ = day_bounds(date(2022, 1, 1))
        minutes = (clip_starts - lo) // 60
        values, counts = np.unique(minutes, return_counts=True)
        assert values.tolist() == list(range(1440))
        assert set(counts.tolist()) == {3}

    def test_clips_do_not_overlap(self, small_corpus):
        store, _ = small_corpus
        day = store.load_day("s00", date(2022, 1, 1))
        clip_starts = np.unique(day.clip_starts)
        assert int(np.min(np.diff(clip_starts))) >= 10


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        spec = two_concept_spec(dim=4, seed=5)
        a, b = tmp_path / "a", tmp_path / "b"
        generate_synthetic_corpus(spec, a)
        generate_synthetic_corpus(spec, b)
        files_a, files_b = corpus_bytes(a), corpus_bytes(b)
        assert list(files_a) == list(files_b)
        assert all(files_a[k] == files_b[k] for k in files_a)

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_synthetic_corpus(two_concept_spec(dim=4, seed=5), a)
        generate_synthetic_corpus(two_concept_spec(dim=4, seed=6), b)
        assert corpus_bytes(a) != corpus_bytes(b)


class TestPlantedPatterns:
    def test_night_window_pattern_hits_only_in_window(self, tmp_path):
        # 23:00-23:30 on October days; corpus spans Sep 29 - Oct 2
        spec = CorpusSpec(
            sensors=1,
            days=4,
            dim=4,
            seed=2,
            start_day=date(2021, 9, 29),
            concepts=(
                ConceptSpec(
                    name="nightworks",
                    center=(5.0, 5.0, 0.0, 0.0),
                    stddev=0.4,
                    pattern=TemporalPattern(
                        start_minute=1380, end_minute=1410, months=(10,), rate=1.0
                    ),
                ),
            ),
        )
        store, gt = generate_synthetic_corpus(spec, tmp_path / "c")
        hits = gt.frames_of("nightworks")
        assert hits
        from sonoscope.frames import epoch_to_date

        for ref in hits:
            day = epoch_to_date(ref.timestamp)
            assert day.month == 10
            minute = (ref.timestamp - day_bounds(day)[0]) // 60
            assert 1380 <= minute < 1410
        # both October days are populated
        assert {epoch_to_date(r.timestamp).day for r in hits} == {1, 2}

    def test_planted_frames_cluster_near_center(self, small_corpus):
        store, gt = small_corpus
        day = store.load_day("s00", date(2022, 1, 1))
        refs = day.refs
        positions = {r: i for i, r in enumerate(refs)}
        siren = [positions[r] for r in gt.frames_of("siren") if r in positions]
        assert len(siren) > 100
        center = np.array([4.0] * 4 + [0.0] * 4)
        d_siren = np.linalg.norm(day.vectors[siren] - center, axis=1)
        rng = np.random.default_rng(0)
        background = rng.choice(len(refs), size=500, replace=False)
        d_bg = np.linalg.norm(day.vectors[background] - center, axis=1)
        assert float(np.median(d_siren)) < 0.25 * float(np.median(d_bg))

    def test_rate_thins_hits(self, small_corpus):
        _, gt = small_corpus
        # siren: whole day at rate 0.05 -> about 5% of 43,200
        n = len(gt.frames_of("siren"))
        assert 0.03 * 43_200 < n < 0.07 * 43_200


class TestSpecValidation:
    def test_zero_days_rejected(self):
        with pytest.raises(ValueError):
            CorpusSpec(sensors=1, days=0, dim=4, seed=0, concepts=())

    def test_non_positive_stddev_rejected(self):
        with pytest.raises(ValueError):
            ConceptSpec("x", (1.0, 0.0), stddev=0.0, pattern=TemporalPattern())

    def test_duplicate_centers_rejected(self):
        with pytest.raises(ValueError):
            CorpusSpec(
                sensors=1,
                days=1,
                dim=2,
                seed=0,
                concepts=(
                    ConceptSpec("a", (1.0, 0.0), 0.1, TemporalPattern()),
                    ConceptSpec("b", (1.0, 0.0), 0.1, TemporalPattern()),
                ),
            )
