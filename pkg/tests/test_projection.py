"""Projection engine: determinism, quality oracles, steering, lineage."""

from __future__ import annotations

import numpy as np
import pytest

from sonoscope.frames import FrameRef
from sonoscope.projection import (
    Layout,
    project,
    remove_and_reproject,
    reproject_subset,
    silhouette,
    steer,
    trustworthiness,
)

DAY0 = 1_640_995_200


def blobs(centers, per: int, dim: int, stddev: float, seed: int):
    rng = np.random.default_rng(seed)
    vecs, labels = [], []
    for c in centers:
        cc = np.zeros(dim)
        cc[: len(c)] = c
        vecs.append(rng.standard_normal((per, dim)) * stddev + cc)
        labels += [len(labels) // per] * per
    v = np.concatenate(vecs).astype(np.float32)
    refs = [FrameRef("s00", DAY0 + 10 * (i // 10), i % 10) for i in range(v.shape[0])]
    return refs, v, np.array(labels[: v.shape[0]])


class TestProject:
    def test_three_points_give_finite_coords(self):
        refs, v, _ = blobs([(0.0,), (5.0,), (9.0,)], 1, 4, 0.0, 0)
        layout = project((refs, v), n_neighbors=2)
        assert layout.coords.shape == (3, 2)
        assert np.all(np.isfinite(layout.coords))
        assert layout.refs == tuple(refs)

    def test_blob_day_trustworthiness(self):
        scores = []
        for seed in range(5):
            refs, v, _ = blobs([(0,), (20,), (0, 20)], 100, 16, 1.0, seed)
            layout = project((refs, v), seed=seed)
            scores.append(trustworthiness(v, layout.coords, 15))
        assert float(np.mean(scores)) >= 0.8

    def test_deterministic(self):
        refs, v, _ = blobs([(0,), (10,)], 60, 8, 0.7, 1)
        a = project((refs, v), seed=5)
        b = project((refs, v), seed=5)
        assert np.array_equal(a.coords, b.coords)
        c = project((refs, v), seed=6)
        assert not np.array_equal(a.coords, c.coords)

    def test_too_few_frames(self):
        refs, v, _ = blobs([(0.0,)], 1, 4, 0.0, 0)
        with pytest.raises(ValueError, match="at least 2"):
            project((refs, v))

    def test_non_finite_rejected(self):
        refs, v, _ = blobs([(0,), (5,)], 5, 4, 0.2, 0)
        v[3, 1] = np.nan
        with pytest.raises(ValueError, match="finite"):
            project((refs, v), n_neighbors=3)

    def test_n_neighbors_bound(self):
        refs, v, _ = blobs([(0,), (5,)], 4, 4, 0.2, 0)
        with pytest.raises(ValueError, match="n_neighbors"):
            project((refs, v), n_neighbors=8)


class TestLineage:
    def make(self):
        refs, v, _ = blobs([(0,), (8,)], 50, 6, 0.5, 2)
        return refs, v, project((refs, v), seed=0)

    def test_reproject_subset(self):
        refs, v, base = self.make()
        subset = set(refs[:30])
        child = reproject_subset(base, subset, seed=1)
        assert set(child.refs) == subset
        assert child.parent_layout == base.layout_id
        assert np.all(np.isfinite(child.coords))

    def test_reproject_all_refs(self):
        refs, v, base = self.make()
        child = reproject_subset(base, set(refs), seed=1)
        assert set(child.refs) == set(refs)

    def test_subset_local_quality(self):
        # low intrinsic dim so a lone Gaussian blob stays projectable
        refs, v, _ = blobs([(0,), (25,)], 150, 6, 1.0, 3)
        base = project((refs, v), seed=0)
        sub = set(refs[:150])  # one whole blob
        child = reproject_subset(base, sub, seed=0)
        positions = [i for i, r in enumerate(refs) if r in sub]
        assert trustworthiness(v[positions], child.coords, 15) >= 0.8

    def test_foreign_subset_rejected(self):
        refs, v, base = self.make()
        stranger = FrameRef("zz", DAY0, 0)
        with pytest.raises(ValueError, match="outside the layout"):
            reproject_subset(base, {refs[0], stranger}, seed=0)
        with pytest.raises(ValueError, match="at least 2"):
            reproject_subset(base, {refs[0]}, seed=0)

    def test_remove_and_reproject(self):
        refs, v, base = self.make()
        out = remove_and_reproject(base, set(refs[:10]), seed=4)
        assert set(out.refs) == set(refs[10:])
        assert out.parent_layout == base.layout_id

    def test_remove_nothing_keeps_refs(self):
        refs, v, base = self.make()
        out = remove_and_reproject(base, set(), seed=4)
        assert set(out.refs) == set(refs)

    def test_remove_too_much(self):
        refs, v, base = self.make()
        with pytest.raises(ValueError, match="fewer than 2"):
            remove_and_reproject(base, set(refs[:-1]), seed=0)

    def test_removing_stray_blob_keeps_separation(self):
        refs, v, labels = blobs([(0,), (14,), (40,)], 80, 8, 0.6, 5)
        base = project((refs, v), seed=1)
        stray = {refs[i] for i in np.nonzero(labels == 2)[0]}
        out = remove_and_reproject(base, stray, seed=1)
        kept = [i for i, r in enumerate(refs) if r not in stray]
        assert silhouette(out.coords, labels[kept]) > 0


class TestSteering:
    def labeled_blobs(self, seed: int):
        refs, v, labels = blobs([(0,), (6,)], 150, 16, 2.2, seed)
        rng = np.random.default_rng(seed)
        pos = rng.choice(np.nonzero(labels == 0)[0], 30, replace=False)
        neg = rng.choice(np.nonzero(labels == 1)[0], 30, replace=False)
        markings = {refs[int(i)]: "positive" for i in pos}
        markings |= {refs[int(i)]: "negative" for i in neg}
        picked = np.sort(np.concatenate([pos, neg]))
        return refs, v, markings, picked, labels

    def test_silhouette_improves_over_unsteered(self):
        for seed in range(5):
            refs, v, markings, picked, labels = self.labeled_blobs(seed)
            base = project((refs, v), seed=seed)
            steered = steer((refs, v), markings, seed=seed)
            s_base = silhouette(base.coords[picked], labels[picked])
            s_steered = silhouette(steered.coords[picked], labels[picked])
            assert s_steered > s_base

    def test_neutral_steering_identical_to_project(self):
        refs, v, markings, _, _ = self.labeled_blobs(9)
        neutral = steer((refs, v), markings, seed=2, attract=1.0, repel=1.0)
        base = project((refs, v), seed=2)
        assert np.array_equal(neutral.coords, base.coords)

    def test_label_validation(self):
        refs, v, _ = blobs([(0,), (5,)], 20, 4, 0.3, 0)
        with pytest.raises(ValueError, match="at least one label"):
            steer((refs, v), {})
        with pytest.raises(ValueError, match="both positive and negative"):
            steer((refs, v), {refs[0]: "positive"})
        with pytest.raises(ValueError, match="absent"):
            steer((refs, v), {FrameRef("zz", DAY0, 0): "positive", refs[0]: "negative"})
        with pytest.raises(ValueError, match="positive\\|negative"):
            steer((refs, v), {refs[0]: "up", refs[1]: "negative"})

    def test_steering_recorded_in_params(self):
        refs, v, markings, _, _ = self.labeled_blobs(3)
        steered = steer((refs, v), markings, seed=1, concept="siren")
        assert steered.params["steering"] == {
            "concept": "siren",
            "attract": 0.3,
            "repel": 3.0,
        }


class TestQualityOracles:
    def test_isometric_copy_scores_one(self):
        pts = np.random.default_rng(0).standard_normal((100, 2))
        assert trustworthiness(pts, 3.0 * pts + 7.0, 15) == pytest.approx(1.0)

    def test_random_permutation_scores_near_half(self):
        pts = np.random.default_rng(0).standard_normal((100, 2))
        vals = []
        for seed in range(10):
            perm = np.random.default_rng(seed).permutation(100)
            vals.append(trustworthiness(pts, pts[perm], 15))
        assert abs(float(np.mean(vals)) - 0.5) < 0.1

    def test_k_bounds(self):
        pts = np.zeros((10, 2))
        with pytest.raises(ValueError):
            trustworthiness(pts, pts, 10)
        with pytest.raises(ValueError):
            trustworthiness(pts, pts, 5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            trustworthiness(np.zeros((5, 2)), np.zeros((6, 2)), 2)

    def test_silhouette_separated_vs_mixed(self):
        rng = np.random.default_rng(1)
        tight = np.concatenate([rng.standard_normal((30, 2)) * 0.1,
                                rng.standard_normal((30, 2)) * 0.1 + 10.0])
        labels = np.array([0] * 30 + [1] * 30)
        assert silhouette(tight, labels) > 0.9
        mixed = rng.standard_normal((60, 2))
        assert abs(silhouette(mixed, labels)) < 0.3

    def test_silhouette_needs_two_classes(self):
        with pytest.raises(ValueError, match="two classes"):
            silhouette(np.zeros((4, 2)), np.zeros(4))


class TestSerialization:
    def test_layout_json_shape(self):
        refs, v, _ = blobs([(0,), (5,)], 10, 4, 0.2, 0)
        layout = project((refs, v), n_neighbors=5, seed=1)
        obj = layout.to_json()
        assert obj["layout_id"] == layout.layout_id
        assert obj["parent"] is None
        assert len(obj["points"]) == 20
        first = obj["points"][0]
        assert set(first) == {"sensor", "clip_start", "frame_index", "x", "y"}
