"""Forest: likelihood semantics against hand-traced trees, training behavior."""

from __future__ import annotations

import numpy as np
import pytest

from sonoscope.errors import DegenerateTrainingError, FormatError
from sonoscope.forest import Forest, Tree, load_forest, save_forest, train_forest


def leaf_tree(value: float) -> Tree:
    return Tree(
        np.array([-1], np.int32),
        np.array([0.0], np.float32),
        np.array([-1], np.int32),
        np.array([-1], np.int32),
        np.array([value], np.float64),
    )


def stump(feature: int, threshold: float, left_value: float, right_value: float) -> Tree:
    return Tree(
        np.array([feature, -1, -1], np.int32),
        np.array([threshold, 0.0, 0.0], np.float32),
        np.array([1, -1, -1], np.int32),
        np.array([2, -1, -1], np.int32),
        np.array([0.0, left_value, right_value], np.float64),
    )


class TestLikelihoodSemantics:
    def test_three_tree_hand_trace(self):
        forest = Forest(
            trees=(stump(0, 0.5, 0.2, 0.8), stump(1, -1.0, 1.0, 0.0), leaf_tree(0.5)),
            dim=2,
            seed=0,
        )
        x = np.array([[0.0, -2.0], [1.0, 0.0]], np.float32)
        got = forest.predict(x)
        # oracle: route each row through each tree by hand
        assert got[0] == pytest.approx((0.2 + 1.0 + 0.5) / 3, abs=1e-6)
        assert got[1] == pytest.approx((0.8 + 0.0 + 0.5) / 3, abs=1e-6)

    def test_batch_equals_single_row_traversal(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((200, 6)).astype(np.float32)
        y = (x[:, 0] + 0.3 * rng.standard_normal(200) > 0).astype(np.int8)
        forest = train_forest(x, y, n_trees=20, seed=5)
        queries = rng.standard_normal((50, 6)).astype(np.float32)
        batch = forest.predict(queries)
        for i in range(50):
            oracle = sum(t.predict_one(queries[i]) for t in forest.trees) / forest.n_trees
            assert batch[i] == pytest.approx(oracle, abs=1e-6)

    def test_all_positive_leaves_give_one(self):
        forest = Forest(trees=(leaf_tree(1.0), leaf_tree(1.0), leaf_tree(1.0)), dim=4, seed=0)
        assert forest.predict(np.zeros((3, 4), np.float32)).tolist() == [1.0, 1.0, 1.0]

    def test_outputs_bounded(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((120, 5)).astype(np.float32)
        y = (rng.random(120) < 0.4).astype(np.int8)
        forest = train_forest(x, y, n_trees=30, seed=2)
        out = forest.predict(rng.standard_normal((500, 5)).astype(np.float32) * 10)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_empty_input_empty_output(self):
        forest = Forest(trees=(leaf_tree(0.3),), dim=4, seed=0)
        assert forest.predict(np.zeros((0, 4), np.float32)).size == 0

    def test_dim_mismatch(self):
        forest = Forest(trees=(leaf_tree(0.3),), dim=4, seed=0)
        with pytest.raises(ValueError, match="dim mismatch"):
            forest.predict(np.zeros((2, 5), np.float32))


class TestTraining:
    def test_separable_1d_data_learned(self):
        x = np.concatenate([np.linspace(0, 1, 20), np.linspace(3, 4, 20)])[:, None].astype(
            np.float32
        )
        y = np.array([0] * 20 + [1] * 20, np.int8)
        forest = train_forest(x, y, seed=1)
        low, high = forest.predict(np.array([[0.5], [3.5]], np.float32))
        assert low < 0.1
        assert high > 0.9

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((100, 8)).astype(np.float32)
        y = (x[:, 2] > 0.2).astype(np.int8)
        q = rng.standard_normal((40, 8)).astype(np.float32)
        a = train_forest(x, y, n_trees=15, seed=9).predict(q)
        b = train_forest(x, y, n_trees=15, seed=9).predict(q)
        c = train_forest(x, y, n_trees=15, seed=10).predict(q)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_identical_embeddings_degenerate(self):
        x = np.ones((30, 4), np.float32)
        y = np.array([0, 1] * 15, np.int8)
        with pytest.raises(DegenerateTrainingError, match="degenerate"):
            train_forest(x, y)

    def test_single_class_degenerate(self):
        x = np.random.default_rng(0).standard_normal((30, 4)).astype(np.float32)
        with pytest.raises(DegenerateTrainingError):
            train_forest(x, np.ones(30, np.int8))

    def test_leaf_values_are_positive_fractions(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((80, 4)).astype(np.float32)
        y = (rng.random(80) < 0.5).astype(np.int8)
        forest = train_forest(x, y, n_trees=10, seed=0)
        for tree in forest.trees:
            leaves = tree.feature < 0
            assert np.all(tree.value[leaves] >= 0.0)
            assert np.all(tree.value[leaves] <= 1.0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((60, 6)).astype(np.float32)
        y = (x[:, 1] > 0).astype(np.int8)
        forest = train_forest(x, y, n_trees=12, seed=3)
        path = tmp_path / "f.npz"
        save_forest(forest, path)
        loaded = load_forest(path)
        q = rng.standard_normal((25, 6)).astype(np.float32)
        assert np.array_equal(forest.predict(q), loaded.predict(q))
        assert loaded.n_trees == 12 and loaded.dim == 6 and loaded.seed == 3

    def test_version_guard(self, tmp_path):
        forest = Forest(trees=(leaf_tree(0.5),), dim=2, seed=0)
        path = tmp_path / "f.npz"
        save_forest(forest, path)
        import numpy as np_

        with np_.load(path) as data:
            arrays = {k: data[k] for k in data.files}
        arrays["format_version"] = np_.array([99], np_.int32)
        with open(path, "wb") as fh:
            np_.savez_compressed(fh, **arrays)
        with pytest.raises(FormatError, match="version"):
            load_forest(path)
