"""Random-forest classifier for concept prototypes.

Binary forests over embedding components: Gini-impurity threshold splits,
unlimited depth, sqrt(dim) features considered per split, bootstrap
resampling, all driven by a seeded generator. Every leaf stores the
fraction of positive training points it holds; the model's likelihood for
an embedding is the exact mean of the per-tree leaf fractions.

Trees are stored as flat arrays (feature, threshold, left, right, value)
so batch prediction is a vectorized pointer chase instead of per-row
recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateTrainingError, FormatError

FOREST_FORMAT_VERSION = 1
DEFAULT_TREES = 100


@dataclass(frozen=True)
class Tree:
    """feature[i] >= 0: internal node splitting on x[feature] <= threshold;
    feature[i] == -1: leaf with value = positive fraction."""

    feature: np.ndarray    # (nodes,) int32
    threshold: np.ndarray  # (nodes,) float32
    left: np.ndarray       # (nodes,) int32
    right: np.ndarray      # (nodes,) int32
    value: np.ndarray      # (nodes,) float64

    def predict_one(self, x: np.ndarray) -> float:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = int(self.left[node])
            else:
                node = int(self.right[node])
        return float(self.value[node])

    def predict(self, x: np.ndarray) -> np.ndarray:
        rows = np.arange(x.shape[0])
        nodes = np.zeros(x.shape[0], dtype=np.int32)
        while True:
            feats = self.feature[nodes]
            active = feats >= 0
            if not active.any():
                return self.value[nodes]
            go_left = np.zeros(x.shape[0], dtype=bool)
            go_left[active] = (
                x[rows[active], feats[active]] <= self.threshold[nodes[active]]
            )
            nodes = np.where(active, np.where(go_left, self.left[nodes], self.right[nodes]), nodes)


class _TreeBuilder:
    def __init__(self, x: np.ndarray, y: np.ndarray, n_features: int, rng: np.random.Generator):
        self.x = x
        self.y = y
        self.n_features = n_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, idx: np.ndarray) -> int:
        node = self._new_node()
        y = self.y[idx]
        pos = int(y.sum())
        self.value[node] = pos / idx.size
        if pos == 0 or pos == idx.size:
            return node
        split = self._best_split(idx)
        if split is None:
            return node
        feat, thr = split
        mask = self.x[idx, feat] <= thr
        left = self.build(idx[mask])
        right = self.build(idx[~mask])
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = left
        self.right[node] = right
        return node

    def _best_split(self, idx: np.ndarray) -> tuple[int, float] | None:
        dim = self.x.shape[1]
        candidates = self.rng.choice(dim, size=self.n_features, replace=False)
        y = self.y[idx].astype(np.float64)
        n = idx.size
        total_pos = y.sum()
        best: tuple[float, int, float] | None = None
        for feat in candidates:
            vals = self.x[idx, feat]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            cuts = np.nonzero(sv[:-1] < sv[1:])[0]
            if cuts.size == 0:
                continue
            prefix_pos = np.cumsum(y[order])
            n_left = cuts + 1
            pos_left = prefix_pos[cuts]
            n_right = n - n_left
            pos_right = total_pos - pos_left
            p_l = pos_left / n_left
            p_r = pos_right / n_right
            weighted = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
            at = int(np.argmin(weighted))
            score = float(weighted[at])
            if best is None or score < best[0]:
                thr = float((sv[cuts[at]] + sv[cuts[at] + 1]) / 2.0)
                best = (score, int(feat), thr)
        if best is None:
            return None
        return best[1], best[2]

    def to_tree(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int32),
            np.asarray(self.threshold, dtype=np.float32),
            np.asarray(self.left, dtype=np.int32),
            np.asarray(self.right, dtype=np.int32),
            np.asarray(self.value, dtype=np.float64),
        )


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    dim: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, embeddings: np.ndarray) -> np.ndarray:
        """Mean per-tree leaf fraction for each row, in [0, 1]."""
        embeddings = np.asarray(embeddings, dtype=np.float32)
        if embeddings.ndim == 1:
            embeddings = embeddings[None, :]
        if embeddings.shape[0] == 0:
            return np.zeros(0, dtype=np.float64)
        if embeddings.shape[1] != self.dim:
            raise ValueError(
                f"dim mismatch: embeddings have {embeddings.shape[1]}, forest has {self.dim}"
            )
        acc = np.zeros(embeddings.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict(embeddings)
        return acc / self.n_trees


def train_forest(
    x: np.ndarray,
    y: np.ndarray,
    n_trees: int = DEFAULT_TREES,
    seed: int = 0,
) -> Forest:
    """Fit a bootstrap forest on float32 rows x with binary labels y."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int8)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("x must be (n, dim) with aligned labels y")
    if x.shape[0] < 2 or len(np.unique(y)) < 2:
        raise DegenerateTrainingError("training needs at least one point of each class")
    if np.unique(x, axis=0).shape[0] == 1:
        raise DegenerateTrainingError(
            "degenerate training data: all embeddings identical across classes"
        )
    n, dim = x.shape
    n_features = max(1, int(np.sqrt(dim)))
    seeds = np.random.SeedSequence([seed, 0x464F]).spawn(n_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.Generator(np.random.PCG64(tree_seed))
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(x, y, n_features, rng)
        builder.build(np.sort(sample))
        trees.append(builder.to_tree())
    return Forest(tuple(trees), dim, seed)


def save_forest(forest: Forest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {
        "format_version": np.array([FOREST_FORMAT_VERSION], dtype=np.int32),
        "meta": np.array([forest.n_trees, forest.dim, forest.seed], dtype=np.int64),
    }
    for t, tree in enumerate(forest.trees):
        arrays[f"t{t}_feature"] = tree.feature
        arrays[f"t{t}_threshold"] = tree.threshold
        arrays[f"t{t}_left"] = tree.left
        arrays[f"t{t}_right"] = tree.right
        arrays[f"t{t}_value"] = tree.value
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def load_forest(path: str | Path) -> Forest:
    with np.load(path) as data:
        if "format_version" not in data:
            raise FormatError(f"not a forest file: {path}")
        version = int(data["format_version"][0])
        if version != FOREST_FORMAT_VERSION:
            raise FormatError(
                f"forest format version mismatch: file has {version}, "
                f"supported {FOREST_FORMAT_VERSION}"
            )
        n_trees, dim, seed = (int(v) for v in data["meta"])
        trees = tuple(
            Tree(
                data[f"t{t}_feature"],
                data[f"t{t}_threshold"],
                data[f"t{t}_left"],
                data[f"t{t}_right"],
                data[f"t{t}_value"],
            )
            for t in range(n_trees)
        )
    return Forest(trees, dim, seed)
