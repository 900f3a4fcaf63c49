"""2-D layouts of frame embeddings for the day view.

The pipeline is a k-nearest-neighbor graph with fuzzy edge weights
followed by a stochastic neighbor-embedding style SGD layout (numba
kernel), seeded end to end: the same frames, parameters, and seed always
give bit-identical coordinates.

Label steering rescales pairwise distances before graph construction:
same-positive pairs shrink by `attract`, opposite-polarity pairs stretch
by `repel`. With attract = repel = 1 the graph, and therefore the layout,
is identical to the unsteered one.

Exact neighbor search is used up to 8,192 points; larger inputs fall back
to the approximate index so whole sensor-days stay tractable.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from numba import njit

from .frames import NEGATIVE, POSITIVE, DayFrameSet, FrameRef
from .index import IndexParams, build_index, knn_query

DEFAULT_N_NEIGHBORS = 15
DEFAULT_ITERATIONS = 200
DEFAULT_ATTRACT = 0.3
DEFAULT_REPEL = 3.0
_EXACT_LIMIT = 8192
_NEGATIVE_RATE = 5
# force/distance curve fitted for min_dist 0.1, spread 1.0
_CURVE_A = 1.5769434603113077
_CURVE_B = 0.8950608779109733


@dataclass(frozen=True)
class Layout:
    layout_id: str
    parent_layout: str | None
    refs: tuple[FrameRef, ...]
    coords: np.ndarray  # (n, 2) float64
    params: dict
    _vectors: np.ndarray = field(repr=False)  # kept for reproject/remove

    def frames(self) -> tuple[list[FrameRef], np.ndarray]:
        """The layout's frames in a shape project/steer accept directly."""
        return list(self.refs), self._vectors

    def to_json(self) -> dict:
        return {
            "layout_id": self.layout_id,
            "parent": self.parent_layout,
            "params": self.params,
            "points": [
                {
                    "sensor": r.sensor_id,
                    "clip_start": r.clip_start,
                    "frame_index": r.frame_index,
                    "x": float(x),
                    "y": float(y),
                }
                for r, (x, y) in zip(self.refs, self.coords)
            ],
        }


def _coerce(frames) -> tuple[list[FrameRef], np.ndarray]:
    if isinstance(frames, DayFrameSet):
        return list(frames.refs), np.asarray(frames.vectors, dtype=np.float32)
    if isinstance(frames, tuple) and len(frames) == 2:
        refs, vectors = frames
        return list(refs), np.asarray(vectors, dtype=np.float32)
    pairs = list(frames)
    refs = [r for r, _ in pairs]
    vectors = np.stack([np.asarray(v, dtype=np.float32) for _, v in pairs]) if pairs else np.zeros((0, 1), np.float32)
    return refs, vectors


# ---------------------------------------------------------------------------
# neighbor graph
# ---------------------------------------------------------------------------


def _exact_knn(vectors: np.ndarray, k: int, scale: "_PairScaler | None") -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the k nearest others, chunked exact scan."""
    n = vectors.shape[0]
    v64 = vectors.astype(np.float64)
    norms = np.einsum("ij,ij->i", v64, v64)
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    chunk = max(1, min(n, 8 * 1024 * 1024 // max(n, 1)))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d2 = norms[lo:hi, None] + norms[None, :] - 2.0 * (v64[lo:hi] @ v64.T)
        np.maximum(d2, 0.0, out=d2)
        if scale is not None:
            scale.apply(d2, lo, hi)
        for r in range(hi - lo):
            d2[r, lo + r] = np.inf  # never own neighbor
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        rows = np.arange(hi - lo)[:, None]
        order = np.argsort(d2[rows, part], axis=1, kind="stable")
        idx[lo:hi] = part[rows, order]
        dist[lo:hi] = np.sqrt(d2[rows, idx[lo:hi]])
    return idx, dist


def _ann_knn(vectors: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    refs = [FrameRef("p", 10 * (i // 10), i % 10) for i in range(vectors.shape[0])]
    handle = build_index(
        list(zip(refs, vectors)),
        IndexParams(graph_degree=16, construction_beam=100, seed=seed),
    )
    pos = {r: i for i, r in enumerate(refs)}
    n = vectors.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        hits = knn_query(handle, vectors[i], k + 1, beam=max(64, 2 * k))
        hits = [h for h in hits if pos[h.ref] != i][:k]
        while len(hits) < k:  # duplicates may shadow; pad with self-distance 0 peers
            hits.append(hits[-1])
        idx[i] = [pos[h.ref] for h in hits]
        dist[i] = [h.distance for h in hits]
    return idx, dist


class _PairScaler:
    """Steering: multiplies squared distances for labeled pairs in place."""

    def __init__(self, n: int, positives: np.ndarray, negatives: np.ndarray,
                 attract: float, repel: float):
        self.polarity = np.zeros(n, dtype=np.int8)  # 0 none, 1 pos, 2 neg
        self.polarity[positives] = 1
        self.polarity[negatives] = 2
        self.attract2 = attract * attract
        self.repel2 = repel * repel

    def apply(self, d2: np.ndarray, lo: int, hi: int) -> None:
        rows = self.polarity[lo:hi]
        labeled_rows = np.nonzero(rows != 0)[0]
        if labeled_rows.size == 0:
            return
        cols = self.polarity
        labeled_cols = np.nonzero(cols != 0)[0]
        sub = d2[np.ix_(labeled_rows, labeled_cols)]
        row_pol = rows[labeled_rows][:, None]
        col_pol = cols[labeled_cols][None, :]
        same_pos = (row_pol == 1) & (col_pol == 1)
        opposite = row_pol != col_pol
        sub[same_pos] *= self.attract2
        sub[opposite] *= self.repel2
        d2[np.ix_(labeled_rows, labeled_cols)] = sub


def _fuzzy_weights(dist: np.ndarray) -> np.ndarray:
    """Per-row calibrated exponential weights (UMAP-style smooth kNN)."""
    n, k = dist.shape
    rho = dist[:, 0]
    psi = np.maximum(dist - rho[:, None], 0.0)
    target = np.log2(k)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    sigma = np.ones(n)
    for _ in range(64):
        val = np.exp(-psi / np.maximum(sigma[:, None], 1e-12)).sum(axis=1)
        too_high = val > target
        hi = np.where(too_high, sigma, hi)
        lo = np.where(too_high, lo, sigma)
        sigma = np.where(np.isinf(hi), sigma * 2.0, (lo + hi) / 2.0)
    return np.exp(-psi / np.maximum(sigma[:, None], 1e-12))


def _symmetrize(idx: np.ndarray, w: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fuzzy union P + P.T - P*P.T as a deduplicated edge list."""
    k = idx.shape[1]
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = idx.reshape(-1)
    vals = w.reshape(-1)
    forward: dict[tuple[int, int], float] = {}
    for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        forward[(r, c)] = v
    merged: dict[tuple[int, int], float] = {}
    for (r, c), v in forward.items():
        back = forward.get((c, r), 0.0)
        key = (r, c) if r < c else (c, r)
        if key not in merged:
            merged[key] = v + back - v * back
    items = sorted(merged.items())
    head = np.array([a for (a, _), _ in items], dtype=np.int64)
    tail = np.array([b for (_, b), _ in items], dtype=np.int64)
    weight = np.array([v for _, v in items], dtype=np.float64)
    return head, tail, weight


# ---------------------------------------------------------------------------
# layout optimization
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _optimize(coords, head, tail, epochs_per_sample, n_epochs, a, b, rng_state):
    n = coords.shape[0]
    n_edges = head.shape[0]
    next_sample = epochs_per_sample.copy()
    next_neg = epochs_per_sample / _NEGATIVE_RATE
    neg_progress = next_neg.copy()
    state = rng_state
    for epoch in range(n_epochs):
        lr = 1.0 * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_sample[e] > epoch:
                continue
            i = head[e]
            j = tail[e]
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
            else:
                coeff = 0.0
            gx = min(4.0, max(-4.0, coeff * dx)) * lr
            gy = min(4.0, max(-4.0, coeff * dy)) * lr
            coords[i, 0] += gx
            coords[i, 1] += gy
            coords[j, 0] -= gx
            coords[j, 1] -= gy
            next_sample[e] += epochs_per_sample[e]

            n_negs = int((epoch - neg_progress[e]) / next_neg[e]) + 1
            for _ in range(n_negs):
                state = state * 6364136223846793005 + 1442695040888963407
                k = int((state >> 33) % n)
                if k == i:
                    continue
                dx = coords[i, 0] - coords[k, 0]
                dy = coords[i, 1] - coords[k, 1]
                d2 = dx * dx + dy * dy
                coeff = (2.0 * b) / ((0.001 + d2) * (a * d2**b + 1.0))
                gx = min(4.0, max(-4.0, coeff * dx)) * lr
                gy = min(4.0, max(-4.0, coeff * dy)) * lr
                coords[i, 0] += gx
                coords[i, 1] += gy
            neg_progress[e] += n_negs * next_neg[e]
    return coords


def _pca_init(vectors: np.ndarray, seed: int) -> np.ndarray:
    v = vectors.astype(np.float64)
    centered = v - v.mean(axis=0)
    if centered.shape[0] <= 2 or float(np.abs(centered).max()) == 0.0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x696E])))
        return rng.standard_normal((vectors.shape[0], 2)) * 1e-3
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    basis = vt[:2]
    # svd sign is arbitrary; orient each axis by its largest component
    for r in range(basis.shape[0]):
        peak = np.argmax(np.abs(basis[r]))
        if basis[r, peak] < 0:
            basis[r] = -basis[r]
    coords = centered @ basis.T
    span = np.abs(coords).max()
    if span > 0:
        coords = coords / span * 10.0
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x696E])))
    return coords + rng.standard_normal(coords.shape) * 1e-4


def _layout(
    refs: list[FrameRef],
    vectors: np.ndarray,
    n_neighbors: int,
    iterations: int,
    seed: int,
    scaler: _PairScaler | None,
    params: dict,
    parent: str | None,
) -> Layout:
    n = len(refs)
    if n < 2:
        raise ValueError("projection needs at least 2 frames")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("embeddings must be finite")
    if n_neighbors >= n:
        raise ValueError(f"n_neighbors must be below the frame count ({n})")
    k = n_neighbors
    if scaler is None and n > _EXACT_LIMIT:
        idx, dist = _ann_knn(vectors, k, seed)
    else:
        idx, dist = _exact_knn(vectors, k, scaler)
    weights = _fuzzy_weights(dist)
    head, tail, weight = _symmetrize(idx, weights, n)
    coords = np.ascontiguousarray(_pca_init(vectors, seed))
    max_w = float(weight.max())
    keep = weight >= max_w / 1e4
    head, tail, weight = head[keep], tail[keep], weight[keep]
    epochs_per_sample = max_w / weight
    rng_state = np.uint64(np.random.SeedSequence([seed, 0x5347]).generate_state(1)[0])
    coords = _optimize(
        coords, head, tail, epochs_per_sample, iterations,
        _CURVE_A, _CURVE_B, np.int64(rng_state & np.uint64(0x7FFFFFFFFFFFFFFF)),
    )
    return Layout(
        layout_id=uuid.uuid4().hex,
        parent_layout=parent,
        refs=tuple(refs),
        coords=np.asarray(coords, dtype=np.float64),
        params=params,
        _vectors=vectors,
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def project(
    frames,
    n_neighbors: int = DEFAULT_N_NEIGHBORS,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> Layout:
    refs, vectors = _coerce(frames)
    params = {"n_neighbors": n_neighbors, "iterations": iterations, "seed": seed, "steering": None}
    return _layout(refs, vectors, n_neighbors, iterations, seed, None, params, None)


def reproject_subset(layout: Layout, subset: Iterable[FrameRef], seed: int) -> Layout:
    subset = set(subset)
    if not subset <= set(layout.refs):
        foreign = sorted(subset - set(layout.refs))[:3]
        raise ValueError(f"subset contains frames outside the layout: {foreign}")
    if len(subset) < 2:
        raise ValueError("subset must contain at least 2 frames")
    positions = [i for i, r in enumerate(layout.refs) if r in subset]
    refs = [layout.refs[i] for i in positions]
    vectors = layout._vectors[positions]
    params = dict(layout.params, seed=seed)
    n_neighbors = min(params["n_neighbors"], len(refs) - 1)
    params["n_neighbors"] = n_neighbors
    return _layout(refs, vectors, n_neighbors, params["iterations"], seed, None, params,
                   layout.layout_id)


def remove_and_reproject(layout: Layout, excluded: Iterable[FrameRef], seed: int) -> Layout:
    excluded = set(excluded)
    if not excluded <= set(layout.refs):
        foreign = sorted(excluded - set(layout.refs))[:3]
        raise ValueError(f"excluded frames outside the layout: {foreign}")
    remainder = [r for r in layout.refs if r not in excluded]
    if len(remainder) < 2:
        raise ValueError("exclusion leaves fewer than 2 frames")
    return reproject_subset(layout, remainder, seed)


def steer(
    frames,
    labels: Mapping[FrameRef, str],
    n_neighbors: int = DEFAULT_N_NEIGHBORS,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    attract: float = DEFAULT_ATTRACT,
    repel: float = DEFAULT_REPEL,
    concept: str | None = None,
) -> Layout:
    refs, vectors = _coerce(frames)
    if not labels:
        raise ValueError("steering needs at least one label")
    position = {r: i for i, r in enumerate(refs)}
    missing = [r for r in labels if r not in position]
    if missing:
        raise ValueError(f"labels reference frames absent from the input: {sorted(missing)[:3]}")
    bad = {v for v in labels.values() if v not in (POSITIVE, NEGATIVE)}
    if bad:
        raise ValueError(f"labels must be positive|negative, got {sorted(bad)}")
    positives = np.array(sorted(position[r] for r, v in labels.items() if v == POSITIVE), np.int64)
    negatives = np.array(sorted(position[r] for r, v in labels.items() if v == NEGATIVE), np.int64)
    if positives.size == 0 or negatives.size == 0:
        raise ValueError("steering needs both positive and negative labels")
    if len(refs) > _EXACT_LIMIT:
        raise ValueError(f"steering is limited to {_EXACT_LIMIT} frames; reproject a subset first")
    scaler = _PairScaler(len(refs), positives, negatives, attract, repel)
    params = {
        "n_neighbors": n_neighbors,
        "iterations": iterations,
        "seed": seed,
        "steering": {"concept": concept, "attract": attract, "repel": repel},
    }
    return _layout(refs, vectors, n_neighbors, iterations, seed, scaler, params, None)


# ---------------------------------------------------------------------------
# quality oracles
# ---------------------------------------------------------------------------


def trustworthiness(high: np.ndarray, low: np.ndarray, k: int) -> float:
    """Penalty-based score in [0,1]: low-dimensional neighbors that are not
    high-dimensional neighbors reduce it toward 0."""
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    if high.shape[0] != low.shape[0]:
        raise ValueError("high and low point counts differ")
    n = high.shape[0]
    if not 0 < k < n / 2:
        raise ValueError(f"k must be in (0, n/2) with n={n}")

    def sq(m):
        norms = np.einsum("ij,ij->i", m, m)
        d = norms[:, None] + norms[None, :] - 2.0 * (m @ m.T)
        np.fill_diagonal(d, np.inf)
        return d

    d_high = sq(high)
    d_low = sq(low)
    # rank of j among i's high-dim neighbors (1 = nearest)
    order_high = np.argsort(d_high, axis=1, kind="stable")
    ranks = np.empty((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    ranks[rows, order_high] = np.arange(n)[None, :] + 1
    low_nn = np.argsort(d_low, axis=1, kind="stable")[:, :k]
    high_nn = order_high[:, :k]
    penalty = 0.0
    for i in range(n):
        known = set(high_nn[i].tolist())
        for j in low_nn[i]:
            if int(j) not in known:
                penalty += ranks[i, j] - k
    return float(1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty)


def silhouette(coords: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over points, two or more classes, Euclidean."""
    coords = np.asarray(coords, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("silhouette needs at least two classes")
    n = coords.shape[0]
    norms = np.einsum("ij,ij->i", coords, coords)
    d = np.sqrt(np.maximum(norms[:, None] + norms[None, :] - 2.0 * coords @ coords.T, 0.0))
    scores = np.zeros(n)
    for i in range(n):
        same = labels == labels[i]
        n_same = int(same.sum())
        if n_same <= 1:
            scores[i] = 0.0
            continue
        a = d[i, same].sum() / (n_same - 1)
        b = min(
            float(d[i, labels == other].mean())
            for other in classes
            if other != labels[i]
        )
        scores[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(scores.mean())
