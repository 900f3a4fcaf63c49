"""Clustering backends: a divisive hierarchy of a day's frames and a
density clustering used for representative-frame extraction.

The hierarchy splits nodes with seeded 2-means down to max_depth, never
creating children below min_cluster_size. Days above 20,000 frames are
first condensed to 2,000 k-means micro-centroids; the tree is built over
centroids and members are attached afterwards, keeping day loads
interactive without O(n^2) memory.

Density clustering follows standard core/border/noise semantics. Cluster
membership is permutation-stable: clusters are connected components of
the core-point graph, and border points join their nearest core (ties
broken by the core's coordinates), so input order never matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import DayFrameSet, FrameRef

NOISE = -1
MICRO_CLUSTER_THRESHOLD = 20_000
MICRO_CLUSTER_COUNT = 2_000
DEFAULT_MAX_DEPTH = 4
DEFAULT_MIN_CLUSTER_SIZE = 10


@dataclass
class ClusterNode:
    node_id: int
    parent: int | None
    children: tuple[int, ...]
    members: np.ndarray  # positions into the tree's refs, sorted
    centroid: np.ndarray

    @property
    def size(self) -> int:
        return int(self.members.size)


@dataclass
class ClusterTree:
    refs: list[FrameRef]
    vectors: np.ndarray
    nodes: dict[int, ClusterNode]
    root_id: int = 0
    decoration: dict[int, dict[str, float]] = field(default_factory=dict)

    def node(self, node_id: int) -> ClusterNode:
        if node_id not in self.nodes:
            raise KeyError(f"unknown cluster node: {node_id}")
        return self.nodes[node_id]

    def select_node(self, node_id: int) -> set[FrameRef]:
        return {self.refs[int(p)] for p in self.node(node_id).members}

    def depth_of(self, node_id: int) -> int:
        depth = 0
        node = self.node(node_id)
        while node.parent is not None:
            node = self.nodes[node.parent]
            depth += 1
        return depth

    def to_json(self) -> dict:
        def render(node_id: int) -> dict:
            node = self.nodes[node_id]
            return {
                "id": node_id,
                "size": node.size,
                "decoration": self.decoration.get(node_id, {}),
                "children": [render(c) for c in node.children],
            }

        return render(self.root_id)


def _kmeans_assign(x: np.ndarray, centroids: np.ndarray, chunk: int = 16_384) -> np.ndarray:
    c_norms = np.einsum("ij,ij->i", centroids, centroids)
    out = np.empty(x.shape[0], dtype=np.int64)
    for lo in range(0, x.shape[0], chunk):
        block = x[lo : lo + chunk]
        scores = c_norms[None, :] - 2.0 * (block @ centroids.T)
        out[lo : lo + chunk] = np.argmin(scores, axis=1)
    return out


def _kmeans(x: np.ndarray, k: int, seed: int, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """(centroids, assignment); deterministic; empty clusters are dropped."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x6B6D])))
    picks = rng.choice(x.shape[0], size=min(k, x.shape[0]), replace=False)
    centroids = x[np.sort(picks)].astype(np.float32).copy()
    assignment = _kmeans_assign(x, centroids)
    for _ in range(iterations):
        for c in range(centroids.shape[0]):
            mask = assignment == c
            if mask.any():
                centroids[c] = x[mask].mean(axis=0)
        new_assignment = _kmeans_assign(x, centroids)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    used = np.unique(assignment)
    remap = np.full(centroids.shape[0], -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    return centroids[used], remap[assignment]


def _two_means_split(x: np.ndarray, members: np.ndarray, seed: int) -> np.ndarray | None:
    """Boolean mask over members for the left side, or None if degenerate.

    Init is deterministic: the member farthest from the mean, then the
    member farthest from that one.
    """
    pts = x[members].astype(np.float32)
    mean = pts.mean(axis=0)
    d_mean = np.einsum("ij,ij->i", pts - mean, pts - mean)
    a = int(np.argmax(d_mean))
    d_a = np.einsum("ij,ij->i", pts - pts[a], pts - pts[a])
    b = int(np.argmax(d_a))
    if d_a[b] == 0.0:
        return None
    centroids = np.stack([pts[a], pts[b]])
    assignment = None
    for _ in range(20):
        scores = np.einsum("ij,ij->i", centroids, centroids)[None, :] - 2.0 * (pts @ centroids.T)
        new_assignment = np.argmin(scores, axis=1)
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in (0, 1):
            mask = assignment == c
            if mask.any():
                centroids[c] = pts[mask].mean(axis=0)
    left = assignment == 0
    if not left.any() or left.all():
        return None
    return left


def build_cluster_tree(
    day: DayFrameSet | tuple[list[FrameRef], np.ndarray],
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
    seed: int = 0,
) -> ClusterTree:
    if isinstance(day, DayFrameSet):
        refs, vectors = day.refs, day.vectors
    else:
        refs, vectors = day
    vectors = np.asarray(vectors, dtype=np.float32)
    n = len(refs)
    if n == 0:
        raise ValueError("cannot cluster an empty day")
    if vectors.shape[0] != n:
        raise ValueError("refs and vectors are misaligned")

    # unit = what 2-means splits on: frames directly, or micro-centroids
    if n > MICRO_CLUSTER_THRESHOLD:
        unit_vectors, frame_unit = _kmeans(vectors, MICRO_CLUSTER_COUNT, seed, iterations=4)
        unit_weights = np.bincount(frame_unit, minlength=unit_vectors.shape[0]).astype(np.float64)
        unit_members: list[np.ndarray] = [
            np.nonzero(frame_unit == u)[0] for u in range(unit_vectors.shape[0])
        ]
    else:
        unit_vectors = vectors
        unit_weights = np.ones(n, dtype=np.float64)
        unit_members = None

    nodes: dict[int, ClusterNode] = {}
    counter = 0

    def frame_positions(units: np.ndarray) -> np.ndarray:
        if unit_members is None:
            return np.sort(units)
        if units.size == 0:
            return units.astype(np.int64)
        return np.sort(np.concatenate([unit_members[int(u)] for u in units]))

    def centroid_of(positions: np.ndarray) -> np.ndarray:
        return vectors[positions].astype(np.float64).mean(axis=0)

    def grow(units: np.ndarray, parent: int | None, depth: int) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        positions = frame_positions(units)
        node = ClusterNode(node_id, parent, (), positions, centroid_of(positions))
        nodes[node_id] = node
        weight = float(unit_weights[units].sum())
        if depth >= max_depth or weight < 2 * min_cluster_size or units.size < 2:
            return node_id
        left_mask = _two_means_split(unit_vectors, units, seed=seed * 100_003 + node_id)
        if left_mask is None:
            return node_id
        left_units, right_units = units[left_mask], units[~left_mask]
        if (
            unit_weights[left_units].sum() < min_cluster_size
            or unit_weights[right_units].sum() < min_cluster_size
        ):
            return node_id
        left_id = grow(left_units, node_id, depth + 1)
        right_id = grow(right_units, node_id, depth + 1)
        node.children = (left_id, right_id)
        return node_id

    grow(np.arange(unit_vectors.shape[0], dtype=np.int64), None, 0)
    return ClusterTree(list(refs), vectors, nodes)


def decorate_tree(tree: ClusterTree, likelihoods: dict[str, np.ndarray]) -> ClusterTree:
    """Attach, per node and concept, the arithmetic mean of member-frame
    likelihoods. likelihoods maps concept name -> per-frame array aligned
    with tree.refs."""
    n = len(tree.refs)
    for concept, values in likelihoods.items():
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (n,):
            raise ValueError(f"likelihoods for {concept!r} are misaligned with the tree")
    tree.decoration = {
        node_id: {
            concept: float(np.mean(np.asarray(values, np.float64)[node.members]))
            for concept, values in sorted(likelihoods.items())
        }
        for node_id, node in tree.nodes.items()
    }
    return tree


@dataclass(frozen=True)
class DensityClustering:
    assignment: np.ndarray  # cluster id per point, NOISE = -1
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        ids = self.assignment[self.assignment != NOISE]
        return int(np.unique(ids).size)

    def members(self, cluster_id: int) -> np.ndarray:
        return np.nonzero(self.assignment == cluster_id)[0]


def default_eps(points: np.ndarray) -> float:
    """90th percentile of 4th-nearest-neighbor distances."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2:
        return 1.0
    d2 = _pairwise_sq(points)
    np.fill_diagonal(d2, np.inf)
    kth = min(4, n - 1) - 1
    d4 = np.sqrt(np.partition(d2, kth, axis=1)[:, kth])
    return float(np.percentile(d4, 90))


def _pairwise_sq(points: np.ndarray) -> np.ndarray:
    norms = np.einsum("ij,ij->i", points, points)
    d2 = norms[:, None] + norms[None, :] - 2.0 * (points @ points.T)
    return np.maximum(d2, 0.0)


def dbscan(points: np.ndarray, eps: float | None = None, min_pts: int = 5) -> DensityClustering:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, dim) array")
    if eps is None:
        eps = default_eps(points)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    n = points.shape[0]
    d2 = _pairwise_sq(points)
    within = d2 <= eps * eps  # includes self
    degree = within.sum(axis=1)
    core = degree >= min_pts

    assignment = np.full(n, NOISE, dtype=np.int64)
    # components over the core-core graph, explored in index order so the
    # labeling is canonical for a fixed point order
    cluster = 0
    for start in range(n):
        if not core[start] or assignment[start] != NOISE:
            continue
        stack = [start]
        assignment[start] = cluster
        while stack:
            p = stack.pop()
            for q in np.nonzero(within[p] & core)[0]:
                if assignment[q] == NOISE:
                    assignment[q] = cluster
                    stack.append(int(q))
        cluster += 1

    # border points: nearest core within eps; ties break on the core's
    # coordinates so membership does not depend on input order
    for p in range(n):
        if core[p] or assignment[p] != NOISE:
            continue
        candidates = np.nonzero(within[p] & core)[0]
        if candidates.size == 0:
            continue
        dists = d2[p, candidates]
        best = np.nonzero(dists == dists.min())[0]
        if best.size > 1:
            coords = [tuple(points[candidates[b]]) for b in best]
            chosen = candidates[best[min(range(best.size), key=lambda i: coords[i])]]
        else:
            chosen = candidates[best[0]]
        assignment[p] = assignment[int(chosen)]
    return DensityClustering(assignment, float(eps), int(min_pts))
