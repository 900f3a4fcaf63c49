"""Approximate nearest-neighbor index over frame embeddings (Euclidean).

The structure is a layered proximity graph (small-world style): every
frame lives in layer 0, a geometrically thinning subset lives in upper
layers, and queries greedily descend layers before running a beam search
at the bottom. Graph kernels are numba-compiled; the handle also keeps the
raw vector matrix, so queries where a beam search cannot win (k comparable
to the corpus, or tiny corpora) dispatch to a vectorized exact scan. Both
paths return exact recomputed distances, sorted ascending with ties broken
by (clip_start, frame_index).

Persistence uses a versioned container ("URIX" magic); loading a file
written by a different version fails loudly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

from .errors import FormatError
from .frames import DayFrameSet, FrameRef

INDEX_MAGIC = b"URIX"
INDEX_VERSION = 1

# Exact-scan dispatch: below this count, or for beams this wide, a scan
# beats graph traversal and is exact.
_EXACT_COUNT = 4096
_EXACT_K = 1024


class Hit(NamedTuple):
    ref: FrameRef
    distance: float


@dataclass(frozen=True)
class IndexParams:
    graph_degree: int = 16          # max links per node on upper layers; 2x at layer 0
    construction_beam: int = 200
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "graph_degree": self.graph_degree,
            "construction_beam": self.construction_beam,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IndexParams":
        return cls(int(obj["graph_degree"]), int(obj["construction_beam"]), int(obj["seed"]))


# ---------------------------------------------------------------------------
# numba kernels: array-backed heaps, beam search, graph construction
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True, inline="always")
def _sqdist_to(vectors, i, q):
    s = np.float32(0.0)
    row = vectors[i]
    for d in range(row.shape[0]):
        t = row[d] - q[d]
        s += t * t
    return s


@njit(cache=True, fastmath=True, inline="always")
def _sqdist_pair(vectors, i, j):
    s = np.float32(0.0)
    a = vectors[i]
    b = vectors[j]
    for d in range(a.shape[0]):
        t = a[d] - b[d]
        s += t * t
    return s


@njit(cache=True, inline="always")
def _heap_push(keys, ids, size, key, ident):
    pos = size
    keys[pos] = key
    ids[pos] = ident
    while pos > 0:
        parent = (pos - 1) >> 1
        if keys[parent] <= keys[pos]:
            break
        keys[parent], keys[pos] = keys[pos], keys[parent]
        ids[parent], ids[pos] = ids[pos], ids[parent]
        pos = parent
    return size + 1


@njit(cache=True, inline="always")
def _heap_pop(keys, ids, size):
    size -= 1
    keys[0] = keys[size]
    ids[0] = ids[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        right = left + 1
        smallest = pos
        if left < size and keys[left] < keys[smallest]:
            smallest = left
        if right < size and keys[right] < keys[smallest]:
            smallest = right
        if smallest == pos:
            break
        keys[smallest], keys[pos] = keys[pos], keys[smallest]
        ids[smallest], ids[pos] = ids[pos], ids[smallest]
        pos = smallest
    return size


@njit(cache=True, inline="always")
def _slot(adj_off, cnt_off, node, level, m0, m):
    """(first adjacency slot, count index, capacity) of a node's level row."""
    if level == 0:
        return adj_off[node], cnt_off[node], m0
    return adj_off[node] + m0 + (level - 1) * m, cnt_off[node] + level, m


@njit(cache=True, fastmath=True)
def _greedy_descend(vectors, adj, adj_off, cnt, cnt_off, m0, m, level, start, q):
    cur = start
    cur_d = _sqdist_to(vectors, cur, q)
    improved = True
    while improved:
        improved = False
        base, ci, _ = _slot(adj_off, cnt_off, cur, level, m0, m)
        deg = cnt[ci]
        for s in range(deg):
            nb = adj[base + s]
            nd = _sqdist_to(vectors, nb, q)
            if nd < cur_d:
                cur_d = nd
                cur = nb
                improved = True
    return cur


@njit(cache=True, fastmath=True)
def _search_layer(
    vectors, adj, adj_off, cnt, cnt_off, m0, m, level,
    entries, n_entries, q, ef,
    visited, mark, cand_d, cand_i, res_d, res_i,
):
    """Beam search at one layer. Result heap holds negated distances; returns size."""
    csize = 0
    rsize = 0
    for t in range(n_entries):
        e = entries[t]
        if visited[e] == mark:
            continue
        visited[e] = mark
        d = _sqdist_to(vectors, e, q)
        csize = _heap_push(cand_d, cand_i, csize, d, e)
        rsize = _heap_push(res_d, res_i, rsize, -d, e)
        if rsize > ef:
            rsize = _heap_pop(res_d, res_i, rsize)
    while csize > 0:
        d = cand_d[0]
        c = cand_i[0]
        csize = _heap_pop(cand_d, cand_i, csize)
        if rsize >= ef and d > -res_d[0]:
            break
        base, ci, _ = _slot(adj_off, cnt_off, c, level, m0, m)
        deg = cnt[ci]
        for s in range(deg):
            nb = adj[base + s]
            if visited[nb] == mark:
                continue
            visited[nb] = mark
            nd = _sqdist_to(vectors, nb, q)
            if rsize < ef or nd < -res_d[0]:
                csize = _heap_push(cand_d, cand_i, csize, nd, nb)
                rsize = _heap_push(res_d, res_i, rsize, -nd, nb)
                if rsize > ef:
                    rsize = _heap_pop(res_d, res_i, rsize)
    return rsize


@njit(cache=True, inline="always")
def _drain_ascending(res_d, res_i, rsize, out_d, out_i):
    """Empty the negated-distance max-heap into ascending arrays."""
    total = rsize
    for t in range(total - 1, -1, -1):
        out_d[t] = -res_d[0]
        out_i[t] = res_i[0]
        rsize = _heap_pop(res_d, res_i, rsize)
    return total


@njit(cache=True, fastmath=True)
def _select_diverse(vectors, cand_d, cand_i, csize, limit, out_ids, fill):
    """Diversity pruning: keep a candidate only if it is closer to the query
    than to every already-kept neighbor. Candidates must arrive ascending.
    With fill, leftover slots take the nearest discarded candidates."""
    kept = 0
    n_disc = 0
    for idx in range(csize):
        if kept >= limit:
            break
        d_q = cand_d[idx]
        e = cand_i[idx]
        ok = True
        for j in range(kept):
            if _sqdist_pair(vectors, e, out_ids[j]) < d_q:
                ok = False
                break
        if ok:
            out_ids[kept] = e
            kept += 1
        elif fill:
            # stash discarded ids in the tail of cand_i; they stay ascending
            cand_i[csize + n_disc] = e
            n_disc += 1
    if fill:
        for j in range(n_disc):
            if kept >= limit:
                break
            out_ids[kept] = cand_i[csize + j]
            kept += 1
    return kept


@njit(cache=True, fastmath=True)
def _prune_node(vectors, adj, adj_off, cnt, cnt_off, m0, m, node, level, extra,
                scratch_d, scratch_i, sel_ids):
    """Re-select a node's neighbor row after appending `extra` would overflow."""
    base, ci, cap = _slot(adj_off, cnt_off, node, level, m0, m)
    deg = cnt[ci]
    total = 0
    for s in range(deg):
        nb = adj[base + s]
        scratch_d[total] = _sqdist_pair(vectors, node, nb)
        scratch_i[total] = nb
        total += 1
    scratch_d[total] = _sqdist_pair(vectors, node, extra)
    scratch_i[total] = extra
    total += 1
    # insertion sort ascending (total <= cap + 1, tiny)
    for a in range(1, total):
        kd = scratch_d[a]
        ki = scratch_i[a]
        b = a - 1
        while b >= 0 and scratch_d[b] > kd:
            scratch_d[b + 1] = scratch_d[b]
            scratch_i[b + 1] = scratch_i[b]
            b -= 1
        scratch_d[b + 1] = kd
        scratch_i[b + 1] = ki
    kept = _select_diverse(vectors, scratch_d, scratch_i, total, cap, sel_ids, True)
    for s in range(kept):
        adj[base + s] = sel_ids[s]
    cnt[ci] = kept


@njit(cache=True, fastmath=True)
def _build_graph(vectors, levels, adj, adj_off, cnt, cnt_off, m, efc):
    n = vectors.shape[0]
    m0 = 2 * m
    entry = 0
    max_level = levels[0]
    visited = np.zeros(n, dtype=np.int64)
    mark = 0
    cand_d = np.empty(n + 1, dtype=np.float32)
    cand_i = np.empty(n + 1, dtype=np.int32)
    res_d = np.empty(efc + 2, dtype=np.float32)
    res_i = np.empty(efc + 2, dtype=np.int32)
    tmp_d = np.empty(efc + 2, dtype=np.float32)
    tmp_i = np.empty(2 * (efc + 2), dtype=np.int32)  # tail stashes pruned ids
    sel_ids = np.empty(m0 + 2, dtype=np.int32)
    entries = np.empty(efc + 2, dtype=np.int32)
    scratch_d = np.empty(m0 + 2, dtype=np.float32)
    scratch_i = np.empty(2 * (m0 + 2), dtype=np.int32)  # tail stashes pruned ids
    prune_sel = np.empty(m0 + 2, dtype=np.int32)

    for i in range(1, n):
        q = vectors[i]
        lvl = levels[i]
        cur = entry
        for level in range(max_level, lvl, -1):
            cur = _greedy_descend(vectors, adj, adj_off, cnt, cnt_off, m0, m, level, cur, q)
        entries[0] = cur
        n_entries = 1
        top = lvl if lvl < max_level else max_level
        for level in range(top, -1, -1):
            mark += 1
            rsize = _search_layer(
                vectors, adj, adj_off, cnt, cnt_off, m0, m, level,
                entries, n_entries, q, efc,
                visited, mark, cand_d, cand_i, res_d, res_i,
            )
            found = _drain_ascending(res_d, res_i, rsize, tmp_d, tmp_i)
            cap = m0 if level == 0 else m
            kept = _select_diverse(vectors, tmp_d, tmp_i, found, cap, sel_ids, True)
            base, ci, _ = _slot(adj_off, cnt_off, i, level, m0, m)
            for s in range(kept):
                adj[base + s] = sel_ids[s]
            cnt[ci] = kept
            for s in range(kept):
                nb = sel_ids[s]
                nb_base, nb_ci, nb_cap = _slot(adj_off, cnt_off, nb, level, m0, m)
                deg = cnt[nb_ci]
                if deg < nb_cap:
                    adj[nb_base + deg] = i
                    cnt[nb_ci] = deg + 1
                else:
                    _prune_node(
                        vectors, adj, adj_off, cnt, cnt_off, m0, m, nb, level, i,
                        scratch_d, scratch_i, prune_sel,
                    )
            # the whole beam, not just the linked neighbors, seeds the next layer
            for s in range(found):
                entries[s] = tmp_i[s]
            n_entries = found if found > 0 else 1
            if found == 0:
                entries[0] = cur
        if lvl > max_level:
            entry = i
            max_level = lvl
    return entry, max_level


@njit(cache=True, fastmath=True)
def _query_graph(vectors, levels, adj, adj_off, cnt, cnt_off, m, entry, max_level, q, ef):
    n = vectors.shape[0]
    m0 = 2 * m
    cur = entry
    for level in range(max_level, 0, -1):
        cur = _greedy_descend(vectors, adj, adj_off, cnt, cnt_off, m0, m, level, cur, q)
    visited = np.zeros(n, dtype=np.int64)
    cand_d = np.empty(n + 1, dtype=np.float32)
    cand_i = np.empty(n + 1, dtype=np.int32)
    res_d = np.empty(ef + 2, dtype=np.float32)
    res_i = np.empty(ef + 2, dtype=np.int32)
    entries = np.empty(1, dtype=np.int32)
    entries[0] = cur
    rsize = _search_layer(
        vectors, adj, adj_off, cnt, cnt_off, m0, m, 0,
        entries, 1, q, ef,
        visited, 1, cand_d, cand_i, res_d, res_i,
    )
    out_d = np.empty(rsize, dtype=np.float32)
    out_i = np.empty(rsize, dtype=np.int32)
    _drain_ascending(res_d, res_i, rsize, out_d, out_i)
    return out_d, out_i


# ---------------------------------------------------------------------------
# handle
# ---------------------------------------------------------------------------


@dataclass
class AnnIndex:
    """Immutable after build; concurrent queries are safe."""

    dim: int
    params: IndexParams
    scope: dict
    vectors: np.ndarray        # (n, dim) float32
    levels: np.ndarray         # (n,) int32
    adj: np.ndarray            # int32, packed per-node per-level rows
    adj_off: np.ndarray        # (n + 1,) int64
    cnt: np.ndarray            # int32, one slot per (node, level)
    cnt_off: np.ndarray        # (n + 1,) int64
    entry: int
    max_level: int
    sensor_table: list[str]
    sensor_idx: np.ndarray     # (n,) int32
    clip_starts: np.ndarray    # (n,) int64
    frame_indices: np.ndarray  # (n,) uint8
    _sq_norms: np.ndarray | None = field(default=None, repr=False)
    _refs: list[FrameRef] | None = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def ref_at(self, i: int) -> FrameRef:
        return FrameRef(
            self.sensor_table[self.sensor_idx[i]],
            int(self.clip_starts[i]),
            int(self.frame_indices[i]),
        )

    def refs(self) -> list[FrameRef]:
        if self._refs is None:
            table = self.sensor_table
            self._refs = [
                FrameRef(table[s], int(c), int(f))
                for s, c, f in zip(
                    self.sensor_idx.tolist(),
                    self.clip_starts.tolist(),
                    self.frame_indices.tolist(),
                )
            ]
        return self._refs

    def sq_norms(self) -> np.ndarray:
        if self._sq_norms is None:
            v = self.vectors.astype(np.float32)
            self._sq_norms = np.einsum("ij,ij->i", v, v, dtype=np.float64)
        return self._sq_norms


def _draw_levels(n: int, degree: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x4C76])))
    ml = 1.0 / np.log(degree)
    u = rng.random(n)
    levels = np.floor(-np.log(u) * ml).astype(np.int32)
    return np.minimum(levels, 24)


def build_index(
    frames: Iterable[tuple[FrameRef, np.ndarray]] | DayFrameSet,
    params: IndexParams | None = None,
    scope: dict | None = None,
) -> AnnIndex:
    """Build the layered graph over frames; deterministic for fixed input order."""
    params = params or IndexParams()
    if isinstance(frames, DayFrameSet):
        sensor_table = [frames.sensor_id]
        sensor_idx = np.zeros(len(frames), dtype=np.int32)
        clip_starts = frames.clip_starts.astype(np.int64)
        frame_indices = frames.frame_indices.astype(np.uint8)
        vectors = np.ascontiguousarray(frames.vectors, dtype=np.float32)
    else:
        refs: list[FrameRef] = []
        rows: list[np.ndarray] = []
        for ref, vec in frames:
            refs.append(ref)
            rows.append(np.asarray(vec, dtype=np.float32))
        if not rows:
            raise ValueError("cannot build an index over zero frames")
        dims = {r.shape[-1] for r in rows}
        if len(dims) != 1:
            raise ValueError(f"dim mismatch: inputs carry dims {sorted(dims)}")
        vectors = np.ascontiguousarray(np.stack(rows))
        table: dict[str, int] = {}
        sensor_idx = np.empty(len(refs), dtype=np.int32)
        clip_starts = np.empty(len(refs), dtype=np.int64)
        frame_indices = np.empty(len(refs), dtype=np.uint8)
        for i, ref in enumerate(refs):
            sensor_idx[i] = table.setdefault(ref.sensor_id, len(table))
            clip_starts[i] = ref.clip_start
            frame_indices[i] = ref.frame_index
        sensor_table = list(table)
    n = vectors.shape[0]
    if n == 0:
        raise ValueError("cannot build an index over zero frames")

    m = params.graph_degree
    m0 = 2 * m
    levels = _draw_levels(n, m, params.seed)
    row_sizes = m0 + np.maximum(levels.astype(np.int64), 0) * m
    adj_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(row_sizes, out=adj_off[1:])
    cnt_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(levels.astype(np.int64) + 1, out=cnt_off[1:])
    adj = np.zeros(int(adj_off[-1]), dtype=np.int32)
    cnt = np.zeros(int(cnt_off[-1]), dtype=np.int32)

    if n == 1:
        entry, max_level = 0, int(levels[0])
    else:
        entry, max_level = _build_graph(
            vectors, levels, adj, adj_off, cnt, cnt_off, m, params.construction_beam
        )
    return AnnIndex(
        dim=vectors.shape[1],
        params=params,
        scope=scope or {},
        vectors=vectors,
        levels=levels,
        adj=adj,
        adj_off=adj_off,
        cnt=cnt,
        cnt_off=cnt_off,
        entry=int(entry),
        max_level=int(max_level),
        sensor_table=sensor_table,
        sensor_idx=sensor_idx,
        clip_starts=clip_starts,
        frame_indices=frame_indices,
    )


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def _finalize(index: AnnIndex, candidate_ids: np.ndarray, query64: np.ndarray,
              k: int, filter: Callable[[FrameRef], bool] | None) -> list[Hit]:
    """Exact f64 distances for candidates, filter, order, cut to k."""
    if filter is not None and candidate_ids.size:
        keep = np.fromiter(
            (filter(index.ref_at(int(i))) for i in candidate_ids), dtype=bool,
            count=candidate_ids.size,
        )
        candidate_ids = candidate_ids[keep]
    if candidate_ids.size == 0:
        return []
    diffs = index.vectors[candidate_ids].astype(np.float64) - query64
    d2 = np.einsum("ij,ij->i", diffs, diffs)
    order = np.lexsort(
        (
            index.frame_indices[candidate_ids],
            index.clip_starts[candidate_ids],
            d2,
        )
    )[:k]
    chosen = candidate_ids[order]
    dists = np.sqrt(d2[order])
    return [Hit(index.ref_at(int(i)), float(d)) for i, d in zip(chosen, dists)]


def knn_query(
    index: AnnIndex,
    query: np.ndarray,
    k: int,
    filter: Callable[[FrameRef], bool] | None = None,
    beam: int | None = None,
) -> list[Hit]:
    """Up to k nearest frames, ascending Euclidean distance.

    With a filter, hits are the filtered subset of the unfiltered
    candidate pool, so fewer than k hits may come back.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float32).reshape(-1)
    if query.shape[0] != index.dim:
        raise ValueError(f"dim mismatch: query has {query.shape[0]}, index has {index.dim}")
    query64 = query.astype(np.float64)
    n = index.count

    if n <= _EXACT_COUNT or k >= _EXACT_K or 4 * k >= n:
        if filter is None and n > _EXACT_COUNT:
            # rank by the norm expansion in f32, then refine a padded head exactly
            scores = index.sq_norms() - 2.0 * (index.vectors @ query)
            head = min(n, k + 64)
            cand = np.argpartition(scores, head - 1)[:head].astype(np.int64)
        else:
            cand = np.arange(n, dtype=np.int64)
        return _finalize(index, cand, query64, k, filter)

    ef = beam if beam is not None else max(64, k)
    ef = min(ef, n)
    _, ids = _query_graph(
        index.vectors, index.levels, index.adj, index.adj_off, index.cnt, index.cnt_off,
        index.params.graph_degree, index.entry, index.max_level, query, ef,
    )
    return _finalize(index, ids.astype(np.int64), query64, k, filter)


def brute_force_knn(
    frames: Sequence[tuple[FrameRef, np.ndarray]] | DayFrameSet,
    query: np.ndarray,
    k: int,
) -> list[Hit]:
    """Exact top-k by Euclidean distance; the oracle the index is tested
    against. Ties break by (clip_start, frame_index) ascending."""
    if isinstance(frames, DayFrameSet):
        refs = frames.refs
        matrix = frames.vectors.astype(np.float64)
    else:
        frames = list(frames)
        refs = [ref for ref, _ in frames]
        if not refs:
            raise ValueError("empty frame set")
        matrix = np.stack([np.asarray(v, dtype=np.float64) for _, v in frames])
    if len(refs) == 0:
        raise ValueError("empty frame set")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != matrix.shape[1]:
        raise ValueError("dim mismatch")
    diffs = matrix - query
    d2 = np.einsum("ij,ij->i", diffs, diffs)
    clip_starts = np.array([r.clip_start for r in refs], dtype=np.int64)
    frame_indices = np.array([r.frame_index for r in refs], dtype=np.int64)
    order = np.lexsort((frame_indices, clip_starts, d2))[:k]
    return [Hit(refs[int(i)], float(np.sqrt(d2[int(i)]))) for i in order]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_ARRAY_FIELDS = [
    "vectors", "levels", "adj", "adj_off", "cnt", "cnt_off",
    "sensor_idx", "clip_starts", "frame_indices",
]


def save_index(index: AnnIndex, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "params": index.params.to_json(),
        "scope": index.scope,
        "entry": index.entry,
        "max_level": index.max_level,
        "sensor_table": index.sensor_table,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<4sIIQ", INDEX_MAGIC, INDEX_VERSION, index.dim, index.count))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for name in _ARRAY_FIELDS:
            arr = np.ascontiguousarray(getattr(index, name))
            desc = json.dumps(
                {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)}
            ).encode("utf-8")
            fh.write(struct.pack("<I", len(desc)))
            fh.write(desc)
            data = arr.tobytes()
            fh.write(struct.pack("<Q", len(data)))
            fh.write(data)
    import os

    os.replace(tmp, path)


def load_index(path: str | Path) -> AnnIndex:
    path = Path(path)

    def read_exact(fh, size: int) -> bytes:
        data = fh.read(size)
        if len(data) != size:
            raise FormatError(f"truncated index file: {path}")
        return data

    with open(path, "rb") as fh:
        magic, version, dim, count = struct.unpack("<4sIIQ", read_exact(fh, 20))
        if magic != INDEX_MAGIC:
            raise FormatError(f"bad magic {magic!r} in {path}")
        if version != INDEX_VERSION:
            raise FormatError(
                f"index version mismatch: file has {version}, supported {INDEX_VERSION}"
            )
        (meta_len,) = struct.unpack("<I", read_exact(fh, 4))
        meta = json.loads(read_exact(fh, meta_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for _ in _ARRAY_FIELDS:
            (desc_len,) = struct.unpack("<I", read_exact(fh, 4))
            desc = json.loads(read_exact(fh, desc_len).decode("utf-8"))
            (data_len,) = struct.unpack("<Q", read_exact(fh, 8))
            arr = np.frombuffer(read_exact(fh, data_len), dtype=np.dtype(desc["dtype"]))
            arrays[desc["name"]] = arr.reshape(desc["shape"]).copy()
    if set(arrays) != set(_ARRAY_FIELDS):
        raise FormatError(f"index file missing arrays: {path}")
    if arrays["vectors"].shape != (count, dim):
        raise FormatError(f"index header disagrees with payload: {path}")
    return AnnIndex(
        dim=int(dim),
        params=IndexParams.from_json(meta["params"]),
        scope=meta.get("scope", {}),
        entry=int(meta["entry"]),
        max_level=int(meta["max_level"]),
        sensor_table=[str(s) for s in meta["sensor_table"]],
        **arrays,
    )
