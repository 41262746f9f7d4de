"""Exact k-nearest-neighbor search under the Euclidean metric.

Two interchangeable backends return identical results: a vectorized brute
force scan and a kd-tree.  Candidates are ordered by (squared distance,
training-row index) ascending, so distance ties always resolve to the lower
row index in both backends.  Both compute squared distances with the same
elementwise expression, which keeps tie detection consistent; true
(unsquared) distances are produced only at the end.

A query for k neighbors internally retrieves k+1 so the distance to the
(k+1)-th point is available as the weight-normalizing boundary.  Since the
boundary must exist, k can be at most n-1.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, NeighborQuery

__all__ = [
    "BruteForce",
    "KdTree",
    "SearchBackend",
    "FittedIndex",
    "build_index",
    "query_knn",
    "query_batch",
    "knn_matrix",
]

DEFAULT_LEAF_SIZE = 16

# Entry budget for one brute-force distance block, keeps temporaries small.
_BLOCK_ENTRIES = 4_000_000


@dataclass(frozen=True)
class BruteForce:
    """Scan every training row per query; the reference backend."""

    def __str__(self) -> str:
        return "brute"


@dataclass(frozen=True)
class KdTree:
    """Axis-aligned kd-tree; splits the widest-spread coordinate at the median."""

    leaf_size: int = DEFAULT_LEAF_SIZE

    def __post_init__(self) -> None:
        if self.leaf_size < 1:
            raise ValueError(f"leaf_size must be >= 1, got {self.leaf_size}")

    def __str__(self) -> str:
        return "kdtree"


SearchBackend = BruteForce | KdTree


class _Node:
    __slots__ = ("dim", "lo_max", "hi_min", "left", "right", "leaf_idx")

    def __init__(self, leaf_idx=None, dim=-1, lo_max=0.0, hi_min=0.0, left=None, right=None):
        self.leaf_idx = leaf_idx
        self.dim = dim
        self.lo_max = lo_max
        self.hi_min = hi_min
        self.left = left
        self.right = right


def _build_node(data: np.ndarray, idx: np.ndarray, leaf_size: int) -> _Node:
    if idx.size <= leaf_size:
        return _Node(leaf_idx=idx)
    sub = data[idx]
    spread = sub.max(axis=0) - sub.min(axis=0)
    dim = int(np.argmax(spread))
    if spread[dim] == 0.0:
        # All remaining points coincide; subdividing cannot help.
        return _Node(leaf_idx=idx)
    order = np.argsort(sub[:, dim], kind="stable")
    idx = idx[order]
    mid = idx.size // 2
    left_idx, right_idx = idx[:mid], idx[mid:]
    return _Node(
        dim=dim,
        lo_max=float(data[left_idx, dim].max()),
        hi_min=float(data[right_idx, dim].min()),
        left=_build_node(data, left_idx, leaf_size),
        right=_build_node(data, right_idx, leaf_size),
    )


@dataclass(frozen=True)
class FittedIndex:
    """A dataset bound to a search backend, ready for queries."""

    dataset: Dataset
    backend: SearchBackend
    _root: _Node | None = field(default=None, repr=False, compare=False)


def build_index(dataset: Dataset, backend: SearchBackend) -> FittedIndex:
    """Prepare the backend's search structure over the dataset rows.

    Construction is deterministic: no randomization enters the tree layout,
    so identical inputs always produce identical indexes.
    """
    if isinstance(backend, BruteForce):
        return FittedIndex(dataset, backend)
    if isinstance(backend, KdTree):
        all_idx = np.arange(dataset.n, dtype=np.int64)
        root = _build_node(dataset.features, all_idx, backend.leaf_size)
        return FittedIndex(dataset, backend, root)
    raise TypeError(f"unknown backend {backend!r}")


def _check_query_point(x: np.ndarray, d: int) -> np.ndarray:
    q = np.asarray(x, dtype=np.float64)
    if q.shape != (d,):
        raise ValueError(f"query must have shape ({d},), got {q.shape}")
    if not np.isfinite(q).all():
        raise ValueError("query contains non-finite values")
    return q


def _kd_candidates(root: _Node, data: np.ndarray, q: np.ndarray, count: int):
    """The `count` best (squared distance, index) pairs, best-first."""
    # Max-heap via negation: heap[0] is the worst kept candidate under the
    # (d2, idx) order, so lexicographic comparisons do the tie-breaking.
    heap: list[tuple[float, int]] = []

    def scan_leaf(leaf_idx: np.ndarray) -> None:
        d2s = ((data[leaf_idx] - q) ** 2).sum(axis=1)
        for d2, i in zip(d2s.tolist(), leaf_idx.tolist()):
            if len(heap) < count:
                heapq.heappush(heap, (-d2, -i))
            else:
                wd2, wi = -heap[0][0], -heap[0][1]
                if d2 < wd2 or (d2 == wd2 and i < wi):
                    heapq.heapreplace(heap, (-d2, -i))

    def visit(node: _Node) -> None:
        if node.leaf_idx is not None:
            scan_leaf(node.leaf_idx)
            return
        qd = q[node.dim]
        gap_left = qd - node.lo_max
        if gap_left < 0.0:
            gap_left = 0.0
        gap_right = node.hi_min - qd
        if gap_right < 0.0:
            gap_right = 0.0
        if gap_left <= gap_right:
            near = ((gap_left, node.left), (gap_right, node.right))
        else:
            near = ((gap_right, node.right), (gap_left, node.left))
        for gap, child in near:
            # Keep equality: a subtree at exactly the worst kept distance can
            # still hold a lower-index tie that must displace it.
            if len(heap) < count or gap * gap <= -heap[0][0]:
                visit(child)

    visit(root)
    pairs = sorted((-nd2, -ni) for nd2, ni in heap)
    return pairs


def _brute_block(data: np.ndarray, block: np.ndarray) -> np.ndarray:
    # (b, n) squared distances; the elementwise form matches the kd-tree's
    # leaf computation bit for bit, which keeps tie handling identical.
    return ((block[:, None, :] - data[None, :, :]) ** 2).sum(axis=2)


def knn_matrix(index: FittedIndex, queries: np.ndarray, count: int):
    """Exact `count` nearest neighbors for a batch of query rows.

    Returns
    -------
    (indices, distances) : pair of ndarray of shape (m, count)
        Row-sorted by (distance, training index) ascending; distances are
        true Euclidean norms.
    """
    data = index.dataset.features
    n, d = data.shape
    qs = np.asarray(queries, dtype=np.float64)
    if qs.ndim != 2 or qs.shape[1] != d:
        raise ValueError(f"queries must have shape (m, {d}), got {qs.shape}")
    if not np.isfinite(qs).all():
        raise ValueError("queries contain non-finite values")
    if not 1 <= count <= n:
        raise ValueError(f"need 1 <= count <= {n} stored rows, got {count}")
    m = qs.shape[0]
    out_idx = np.empty((m, count), dtype=np.int64)
    out_d2 = np.empty((m, count), dtype=np.float64)

    if isinstance(index.backend, KdTree):
        for r in range(m):
            pairs = _kd_candidates(index._root, data, qs[r], count)
            out_d2[r] = [p[0] for p in pairs]
            out_idx[r] = [p[1] for p in pairs]
    else:
        block_rows = max(1, _BLOCK_ENTRIES // max(1, n * d))
        for start in range(0, m, block_rows):
            stop = min(m, start + block_rows)
            d2 = _brute_block(data, qs[start:stop])
            # Stable sort on squared distance leaves equal entries in index
            # order, which is exactly the tie policy.
            order = np.argsort(d2, axis=1, kind="stable")[:, :count]
            out_idx[start:stop] = order
            out_d2[start:stop] = np.take_along_axis(d2, order, axis=1)
    return out_idx, np.sqrt(out_d2)


def query_knn(index: FittedIndex, x: np.ndarray, k: int) -> NeighborQuery:
    """The k nearest training rows to x plus the (k+1)-th boundary distance."""
    n = index.dataset.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {n - 1}, got {k}")
    q = _check_query_point(x, index.dataset.d)
    idx, dist = knn_matrix(index, q[None, :], k + 1)
    return NeighborQuery(idx[0, :k], dist[0, :k], float(dist[0, k]))


def query_batch(index: FittedIndex, xs: np.ndarray, k: int) -> list[NeighborQuery]:
    """Vectorized ``query_knn`` over the rows of xs, preserving row order."""
    n = index.dataset.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {n - 1}, got {k}")
    idx, dist = knn_matrix(index, xs, k + 1)
    return [
        NeighborQuery(idx[r, :k], dist[r, :k], float(dist[r, k]))
        for r in range(idx.shape[0])
    ]
