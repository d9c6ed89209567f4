"""Agglomerative hierarchical clustering of scalar observations.

For one-dimensional data with single, average, or complete linkage, only
clusters adjacent in sorted order can ever merge (any farther cluster is
at strictly greater linkage distance), so the dendrogram is built with a
heap over adjacent gaps in O(n log n) — no pairwise distance matrix.

Ties and duplicate values would produce zero-length edges, which the tree
model forbids; tied merge heights are bumped upward by one float spacing
with a warning, as is any merge not strictly above its children.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InsufficientData
from .trees import Tree, _tree_from_children

__all__ = ["Dendrogram", "HeterogeneitySummary", "agglomerate", "heterogeneity_summary"]

_LINKAGES = ("single", "average", "complete")


@dataclass(frozen=True)
class Dendrogram:
    """An ultrametric strict binary tree with per-vertex merge heights.

    Leaves sit at height 0 and carry the input positions as ids; each
    internal vertex records the linkage distance at which its two child
    clusters merged.  Edge lengths are height differences, so every leaf
    is equidistant from the root.
    """

    tree: Tree
    merge_heights: np.ndarray  # aligned with tree preorder; 0.0 at leaves

    def __post_init__(self):
        h = np.ascontiguousarray(self.merge_heights, dtype=np.float64)
        if h.shape[0] != self.tree.n:
            raise DomainError("merge heights must align with the tree vertices")
        h.setflags(write=False)
        object.__setattr__(self, "merge_heights", h)
        depth = self.tree.root_distances()
        leaves = self.tree.leaf_indices()
        root_h = h[0]
        if not np.allclose(depth[leaves], root_h, rtol=1e-9, atol=1e-12):
            raise DomainError("dendrogram is not ultrametric")

    @property
    def n_leaves(self) -> int:
        return self.tree.n_leaves


class HeterogeneitySummary(NamedTuple):
    height: float
    total_path_length: float
    branch_count: int


def heterogeneity_summary(d: Dendrogram) -> HeterogeneitySummary:
    """Height, total path length, and branch count of a dendrogram."""
    return HeterogeneitySummary(
        height=float(d.merge_heights[0]),
        total_path_length=d.tree.total_path_length(),
        branch_count=d.tree.n_edges,
    )


def agglomerate(values, linkage: str = "single", max_points: int = 100_000) -> Dendrogram:
    """Cluster scalars into an ultrametric dendrogram.

    Pairwise distance is |x - y|; cluster-to-cluster distance follows the
    chosen linkage.  Ties break deterministically toward the lowest sorted
    position, so permuting the input only relabels the leaves.
    """
    if linkage not in _LINKAGES:
        raise DomainError(f"linkage must be one of {_LINKAGES}, got {linkage!r}")
    vals = np.asarray(values, dtype=np.float64).ravel()
    n = vals.shape[0]
    if n < 2:
        raise InsufficientData(f"clustering needs at least 2 values, got {n}")
    if n > max_points:
        raise DomainError(
            f"{n} points exceed the cap of {max_points}; subsample the input"
        )
    if not np.all(np.isfinite(vals)):
        raise DomainError("values must be finite")

    order = np.argsort(vals, kind="stable")
    sv = vals[order]

    # Build-vertex storage: leaves 0..n-1 (sorted order), internals appended.
    total = 2 * n - 1
    children: list[list[int]] = [[] for _ in range(total)]
    height = np.zeros(total)
    ids = np.empty(total, dtype=np.int64)
    ids[:n] = order  # leaf ids = original input positions
    ids[n:] = np.arange(n, total)

    # Cluster state per active cluster, keyed by its leftmost sorted slot.
    node = list(range(n))  # build-vertex of each cluster
    lo = list(range(n))  # leftmost sorted index (min value position)
    hi = list(range(n))  # rightmost sorted index
    csum = sv.tolist()  # sum of member values
    cnt = [1] * n
    left = list(range(-1, n - 1))  # neighbor links over sorted positions
    right = list(range(1, n + 1))
    right[n - 1] = -1
    version = [0] * n

    def dist(i: int, j: int) -> float:
        # i is immediately left of j in sorted order
        if linkage == "single":
            return sv[lo[j]] - sv[hi[i]]
        if linkage == "complete":
            return sv[hi[j]] - sv[lo[i]]
        return csum[j] / cnt[j] - csum[i] / cnt[i]

    heap: list[tuple[float, int, int, int]] = []
    for i in range(n - 1):
        heapq.heappush(heap, (dist(i, i + 1), i, version[i], version[i + 1]))

    bumped = False
    nxt = n
    merges = 0
    while merges < n - 1:
        d, i, vi, vj = heapq.heappop(heap)
        j = right[i]
        if j < 0 or version[i] != vi or version[j] != vj:
            continue
        h = d
        floor = max(height[node[i]], height[node[j]])
        if h <= floor:
            h = np.nextafter(floor, np.inf)
            bumped = True
        children[nxt] = [node[i], node[j]]
        height[nxt] = h
        # merged cluster keeps slot i
        node[i] = nxt
        hi[i] = hi[j]
        csum[i] += csum[j]
        cnt[i] += cnt[j]
        version[i] += 1
        version[j] += 1
        r = right[j]
        right[i] = r
        if r >= 0:
            left[r] = i
            heapq.heappush(heap, (dist(i, r), i, version[i], version[r]))
        l = left[i]
        if l >= 0:
            heapq.heappush(heap, (dist(l, i), l, version[l], version[i]))
        nxt += 1
        merges += 1

    if bumped:
        warnings.warn(
            "tied merge heights perturbed upward by one float spacing to keep "
            "edge lengths positive",
            stacklevel=2,
        )

    root = total - 1
    above = np.zeros(total)
    for v in range(n, total):
        for c in children[v]:
            above[c] = height[v] - height[c]
    tree, build_order = _tree_from_children(children, above, root=root, ids=ids)
    return Dendrogram(tree=tree, merge_heights=height[build_order])
