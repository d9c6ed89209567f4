"""Rooted ordered trees with positive edge lengths, as parallel numpy arrays.

A tree with n vertices is stored in canonical preorder: vertex 0 is the
root, every vertex's parent has a smaller index, sibling order equals index
order, and every subtree occupies a contiguous index range.  Three arrays
carry the whole structure:

    parent      : int64  [n]   parent index; -1 for the root
    edge_length : float64[n]   length of the edge above each vertex; 0.0 at the root
    ids         : int64  [n]   stable vertex labels (preorder-assigned at birth,
                               preserved by subtree extraction)

All instances are immutable after construction; operations that accept an
RNG take it explicitly and never share it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import as_generator
from .errors import (
    DomainError,
    EmptySelection,
    TooManyLeavesRequested,
    UnknownVertex,
)

__all__ = [
    "Tree",
    "LeafSelection",
    "choose_leaves",
    "random_vertex_distance",
    "ltree_extract",
    "ltree_total_length",
]


class Tree:
    """A finite rooted ordered tree with strictly positive edge lengths.

    Parameters
    ----------
    parent : array-like of int
        Parent index per vertex, exactly one entry equal to -1 (the root).
        Sibling order is the index order of the children.
    edge_length : array-like of float
        Length of the edge connecting each vertex to its parent.  The root
        entry is ignored (stored as 0.0).  All other entries must be
        strictly positive and finite.
    ids : array-like of int, optional
        Stable vertex labels.  Defaults to the preorder positions.

    The constructor renumbers vertices into canonical preorder; use
    :meth:`from_preorder` when the arrays are already in that layout.
    """

    __slots__ = ("parent", "edge_length", "ids", "_cache")

    def __init__(self, parent, edge_length, ids=None):
        parent = np.asarray(parent, dtype=np.int64)
        edge_length = np.asarray(edge_length, dtype=np.float64)
        n = parent.shape[0]
        if n == 0:
            raise DomainError("a tree must contain at least one vertex (the root)")
        if edge_length.shape[0] != n:
            raise DomainError("parent and edge_length must have equal length")
        roots = np.flatnonzero(parent < 0)
        if roots.shape[0] != 1:
            raise DomainError(f"expected exactly one root, found {roots.shape[0]}")
        root = int(roots[0])
        if np.any(parent >= n):
            raise DomainError("parent index out of range")

        # Children in index order, then an iterative preorder walk.  The walk
        # doubles as the acyclicity check: it must reach every vertex.
        children: list[list[int]] = [[] for _ in range(n)]
        plist = parent.tolist()
        for v, p in enumerate(plist):
            if p >= 0:
                children[p].append(v)
        order = np.empty(n, dtype=np.int64)
        stack = [root]
        pos = 0
        while stack:
            v = stack.pop()
            order[pos] = v
            pos += 1
            stack.extend(reversed(children[v]))
        if pos != n:
            raise DomainError("parent array contains a cycle or detached vertices")

        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        new_parent = np.where(parent[order] >= 0, rank[parent[order].clip(0)], -1)
        new_length = edge_length[order].copy()
        new_length[0] = 0.0
        if ids is None:
            new_ids = np.arange(n, dtype=np.int64)
        else:
            new_ids = np.asarray(ids, dtype=np.int64)[order].copy()
        self._finalize(new_parent, new_length, new_ids, check_lengths=True)

    @classmethod
    def from_preorder(cls, parent, edge_length, ids=None, *, validate=True):
        """Build a tree from arrays already in canonical preorder layout.

        Used by samplers and codecs that produce preorder output natively.
        With ``validate=False`` the preorder property is trusted; length
        positivity is always checked.
        """
        self = object.__new__(cls)
        parent = np.ascontiguousarray(parent, dtype=np.int64)
        edge_length = np.ascontiguousarray(edge_length, dtype=np.float64)
        n = parent.shape[0]
        if n == 0:
            raise DomainError("a tree must contain at least one vertex (the root)")
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        else:
            ids = np.ascontiguousarray(ids, dtype=np.int64)
        if validate:
            if parent[0] != -1 or np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, n)):
                raise DomainError("arrays are not in preorder layout")
        self._finalize(parent, edge_length, ids, check_lengths=True)
        return self

    def _finalize(self, parent, edge_length, ids, *, check_lengths):
        if check_lengths and parent.shape[0] > 1:
            tail = edge_length[1:]
            if not np.all(np.isfinite(tail)) or np.any(tail <= 0.0):
                raise DomainError("edge lengths must be strictly positive and finite")
        for arr in (parent, edge_length, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "edge_length", edge_length)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("Tree instances are immutable")

    # ------------------------------------------------------------------ #
    # Basic shape
    # ------------------------------------------------------------------ #

    @property
    def n(self) -> int:
        """Number of vertices, root included."""
        return self.parent.shape[0]

    @property
    def n_edges(self) -> int:
        return self.parent.shape[0] - 1

    def out_degrees(self) -> np.ndarray:
        """Number of children of each vertex."""
        deg = self._cache.get("out_degrees")
        if deg is None:
            deg = np.bincount(self.parent[1:], minlength=self.n) if self.n > 1 \
                else np.zeros(1, dtype=np.int64)
            deg.setflags(write=False)
            self._cache["out_degrees"] = deg
        return deg

    def leaf_indices(self) -> np.ndarray:
        """Preorder indices of the leaves (vertices with no children)."""
        leaves = self._cache.get("leaf_indices")
        if leaves is None:
            leaves = np.flatnonzero(self.out_degrees() == 0)
            leaves.setflags(write=False)
            self._cache["leaf_indices"] = leaves
        return leaves

    @property
    def n_leaves(self) -> int:
        return self.leaf_indices().shape[0]

    def leaf_ids(self) -> np.ndarray:
        return self.ids[self.leaf_indices()]

    def children_csr(self):
        """(indptr, order): children of v are order[indptr[v]:indptr[v+1]]."""
        csr = self._cache.get("children_csr")
        if csr is None:
            n = self.n
            counts = self.out_degrees()
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            # stable sort by parent keeps sibling (index) order inside groups
            order = np.argsort(self.parent[1:], kind="stable").astype(np.int64) + 1
            csr = (indptr, order)
            self._cache["children_csr"] = csr
        return csr

    def index_of(self, vertex_id: int) -> int:
        """Preorder index of the vertex carrying a given stable id."""
        table = self._cache.get("id_index")
        if table is None:
            table = {int(i): j for j, i in enumerate(self.ids.tolist())}
            self._cache["id_index"] = table
        try:
            return table[int(vertex_id)]
        except KeyError:
            raise UnknownVertex(f"vertex id {vertex_id} not in tree") from None

    # ------------------------------------------------------------------ #
    # Metrics
    # ------------------------------------------------------------------ #

    def total_path_length(self) -> float:
        """Sum of all edge lengths (exactly rounded)."""
        s = self._cache.get("total_path_length")
        if s is None:
            s = math.fsum(self.edge_length[1:].tolist())
            self._cache["total_path_length"] = s
        return s

    def root_distance(self, vertex_id: int) -> float:
        """Length of the unique path from the root to the given vertex id."""
        return self.root_distance_by_index(self.index_of(vertex_id))

    def root_distance_by_index(self, index: int) -> float:
        v = int(index)
        if not 0 <= v < self.n:
            raise UnknownVertex(f"vertex index {index} out of range")
        parent = self.parent
        lengths = self.edge_length
        acc = []
        while v > 0:
            acc.append(lengths[v])
            v = parent[v]
        return math.fsum(acc)

    def root_distances(self) -> np.ndarray:
        """Distances from the root to every vertex (jump-pointer doubling)."""
        dist = self._cache.get("root_distances")
        if dist is None:
            dist = self.edge_length.astype(np.float64, copy=True)
            anc = self.parent.copy()
            mask = anc >= 0
            while mask.any():
                a = anc[mask]
                dist[mask] += dist[a]
                anc[mask] = anc[a]
                mask = anc >= 0
            dist.setflags(write=False)
            self._cache["root_distances"] = dist
        return dist

    def height(self) -> float:
        """Largest root-to-vertex distance."""
        return float(self.root_distances().max()) if self.n > 1 else 0.0

    # ------------------------------------------------------------------ #
    # Equality
    # ------------------------------------------------------------------ #

    def __eq__(self, other) -> bool:
        """Structural equality: same preorder layout and bit-identical lengths."""
        if not isinstance(other, Tree):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.edge_length, other.edge_length)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Tree(n={self.n}, n_leaves={self.n_leaves}, length={self.total_path_length():.6g})"


@dataclass(frozen=True)
class LeafSelection:
    """A subset of a tree's leaves, addressed by stable ids."""

    tree: Tree
    leaf_ids: tuple

    def __post_init__(self):
        if len(self.leaf_ids) == 0:
            raise EmptySelection("a leaf selection must contain at least one leaf")
        if len(set(self.leaf_ids)) != len(self.leaf_ids):
            raise DomainError("leaf ids must be distinct")
        deg = self.tree.out_degrees()
        for lid in self.leaf_ids:
            if deg[self.tree.index_of(lid)] != 0:
                raise DomainError(f"vertex id {lid} is not a leaf")
        object.__setattr__(self, "leaf_ids", tuple(int(i) for i in self.leaf_ids))

    @property
    def k(self) -> int:
        return len(self.leaf_ids)

    def indices(self) -> np.ndarray:
        return np.asarray([self.tree.index_of(i) for i in self.leaf_ids], dtype=np.int64)


def choose_leaves(tree: Tree, k: int, rng) -> LeafSelection:
    """Uniform random k-subset of the tree's leaves."""
    if k < 1:
        raise DomainError(f"leaf count must be at least 1, got {k}")
    leaves = tree.leaf_indices()
    if k > leaves.shape[0]:
        raise TooManyLeavesRequested(
            f"requested {k} leaves but the tree has only {leaves.shape[0]}"
        )
    gen = as_generator(rng)
    picked = gen.choice(leaves, size=k, replace=False)
    ids = sorted(int(i) for i in tree.ids[picked])
    return LeafSelection(tree, tuple(ids))


def random_vertex_distance(tree: Tree, rng, mode: str = "vertex") -> float:
    """Normalized distance from the root to a random point of the tree.

    mode="vertex" picks a vertex uniformly (root included) and returns
    n**-0.5 times its root distance.  mode="contour" picks a uniform
    position along the depth-first contour instead (length-biased across
    edges); the two agree in distribution as trees grow.
    """
    gen = as_generator(rng)
    n = tree.n
    if mode == "vertex":
        v = int(gen.integers(n))
        return tree.root_distance_by_index(v) / math.sqrt(n)
    if mode == "contour":
        if n == 1:
            return 0.0
        lengths = tree.edge_length[1:]
        cum = np.cumsum(lengths)
        x = gen.uniform(0.0, cum[-1])
        e = int(np.searchsorted(cum, x, side="right"))
        e = min(e, n - 2)
        offset = x - (cum[e - 1] if e > 0 else 0.0)
        depth = tree.root_distances()
        d = depth[tree.parent[e + 1]] + offset
        return d / math.sqrt(n)
    raise DomainError(f"unknown mode {mode!r}; expected 'vertex' or 'contour'")


def _mark_union(tree: Tree, leaf_positions) -> np.ndarray:
    """Boolean mask of vertices lying on the union of root-to-leaf paths."""
    on_path = np.zeros(tree.n, dtype=bool)
    parent = tree.parent
    for v in leaf_positions:
        v = int(v)
        while v >= 0 and not on_path[v]:
            on_path[v] = True
            v = parent[v]
    return on_path


def ltree_extract(tree: Tree, selection: LeafSelection) -> Tree:
    """Least-common-ancestor subtree spanning the root and selected leaves.

    The result contains the root, the selected leaves, and every branch
    point of the union of root-to-leaf paths; degree-2 chains in between
    are contracted with their lengths summed, so root distances to the
    selected leaves are preserved.  Vertex ids carry over unchanged.
    """
    if selection.tree is not tree:
        raise DomainError("selection was built for a different tree")
    leaf_pos = selection.indices()
    on_path = _mark_union(tree, leaf_pos)

    n = tree.n
    child_count = np.zeros(n, dtype=np.int64)
    onp = np.flatnonzero(on_path)
    interior = onp[onp != 0]
    if interior.size:
        np.add.at(child_count, tree.parent[interior], 1)

    retained = np.zeros(n, dtype=bool)
    retained[0] = True
    retained[leaf_pos] = True
    retained |= on_path & (child_count >= 2)

    keep = np.flatnonzero(retained)  # ascending == preorder of the induced tree
    rank = {int(v): i for i, v in enumerate(keep)}
    parent = tree.parent
    lengths = tree.edge_length
    new_parent = np.empty(keep.shape[0], dtype=np.int64)
    new_length = np.empty(keep.shape[0], dtype=np.float64)
    new_parent[0] = -1
    new_length[0] = 0.0
    for i, v in enumerate(keep[1:], start=1):
        chain = []
        u = int(v)
        while True:
            chain.append(lengths[u])
            u = parent[u]
            if retained[u]:
                break
        new_parent[i] = rank[u]
        new_length[i] = math.fsum(chain)
    return Tree.from_preorder(new_parent, new_length, ids=tree.ids[keep], validate=False)


def ltree_total_length(tree: Tree, leaf_positions) -> float:
    """Total length of the union of root-to-leaf paths (edge-marking sum).

    Equals the total path length of the extracted subtree without building
    it; used by the test pipelines where only the scalar is needed.
    """
    on_path = _mark_union(tree, leaf_positions)
    on_path[0] = False  # the root carries no edge
    return math.fsum(tree.edge_length[on_path].tolist())


def _tree_from_children(children, length_above, root, ids=None):
    """Assemble a Tree from explicit ordered children lists.

    Parameters
    ----------
    children : list[list[int]]
        Ordered child indices per build vertex (the order is authoritative,
        unlike the index-order convention of the public constructor).
    length_above : sequence of float
        Edge length above each build vertex (ignored at the root).
    root : int
        Build index of the root.
    ids : sequence of int, optional
        Stable labels per build vertex.

    Returns
    -------
    (tree, order) where order[j] is the build index placed at preorder
    position j; callers can use it to realign per-vertex side data.
    """
    n = len(children)
    order = np.empty(n, dtype=np.int64)
    pos = 0
    stack = [root]
    while stack:
        v = stack.pop()
        order[pos] = v
        pos += 1
        ch = children[v]
        if ch:
            stack.extend(reversed(ch))
    if pos != n:
        raise DomainError("children lists contain a cycle or detached vertices")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    lengths = np.empty(n, dtype=np.float64)
    lengths[0] = 0.0
    la = np.asarray(length_above, dtype=np.float64)
    for v, ch in enumerate(children):
        for c in ch:
            parent[rank[c]] = rank[v]
            lengths[rank[c]] = la[c]
    id_arr = None if ids is None else np.asarray(ids, dtype=np.int64)[order]
    tree = Tree.from_preorder(parent, lengths, ids=id_arr, validate=False)
    return tree, order
