"""Depth-first contour coding of trees as Dyck paths.

The contour walk starts at the root, explores edges left to right at unit
speed, and returns to the root; its height at traversal position s is the
distance from the root to the point being visited.  Every edge is crossed
exactly twice, so a tree with n vertices maps to an excursion with
2(n-1) unit-slope segments over a domain of twice the total path length.

A breakpoint is recorded at every vertex visit, one segment per edge
crossing, including visits where the slope does not change sign: without
those, a unary chain and a single long edge would share the same contour
and the coding would not invert.  Interior breakpoints sit at height zero
exactly when the walk returns to a multi-child root between its subtrees.
Canonically a path stores the signed segment rises; decode reads each
edge length from its upward crossing, so decode(encode(t)) reproduces t
bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .errors import MalformedPath
from .trees import Tree

__all__ = ["DyckPath", "dyck_encode", "dyck_decode"]

_SLOPE_RTOL = 1e-9


class DyckPath:
    """Piecewise-linear excursion with slopes exactly +1 or -1.

    Parameters
    ----------
    rises : array-like of float
        Signed vertical extent of each segment, in traversal order.
        Positive = moving away from the root, negative = moving back.
        An empty array codes the single-vertex tree.
    """

    __slots__ = ("rises",)

    def __init__(self, rises):
        rises = np.ascontiguousarray(rises, dtype=np.float64)
        if rises.ndim != 1:
            raise MalformedPath("rises must be a 1-d array")
        if rises.size:
            if not np.all(np.isfinite(rises)) or np.any(rises == 0.0):
                raise MalformedPath("segment rises must be finite and nonzero")
            if rises[0] < 0:
                raise MalformedPath("an excursion must start with an upward segment")
        rises.setflags(write=False)
        object.__setattr__(self, "rises", rises)

    def __setattr__(self, name, value):
        raise AttributeError("DyckPath instances are immutable")

    @classmethod
    def from_breakpoints(cls, points) -> "DyckPath":
        """Build a path from (position, height) pairs.

        Positions must increase strictly, the first pair must be (0, 0),
        the last height must return to zero, interior heights must be
        nonnegative (the contour touches zero between subtrees of a
        multi-child root), and every segment must have slope +1 or -1
        (checked to relative tolerance 1e-9 to admit accumulated float
        positions).
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise MalformedPath("breakpoints must be (position, height) pairs")
        pos, height = pts[:, 0], pts[:, 1]
        if pts.shape[0] == 0 or pos[0] != 0.0 or height[0] != 0.0:
            raise MalformedPath("the first breakpoint must be (0, 0)")
        if pts.shape[0] == 1:
            return cls(np.empty(0))
        dp = np.diff(pos)
        dh = np.diff(height)
        if np.any(dp <= 0):
            raise MalformedPath("breakpoint positions must increase strictly")
        scale = float(pos[-1])
        if abs(height[-1]) > _SLOPE_RTOL * max(scale, 1.0):
            raise MalformedPath("the path must end at height zero")
        if np.any(np.abs(np.abs(dh) - dp) > _SLOPE_RTOL * dp):
            raise MalformedPath("segment slopes must be exactly +1 or -1")
        if np.any(height[1:-1] < -_SLOPE_RTOL * max(scale, 1.0)):
            raise MalformedPath("interior breakpoints must have nonnegative height")
        return cls(dh)

    @property
    def breakpoints(self) -> np.ndarray:
        """(m+1, 2) array of (position, height) pairs, derived from the rises."""
        m = self.rises.shape[0]
        out = np.zeros((m + 1, 2))
        if m:
            np.cumsum(np.abs(self.rises), out=out[1:, 0])
            np.cumsum(self.rises, out=out[1:, 1])
            out[-1, 1] = 0.0  # telescoping sum is exactly zero; drop float drift
        return out

    @property
    def domain_length(self) -> float:
        """Total traversal time: twice the coded tree's total path length."""
        return float(np.sum(np.abs(self.rises)))

    @property
    def n_segments(self) -> int:
        return self.rises.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyckPath):
            return NotImplemented
        return np.array_equal(self.rises, other.rises)

    __hash__ = None

    def __repr__(self) -> str:
        return f"DyckPath(segments={self.n_segments}, domain={self.domain_length:.6g})"


def dyck_encode(tree: Tree) -> DyckPath:
    """Contour path of a tree: depth-first, children left to right."""
    n = tree.n
    if n == 1:
        return DyckPath(np.empty(0))
    lengths = tree.edge_length
    indptr, order = tree.children_csr()
    out = np.empty(2 * (n - 1))
    k = 0
    stack_v = [0]
    stack_c = [int(indptr[0])]
    while stack_v:
        v = stack_v[-1]
        c = stack_c[-1]
        if c < indptr[v + 1]:
            stack_c[-1] = c + 1
            w = int(order[c])
            out[k] = lengths[w]
            k += 1
            stack_v.append(w)
            stack_c.append(int(indptr[w]))
        else:
            stack_v.pop()
            stack_c.pop()
            if stack_v:
                out[k] = -lengths[v]
                k += 1
    return DyckPath(out)


def dyck_decode(path: DyckPath) -> Tree:
    """Unique tree whose contour is the given path (inverse of dyck_encode).

    Each upward segment opens a new edge; each downward segment must
    retrace the most recently opened edge, to relative tolerance 1e-9 for
    paths assembled from float breakpoints (paths produced by dyck_encode
    match exactly).
    """
    rises = path.rises
    m = rises.shape[0]
    if m == 0:
        return Tree.from_preorder(
            np.array([-1], dtype=np.int64), np.zeros(1), validate=False
        )
    if m % 2:
        raise MalformedPath("a tree contour has an even number of segments")
    n = m // 2 + 1
    parent = np.empty(n, dtype=np.int64)
    lengths = np.empty(n)
    parent[0] = -1
    lengths[0] = 0.0
    stack = [0]
    nxt = 1
    for r in rises.tolist():
        if r > 0:
            if nxt == n:
                raise MalformedPath("more upward than downward segments")
            parent[nxt] = stack[-1]
            lengths[nxt] = r
            stack.append(nxt)
            nxt += 1
        else:
            if len(stack) == 1:
                raise MalformedPath("path descends below the root before the end")
            v = stack.pop()
            up = lengths[v]
            if abs(r + up) > _SLOPE_RTOL * up:
                raise MalformedPath(
                    "downward segment does not retrace the last opened edge"
                )
    if len(stack) != 1 or nxt != n:
        raise MalformedPath("path does not return to the root at the end")
    return Tree.from_preorder(parent, lengths, validate=False)
