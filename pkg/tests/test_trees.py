import math

import numpy as np
import pytest

from crt_forest import (
    DomainError,
    EmptySelection,
    LeafSelection,
    OffspringSpec,
    TooManyLeavesRequested,
    Tree,
    UnknownVertex,
    choose_leaves,
    ltree_extract,
    ltree_total_length,
    random_vertex_distance,
    sample_cgw,
)

from conftest import cherry_tree, make_rng, path_tree


class TestTreeConstruction:
    def test_single_vertex(self):
        t = Tree([-1], [0.0])
        assert t.n == 1
        assert t.n_leaves == 1
        assert t.total_path_length() == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            Tree([], [])

    def test_two_roots_rejected(self):
        with pytest.raises(DomainError):
            Tree([-1, -1], [0.0, 1.0])

    def test_cycle_rejected(self):
        with pytest.raises(DomainError):
            Tree([1, 0, -1], [1.0, 1.0, 0.0])

    def test_nonpositive_length_rejected(self):
        with pytest.raises(DomainError):
            Tree([-1, 0], [0.0, 0.0])
        with pytest.raises(DomainError):
            Tree([-1, 0], [0.0, -1.0])
        with pytest.raises(DomainError):
            Tree([-1, 0], [0.0, np.inf])

    def test_normalization_to_preorder(self):
        # root 2 with children (0, 3); 0 has child 1; index order = sibling order
        t = Tree([2, 0, -1, 2], [1.0, 2.0, 0.0, 3.0])
        assert t.parent.tolist() == [-1, 0, 1, 0]
        # preorder: 2, 0, 1, 3 -> lengths 0, 1, 2, 3
        assert t.edge_length.tolist() == [0.0, 1.0, 2.0, 3.0]
        # fresh trees get canonical preorder ids
        assert t.ids.tolist() == [0, 1, 2, 3]
        # explicit ids ride along with the renumbering
        t2 = Tree([2, 0, -1, 2], [1.0, 2.0, 0.0, 3.0], ids=[10, 11, 12, 13])
        assert t2.ids.tolist() == [12, 10, 11, 13]

    def test_immutability(self):
        t = cherry_tree(1.0, 2.0)
        with pytest.raises(AttributeError):
            t.parent = None
        with pytest.raises(ValueError):
            t.edge_length[1] = 5.0


class TestMetrics:
    def test_total_path_length_arithmetic(self):
        # strict binary with 2 leaves, edges (1, 2, 3)
        t = cherry_tree(2.0, 3.0, stem=1.0)
        assert t.total_path_length() == 6.0

    def test_root_distance_path_graph(self):
        t = path_tree([1.0, 2.0])
        assert t.root_distance(0) == 0.0
        assert t.root_distance(2) == 3.0

    def test_root_distance_unknown_vertex(self):
        t = path_tree([1.0])
        with pytest.raises(UnknownVertex):
            t.root_distance(17)

    def test_root_distances_match_walks(self):
        rng = make_rng(1)
        t = sample_cgw(OffspringSpec.geometric(0.5), 500, rng)
        d = t.root_distances()
        for v in rng.choice(t.n, size=40, replace=False):
            assert d[v] == pytest.approx(t.root_distance_by_index(int(v)), rel=1e-12)

    def test_height(self):
        assert path_tree([1.0, 2.0, 3.0]).height() == pytest.approx(6.0)


class TestRandomVertexDistance:
    def test_single_vertex_is_zero(self):
        rng = make_rng(2)
        assert random_vertex_distance(Tree([-1], [0.0]), rng) == 0.0

    def test_two_vertex_enumeration(self):
        # edge length 1: W in {0, 1/sqrt(2)} each with probability 1/2
        rng = make_rng(3)
        t = path_tree([1.0])
        vals = [random_vertex_distance(t, rng) for _ in range(4000)]
        lo = sum(1 for v in vals if v == 0.0)
        hi = sum(1 for v in vals if v == pytest.approx(1 / math.sqrt(2)))
        assert lo + hi == 4000
        assert abs(lo / 4000 - 0.5) < 0.03

    def test_contour_mode_within_height(self):
        rng = make_rng(4)
        t = sample_cgw(OffspringSpec.geometric(0.5), 200, rng)
        hmax = t.height() / math.sqrt(t.n)
        for _ in range(50):
            w = random_vertex_distance(t, rng, mode="contour")
            assert 0.0 <= w <= hmax + 1e-12

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            random_vertex_distance(path_tree([1.0]), make_rng(5), mode="bogus")


class TestChooseLeaves:
    def test_all_leaves(self):
        rng = make_rng(6)
        t = cherry_tree(1.0, 2.0, stem=0.5)
        sel = choose_leaves(t, t.n_leaves, rng)
        assert sorted(sel.leaf_ids) == sorted(t.leaf_ids().tolist())

    def test_uniformity_chi2(self):
        # k=1 on a 3-leaf tree: each leaf with probability 1/3
        rng = make_rng(7)
        t = Tree([-1, 0, 0, 0], [0.0, 1.0, 1.0, 1.0])
        counts = {}
        n_draws = 6000
        for _ in range(n_draws):
            (lid,) = choose_leaves(t, 1, rng).leaf_ids
            counts[lid] = counts.get(lid, 0) + 1
        expected = n_draws / 3
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # chi2 with 2 df: 0.999 quantile is 13.8
        assert chi2 < 13.8

    def test_too_many(self):
        with pytest.raises(TooManyLeavesRequested):
            choose_leaves(cherry_tree(1, 1), 3, make_rng(8))

    def test_selection_validates_leaves(self):
        t = cherry_tree(1.0, 2.0, stem=0.5)
        with pytest.raises(DomainError):
            LeafSelection(t, (1,))  # vertex 1 is the stem, not a leaf
        with pytest.raises(EmptySelection):
            LeafSelection(t, ())


def fig2_tree():
    """Four chosen leaves under two nested branch points plus side chains.

    root -> b1 (1.0); b1 -> v1 (chain 0.5 + 0.5 through a pass-through
    vertex), b1 -> b2 (0.7); b2 -> v2 (0.3), b2 -> v3 (0.4);
    root -> v4 (chain 0.6 + 0.9).
    """
    parent = [-1, 0, 1, 2, 1, 4, 4, 0, 7]
    length = [0.0, 1.0, 0.5, 0.5, 0.7, 0.3, 0.4, 0.6, 0.9]
    return Tree(parent, length)


class TestLtreeExtract:
    def test_branch_points_retained(self):
        t = fig2_tree()
        sel = LeafSelection(t, (3, 5, 6, 8))  # v1, v2, v3, v4
        lt = ltree_extract(t, sel)
        # root + 4 leaves + branch points b1, b2 = 7 vertices
        assert lt.n == 7
        assert sorted(lt.ids.tolist()) == [0, 1, 3, 4, 5, 6, 8]
        # distances from root preserved exactly against the original
        for lid in sel.leaf_ids:
            assert lt.root_distance(lid) == pytest.approx(t.root_distance(lid), rel=1e-12)

    def test_pass_through_contracted(self):
        t = fig2_tree()
        lt = ltree_extract(t, LeafSelection(t, (3,)))
        # root -> v1 becomes a single compressed edge of length 2.0
        assert lt.n == 2
        assert lt.total_path_length() == pytest.approx(2.0, rel=1e-12)

    def test_all_leaves_contracts_chains_only(self):
        t = fig2_tree()
        sel = LeafSelection(t, tuple(int(i) for i in t.leaf_ids()))
        lt = ltree_extract(t, sel)
        assert lt.n_leaves == t.n_leaves
        assert lt.total_path_length() == pytest.approx(t.total_path_length(), rel=1e-12)

    def test_random_distance_preservation(self):
        rng = make_rng(9)
        for _ in range(25):
            t = sample_cgw(OffspringSpec.geometric(0.5), 300, rng)
            k = int(rng.integers(1, t.n_leaves + 1))
            sel = choose_leaves(t, k, rng)
            lt = ltree_extract(t, sel)
            for lid in sel.leaf_ids:
                assert lt.root_distance(lid) == pytest.approx(
                    t.root_distance(lid), rel=1e-12
                )

    def test_total_length_matches_edge_marking(self):
        rng = make_rng(10)
        for _ in range(25):
            t = sample_cgw(OffspringSpec.binomial2(0.5), 200, rng)
            sel = choose_leaves(t, min(5, t.n_leaves), rng)
            lt = ltree_extract(t, sel)
            marked = ltree_total_length(t, sel.indices())
            assert lt.total_path_length() == pytest.approx(marked, rel=1e-12)

    def test_idempotent(self):
        rng = make_rng(11)
        t = sample_cgw(OffspringSpec.geometric(0.5), 400, rng)
        sel = choose_leaves(t, 10, rng)
        lt = ltree_extract(t, sel)
        again = ltree_extract(lt, LeafSelection(lt, sel.leaf_ids))
        assert again == lt
        assert again.ids.tolist() == lt.ids.tolist()

    def test_wrong_tree_rejected(self):
        t1 = cherry_tree(1.0, 2.0)
        t2 = cherry_tree(1.0, 2.0)
        sel = LeafSelection(t1, (1, 2))
        with pytest.raises(DomainError):
            ltree_extract(t2, sel)
