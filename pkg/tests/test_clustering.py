import numpy as np
import pytest

from crt_forest import (
    DomainError,
    InsufficientData,
    agglomerate,
    heterogeneity_summary,
    to_newick,
    two_sample_ltree_test,
)

from conftest import make_rng


class TestHandComputedMerges:
    def test_single_linkage(self):
        # {0,1,3}: merge {0,1} at gap 1, then with {3} at min-gap 2
        d = agglomerate([0.0, 1.0, 3.0], linkage="single")
        heights = sorted(d.merge_heights[d.merge_heights > 0].tolist())
        assert heights == pytest.approx([1.0, 2.0])
        # all leaves equidistant from the root at the final merge height
        depths = d.tree.root_distances()[d.tree.leaf_indices()]
        assert np.allclose(depths, 2.0)

    def test_complete_linkage(self):
        # second merge at max distance 3
        d = agglomerate([0.0, 1.0, 3.0], linkage="complete")
        heights = sorted(d.merge_heights[d.merge_heights > 0].tolist())
        assert heights == pytest.approx([1.0, 3.0])

    def test_average_linkage(self):
        # mean({0,1}) = 0.5 vs mean({3}): second merge at 2.5
        d = agglomerate([0.0, 1.0, 3.0], linkage="average")
        heights = sorted(d.merge_heights[d.merge_heights > 0].tolist())
        assert heights == pytest.approx([1.0, 2.5])

    def test_heterogeneity_summary(self):
        d = agglomerate([0.0, 1.0, 3.0], linkage="single")
        h = heterogeneity_summary(d)
        assert h.height == pytest.approx(2.0)
        # edges: root->merge1 (1), root->leaf3 (2), merge1->both leaves (1, 1)
        assert h.total_path_length == pytest.approx(5.0)
        assert h.branch_count == 4


class TestInvariants:
    def test_ultrametric_and_binary(self):
        rng = make_rng(130)
        for linkage in ("single", "average", "complete"):
            vals = rng.normal(size=200)
            d = agglomerate(vals, linkage=linkage)
            t = d.tree
            assert t.n_leaves == 200
            deg = t.out_degrees()
            assert set(deg.tolist()) == {0, 2}
            depths = t.root_distances()[t.leaf_indices()]
            assert np.allclose(depths, depths[0], rtol=1e-9)

    def test_leaf_ids_are_input_positions(self):
        vals = [5.0, -1.0, 2.0, 0.7]
        d = agglomerate(vals)
        assert sorted(d.tree.leaf_ids().tolist()) == [0, 1, 2, 3]
        # the leaf labeled j sits at the sorted position of vals[j]
        for leaf in d.tree.leaf_indices():
            assert d.merge_heights[leaf] == 0.0

    def test_permutation_invariance_up_to_relabeling(self):
        rng = make_rng(131)
        vals = rng.normal(size=80)
        d1 = agglomerate(vals, linkage="single")
        perm = rng.permutation(80)
        d2 = agglomerate(vals[perm], linkage="single")
        assert d1.tree == d2.tree  # structural equality ignores labels
        assert np.allclose(d1.merge_heights, d2.merge_heights)

    def test_deterministic(self):
        vals = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6]
        assert to_newick(agglomerate(vals).tree) == to_newick(agglomerate(vals).tree)

    def test_duplicate_values_bumped_with_warning(self):
        with pytest.warns(UserWarning, match="perturbed upward"):
            d = agglomerate([1.0, 1.0, 1.0, 2.0])
        assert np.all(d.tree.edge_length[1:] > 0)

    def test_merge_heights_nondecreasing_to_root(self):
        rng = make_rng(132)
        d = agglomerate(rng.exponential(size=150), linkage="average")
        t = d.tree
        for v in range(1, t.n):
            assert d.merge_heights[v] < d.merge_heights[t.parent[v]] or (
                d.merge_heights[v] == 0.0
            )


class TestValidation:
    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            agglomerate([1.0])

    def test_bad_linkage(self):
        with pytest.raises(DomainError):
            agglomerate([1.0, 2.0], linkage="ward")

    def test_cap(self):
        with pytest.raises(DomainError):
            agglomerate(np.arange(100), max_points=50)

    def test_nonfinite(self):
        with pytest.raises(DomainError):
            agglomerate([1.0, np.nan])


class TestPipeline:
    def test_dendrograms_feed_two_sample_test(self):
        rng = make_rng(133)
        group_a = [agglomerate(rng.normal(size=120)).tree for _ in range(8)]
        group_b = [agglomerate(rng.normal(size=120)).tree for _ in range(8)]
        report = two_sample_ltree_test(
            group_a, group_b, rng, leaf_fraction=0.2, subtree_pick="leaves"
        )
        assert report.df1 > 0 and 0 <= report.p_value <= 1

    def test_separated_mixture_rejected(self):
        rng = make_rng(134)
        uni = [agglomerate(rng.normal(size=200)).tree for _ in range(10)]
        bim = [
            agglomerate(
                np.concatenate(
                    [rng.normal(-4, 0.3, size=100), rng.normal(4, 0.3, size=100)]
                )
            ).tree
            for _ in range(10)
        ]
        report = two_sample_ltree_test(
            uni, bim, rng, leaf_fraction=0.2, subtree_pick="leaves", alpha=0.01
        )
        assert report.reject
