import numpy as np
import pytest

from crt_forest import (
    MalformedNewick,
    Tree,
    from_newick,
    read_newick_file,
    to_newick,
    write_newick_file,
)

from conftest import cherry_tree, make_rng, mixed_tree_pool


def test_simple_write():
    t = cherry_tree(1.0, 2.0)
    assert to_newick(t) == "(L1:1.0,L2:2.0)L0:0.0;"


def test_single_vertex():
    t = Tree([-1], [0.0])
    s = to_newick(t)
    assert s == "L0:0.0;"
    assert from_newick(s) == t


def test_round_trip_exact():
    rng = make_rng(30)
    for t in mixed_tree_pool(60, 300, rng):
        back = from_newick(to_newick(t))
        assert back == t
        assert back.ids.tolist() == t.ids.tolist()


def test_child_order_is_authoritative():
    a = from_newick("(L1:1.0,L2:2.0)L0:0.0;")
    b = from_newick("(L2:2.0,L1:1.0)L0:0.0;")
    assert a != b


def test_unlabeled_internal_nodes():
    t = from_newick("(L1:1.0,L2:2.0):0.0;")
    assert t.n == 3
    assert sorted(t.leaf_ids().tolist()) == [1, 2]


def test_scientific_notation_lengths():
    t = from_newick("(L1:1e-3,L2:2.5e2)L0:0;")
    assert t.edge_length[1] == pytest.approx(1e-3)


def test_deep_tree_no_recursion_limit():
    n = 40000
    parent = np.arange(-1, n - 1)
    lengths = np.concatenate([[0.0], np.ones(n - 1)])
    t = Tree(parent, lengths)
    assert from_newick(to_newick(t)) == t


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "L0:1.0",  # missing semicolon
        "(L1:1.0,L2:2.0)L0:0.0;;extra",
        "(L1:1.0,L2:2.0;",  # unbalanced
        "(L1:1.0))L0:0;",
        "(L1:1.0,L2:oops)L0:0;",
        "(weird:1.0,L2:2.0)L0:0;",  # unsupported label
        "(L1:1.0,L1:2.0)L0:0;",  # duplicate ids
        "(L1,L2:2.0)L0:0;",  # missing length
    ],
)
def test_malformed_inputs(bad):
    with pytest.raises(MalformedNewick):
        from_newick(bad)


def test_file_round_trip_and_line_numbers(tmp_path):
    rng = make_rng(31)
    trees = mixed_tree_pool(10, 100, rng)
    path = tmp_path / "forest.nwk"
    write_newick_file(trees, path)
    back = read_newick_file(path)
    assert len(back) == len(trees)
    assert all(a == b for a, b in zip(back, trees))

    bad = tmp_path / "bad.nwk"
    bad.write_text(to_newick(trees[0]) + "\nnot a tree\n")
    with pytest.raises(MalformedNewick, match="bad.nwk:2"):
        read_newick_file(bad)
