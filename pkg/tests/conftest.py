import numpy as np
import pytest

from crt_forest import (
    BranchLengthSpec,
    OffspringSpec,
    RngStream,
    Tree,
    sample_birth_death,
    sample_cgw,
    sample_coalescent,
    sample_poisson_binary,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def make_rng(tag: int) -> np.random.Generator:
    """Independent deterministic stream per test site."""
    return RngStream(20260809, tag).generator()


def path_tree(lengths):
    """Root -> chain with the given edge lengths."""
    n = len(lengths) + 1
    parent = np.arange(-1, n - 1)
    return Tree(parent, np.concatenate([[0.0], np.asarray(lengths, float)]))


def cherry_tree(a, b, stem=None):
    """Root with two leaf children (a, b), optionally below a stem edge."""
    if stem is None:
        return Tree([-1, 0, 0], [0.0, a, b])
    return Tree([-1, 0, 1, 1], [0.0, stem, a, b])


def mixed_tree_pool(count, max_n, rng):
    """Trees from every generator, sizes spread over [1, max_n]."""
    geo = OffspringSpec.geometric(0.5)
    bin2 = OffspringSpec.binomial2(0.5)
    sb = OffspringSpec.strict_binary(0.4)
    ub = OffspringSpec.unary_binary(0.3, 0.3)
    uub = OffspringSpec.unordered_unary_binary()
    mary = OffspringSpec.m_ary(3)
    lengths = BranchLengthSpec.uniform(0.0, 2.0)
    pool = []
    for i in range(count):
        u = rng.random()
        n = max(1, int(max_n ** u))  # log-spread sizes
        which = i % 9
        if which == 0:
            pool.append(sample_cgw(geo, n, rng, lengths=lengths))
        elif which == 1:
            pool.append(sample_cgw(bin2, n, rng, lengths=lengths))
        elif which == 2:
            pool.append(sample_cgw(sb, n | 1, rng, lengths=lengths))
        elif which == 3:
            pool.append(sample_cgw(ub, n, rng, lengths=lengths))
        elif which == 4:
            pool.append(sample_cgw(uub, n, rng, lengths=lengths))
        elif which == 5:
            pool.append(sample_cgw(mary, n, rng, lengths=lengths))
        elif which == 6:
            pool.append(sample_poisson_binary(max(1, n // 2), rng))
        elif which == 7:
            pool.append(sample_birth_death(max(2, n // 2), rng))
        else:
            pool.append(sample_coalescent(max(2, n // 2), rng))
    return pool
