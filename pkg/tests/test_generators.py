import itertools
import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from crt_forest import (
    BranchLengthSpec,
    DomainError,
    InfeasibleSize,
    OffspringSpec,
    RejectionBudgetExceeded,
    assemble_tree,
    dyck_encode,
    parse_lengths,
    parse_offspring,
    rotate_to_tree,
    sample_birth_death,
    sample_cgw,
    sample_coalescent,
    sample_degree_sequence,
    sample_gw_unconditioned,
    sample_poisson_binary,
    tilt_to_critical,
)
from crt_forest.generators import _rejection_degrees

from conftest import make_rng


class TestTilting:
    def test_geometric(self):
        spec = OffspringSpec.geometric(0.5)
        assert spec.tilt == pytest.approx(1.0)
        assert spec.sigma2 == pytest.approx(2.0)

    def test_geometric_lambda_formula(self):
        for p in (0.2, 0.5, 0.8):
            assert OffspringSpec.geometric(p).tilt == pytest.approx(1 / (2 * (1 - p)))

    def test_binomial2_lambda(self):
        for p in (0.3, 0.5, 0.7):
            spec = OffspringSpec.binomial2(p)
            assert spec.tilt == pytest.approx((1 - p) / p)
            assert spec.pmf == pytest.approx((0.25, 0.5, 0.25))

    def test_strict_binary(self):
        spec = OffspringSpec.strict_binary(0.35)
        assert spec.tilt == pytest.approx(math.sqrt(0.65 / 0.35))
        assert spec.pmf == pytest.approx((0.5, 0.0, 0.5))
        assert spec.sigma2 == pytest.approx(1.0)

    def test_symmetric_strict_binary(self):
        spec = OffspringSpec.strict_binary(0.5)
        assert spec.tilt == pytest.approx(1.0)
        assert spec.sigma2 == pytest.approx(1.0)

    def test_unary_binary_critical_point(self):
        spec = OffspringSpec.unary_binary(1 / 3, 1 / 3)
        assert spec.tilt == pytest.approx(1.0)
        assert spec.sigma2 == pytest.approx(2 / 3)

    def test_unordered_variance(self):
        spec = OffspringSpec.unordered_unary_binary()
        assert spec.sigma2 == pytest.approx(2 - math.sqrt(2))

    def test_tilted_mean_is_one_on_grid(self):
        grid = np.linspace(0.05, 0.95, 19)
        specs = []
        specs += [OffspringSpec.geometric(p) for p in grid]
        specs += [OffspringSpec.binomial2(p) for p in grid]
        specs += [OffspringSpec.strict_binary(p) for p in grid]
        specs += [
            OffspringSpec.unary_binary(p0, p1)
            for p0 in grid
            for p1 in grid
            if p0 + p1 < 0.999
        ]
        specs += [OffspringSpec.m_ary(m) for m in (3, 4, 7)]
        for spec in specs:
            assert abs(spec.tilted_mean() - 1.0) < 1e-12

    def test_factory_and_parsing(self):
        assert tilt_to_critical("geo", 0.5) == OffspringSpec.geometric(0.5)
        assert parse_offspring("strictbin:0.35") == OffspringSpec.strict_binary(0.35)
        assert parse_offspring("ub:0.3,0.4").params == (0.3, 0.4)
        assert parse_offspring("uub").family == "unordered_unary_binary"
        assert parse_offspring("mary:4").params == (4,)
        with pytest.raises(DomainError):
            parse_offspring("nope:1")

    def test_invalid_params(self):
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(DomainError):
                OffspringSpec.geometric(bad)
        with pytest.raises(DomainError):
            OffspringSpec.unary_binary(0.6, 0.5)
        with pytest.raises(DomainError):
            OffspringSpec.m_ary(2)


class TestBranchLengths:
    def test_parsing(self):
        assert parse_lengths("uniform:0,2").mean == pytest.approx(1.0)
        assert parse_lengths("constant:1.5").mean == pytest.approx(1.5)
        assert parse_lengths("exp:0.7").mean == pytest.approx(0.7)
        with pytest.raises(DomainError):
            parse_lengths("uniform:2,1")
        with pytest.raises(DomainError):
            parse_lengths("constant:0")

    def test_samples_strictly_positive(self):
        rng = make_rng(60)
        for token in ("uniform:0,2", "exp:1", "constant:0.5"):
            x = parse_lengths(token).sample(rng, 50_000)
            assert np.all(x > 0)


def brute_force_composition_law(n):
    """Exact conditional law of n Geo(1/2) draws given sum n-1: uniform
    over compositions, so each multiset's probability is proportional to
    its number of arrangements."""
    target = n - 1
    counts = Counter()
    for comp in itertools.product(range(target + 1), repeat=n):
        if sum(comp) == target:
            counts[tuple(sorted(comp))] += 1
    total = sum(counts.values())
    return {m: c / total for m, c in counts.items()}


class TestDegreeSequences:
    def test_sum_postcondition(self):
        rng = make_rng(61)
        for spec, n in [
            (OffspringSpec.geometric(0.5), 1000),
            (OffspringSpec.binomial2(0.4), 777),
            (OffspringSpec.strict_binary(0.5), 501),
            (OffspringSpec.unary_binary(0.25, 0.3), 300),
            (OffspringSpec.m_ary(3), 400),
            (OffspringSpec.unordered_unary_binary(), 250),
        ]:
            for method in ("direct", "rejection"):
                seq = sample_degree_sequence(spec, n, rng, method=method)
                assert seq.shape[0] == n
                assert int(seq.sum()) == n - 1

    def test_strict_binary_counts_forced(self):
        rng = make_rng(62)
        seq = sample_degree_sequence(OffspringSpec.strict_binary(0.3), 5, rng)
        assert sorted(seq.tolist()) == [0, 0, 0, 2, 2]

    def test_parity_infeasible(self):
        with pytest.raises(InfeasibleSize):
            sample_degree_sequence(OffspringSpec.strict_binary(0.5), 4, make_rng(63))

    @pytest.mark.parametrize("method", ["direct", "rejection"])
    def test_geo_n7_matches_brute_force(self, method):
        law = brute_force_composition_law(7)
        rng = make_rng(64)
        n_draws = 30_000
        counts = Counter()
        for _ in range(n_draws):
            seq = sample_degree_sequence(OffspringSpec.geometric(0.5), 7, rng, method)
            counts[tuple(sorted(seq.tolist()))] += 1
        # chi-square against the exact multiset law, pooling tiny cells
        chi2 = 0.0
        df = -1
        pooled_obs = pooled_exp = 0.0
        for m, prob in sorted(law.items()):
            exp = prob * n_draws
            obs = counts.get(m, 0)
            if exp < 10:
                pooled_obs += obs
                pooled_exp += exp
                continue
            chi2 += (obs - exp) ** 2 / exp
            df += 1
        if pooled_exp > 0:
            chi2 += (pooled_obs - pooled_exp) ** 2 / pooled_exp
            df += 1
        assert stats.chi2.sf(chi2, df) > 0.01

    def test_direct_matches_rejection_three_point(self):
        # same conditional law for a genuinely tilted family
        spec = OffspringSpec.unary_binary(0.5, 0.2)
        rng = make_rng(65)
        n, n_draws = 6, 20_000
        got = {m: Counter() for m in ("direct", "rejection")}
        for method in got:
            for _ in range(n_draws):
                seq = sample_degree_sequence(spec, n, rng, method)
                got[method][tuple(sorted(seq.tolist()))] += 1
        keys = sorted(set(got["direct"]) | set(got["rejection"]))
        table = np.array([[got[m].get(k, 0) for k in keys] for m in got])
        keep = table.sum(axis=0) >= 10
        res = stats.chi2_contingency(table[:, keep])
        assert res.pvalue > 0.01

    def test_rejection_budget_exceeded(self):
        class NeverHits:
            label = "stub"

            def sample_tilted(self, rng, size=None):
                return np.zeros(size, dtype=np.int64)

        with pytest.raises(RejectionBudgetExceeded):
            _rejection_degrees(NeverHits(), 16, make_rng(66))


class TestRotation:
    def test_spec_examples(self):
        assert rotate_to_tree([0, 2, 0]).tolist() == [2, 0, 0]
        assert rotate_to_tree([2, 0, 0]).tolist() == [2, 0, 0]

    def test_bad_sum(self):
        with pytest.raises(DomainError):
            rotate_to_tree([1, 1, 1])

    @staticmethod
    def valid_rotations(seq):
        n = len(seq)
        out = []
        for r in range(n):
            rot = seq[r:] + seq[:r]
            walk = np.cumsum(np.asarray(rot) - 1)
            if np.all(walk[:-1] > -1) and walk[-1] == -1:
                out.append(tuple(rot))
        return out

    def test_exhaustive_uniqueness_small(self):
        for n in range(1, 7):
            target = n - 1
            for comp in itertools.product(range(target + 1), repeat=n):
                if sum(comp) != target:
                    continue
                valid = self.valid_rotations(list(comp))
                assert len(valid) == 1
                assert tuple(rotate_to_tree(list(comp)).tolist()) == valid[0]


class TestAssembly:
    def test_simple_cherry(self):
        rng = make_rng(67)
        t = assemble_tree([2, 0, 0], BranchLengthSpec.constant(1.0), rng)
        assert t.parent.tolist() == [-1, 0, 0]

    def test_out_degrees_preserved(self):
        rng = make_rng(68)
        spec = OffspringSpec.geometric(0.5)
        seq = rotate_to_tree(sample_degree_sequence(spec, 200, rng))
        t = assemble_tree(seq, BranchLengthSpec.uniform(0, 2), rng)
        assert t.out_degrees().tolist() == seq.tolist()

    def test_dyck_segment_count(self):
        rng = make_rng(69)
        t = sample_cgw(OffspringSpec.unordered_unary_binary(), 321, rng)
        assert dyck_encode(t).n_segments == 2 * (t.n - 1)


class TestSampleCgw:
    def test_size_one(self):
        t = sample_cgw(OffspringSpec.geometric(0.5), 1, make_rng(70))
        assert t.n == 1

    def test_exact_size(self):
        rng = make_rng(71)
        for n in (2, 17, 500):
            assert sample_cgw(OffspringSpec.binomial2(0.5), n, rng).n == n

    def test_strict_binary_shape_frequencies_n5(self):
        # two ordered shapes, each with probability 1/2
        rng = make_rng(72)
        spec = OffspringSpec.strict_binary(0.5)
        counts = Counter()
        for _ in range(4000):
            t = sample_cgw(spec, 5, rng, lengths=BranchLengthSpec.constant(1.0))
            counts[tuple(t.parent.tolist())] += 1
        assert len(counts) == 2
        freqs = np.asarray(sorted(counts.values())) / 4000
        chi2 = float(((freqs - 0.5) ** 2 / 0.5).sum()) * 4000
        assert stats.chi2.sf(chi2, 1) > 0.01


class TestUnconditionedGW:
    def test_single_vertex_probability(self):
        rng = make_rng(73)
        spec = OffspringSpec.binomial2(0.5)
        singles = sum(
            sample_gw_unconditioned(spec, rng).tree.n == 1 for _ in range(8000)
        )
        # pi_0 = 0.25
        assert singles / 8000 == pytest.approx(0.25, abs=0.02)

    def test_truncation_flag(self):
        rng = make_rng(74)
        spec = OffspringSpec.binomial2(0.5)
        seen_flag = False
        for _ in range(2000):
            draw = sample_gw_unconditioned(spec, rng, max_vertices=30)
            assert draw.tree.n <= 30
            if draw.truncated:
                seen_flag = True
                assert draw.tree.n == 30
        assert seen_flag

    def test_all_finite_at_criticality(self):
        # extinction is a.s. at criticality: with a generous cap nothing
        # but rare monsters should hit it
        rng = make_rng(75)
        spec = OffspringSpec.binomial2(0.5)
        flags = [sample_gw_unconditioned(spec, rng, max_vertices=10_000).truncated
                 for _ in range(300)]
        assert sum(flags) <= 6


class TestBirthDeath:
    def test_cherry(self):
        t = sample_birth_death(2, make_rng(76))
        assert t.n_leaves == 2
        assert t.n == 4  # origin, split, two tips

    def test_leaf_count_always_n_taxa(self):
        rng = make_rng(77)
        for n_taxa in (2, 7, 40):
            for _ in range(5):
                t = sample_birth_death(n_taxa, rng)
                assert t.n_leaves == n_taxa
                deg = t.out_degrees()
                assert set(deg.tolist()) <= {0, 1, 2}
                assert (deg == 1).sum() == 1  # only the origin stem

    def test_height_decreases_with_rate(self):
        rng = make_rng(78)
        slow = np.mean([sample_birth_death(20, rng, 1.0).height() for _ in range(150)])
        fast = np.mean([sample_birth_death(20, rng, 4.0).height() for _ in range(150)])
        assert fast < slow

    def test_extinction_path(self):
        rng = make_rng(79)
        for _ in range(20):
            t = sample_birth_death(5, rng, speciation_rate=2.0, extinction_rate=1.0)
            assert t.n_leaves == 5

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_birth_death(1, make_rng(80))


class TestCoalescent:
    def test_ultrametric(self):
        rng = make_rng(81)
        t = sample_coalescent(50, rng)
        d = t.root_distances()
        leaves = d[t.leaf_indices()]
        assert np.allclose(leaves, leaves[0], rtol=1e-12)

    def test_expected_height_two_leaves(self):
        rng = make_rng(82)
        hs = [sample_coalescent(2, rng).height() for _ in range(4000)]
        # merge waits Exp(1): mean height 1, sd 1
        assert np.mean(hs) == pytest.approx(1.0, abs=4 / math.sqrt(len(hs)))

    def test_three_leaf_pair_exchangeability(self):
        rng = make_rng(83)
        counts = Counter()
        for _ in range(6000):
            t = sample_coalescent(3, rng)
            # the two leaves sharing the deepest internal vertex merged first
            deepest = int(np.argmax(t.root_distances()[~(t.out_degrees() == 0)]))
            internal = np.flatnonzero(t.out_degrees() == 2)
            deepest = internal[np.argmax(t.root_distances()[internal])]
            pair = tuple(sorted(
                int(t.ids[c]) for c in np.flatnonzero(t.parent == deepest)
                if t.out_degrees()[c] == 0
            ))
            counts[pair] += 1
        assert len(counts) == 3
        freqs = np.asarray(list(counts.values())) / 6000
        assert np.all(np.abs(freqs - 1 / 3) < 0.03)

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_coalescent(1, make_rng(84))


class TestPoissonBinary:
    def test_shape_invariants(self):
        rng = make_rng(85)
        for k in (1, 2, 5, 40):
            t = sample_poisson_binary(k, rng)
            assert t.n_leaves == k
            assert t.n_edges == 2 * k - 1
            deg = t.out_degrees()
            assert deg[0] == 1
            assert np.all(np.isin(deg[1:], [0, 2]))

    def test_k1_squared_length_exponential(self):
        rng = make_rng(86)
        theta = 2.5
        s2 = [sample_poisson_binary(1, rng, theta=theta).total_path_length() ** 2
              for _ in range(5000)]
        res = stats.kstest(s2, stats.expon(scale=2 / theta).cdf)
        assert res.pvalue > 0.001

    def test_total_length_squared_gamma(self):
        rng = make_rng(87)
        k = 5
        s2 = [sample_poisson_binary(k, rng).total_path_length() ** 2
              for _ in range(5000)]
        res = stats.kstest(s2, stats.gamma(a=k, scale=2).cdf)
        assert res.pvalue > 0.001
        # Gamma(5, 2) moment: mean 10
        assert np.mean(s2) == pytest.approx(10.0, abs=4 * math.sqrt(20 / len(s2)))

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_poisson_binary(0, make_rng(88))
        with pytest.raises(DomainError):
            sample_poisson_binary(3, make_rng(89), theta=0.0)
