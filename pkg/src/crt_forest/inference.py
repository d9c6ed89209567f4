"""Variance estimators, tree densities, and goodness-of-fit tests.

Distributional backbone: for the sequential binary-tree model (and for the
limiting least-common-ancestor subtrees of large critical trees), the
*squared* total path length of a k-leaf tree, scaled by the offspring
variance, is chi-square with 2k degrees of freedom; the squared normalized
root-to-random-vertex distance, likewise scaled, is chi-square with 2.
All test statistics below are built on those pivots: one-sample tests
compare scaled sums of squares to an upper-tail reference (the exact
F form of the studentized statistic by default, the limiting chi-square on
request) and two-sample tests compare scaled mean squares to F quantiles.

Two consistent variance estimators are available: the distance-based one
(from normalized root distances) and the subtree-based one (from leaf
counts and subtree path lengths).  Least-common-ancestor subtree tests use
the distance estimator; Dyck-path (random-distance) tests use the subtree
estimator, so the estimator is always more concentrated than the statistic
it scales.

By default the distance estimator consumes each tree's *mean* squared
normalized distance over all vertices rather than one random vertex.  Both
have the same limit; the single-vertex version carries O(1/sqrt(p))
plug-in noise that overwhelms the chi-square band of the subtree statistic
(df grows like k*p) and inflates the one-sample size by an order of
magnitude.  Pass sigma_vertices="single" for the literal one-draw variant.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .distributions import as_generator
from .errors import DegenerateSample, DomainError, NotStrictBinary
from .trees import Tree, ltree_total_length, random_vertex_distance

__all__ = [
    "TreeSummary",
    "VarianceEstimate",
    "TestReport",
    "summarize_tree",
    "summarize_trees",
    "estimate_sigma2_distance",
    "estimate_sigma2_ltree",
    "log_density_binary",
    "log_density_ltree",
    "one_sample_binary_test",
    "two_sample_binary_test",
    "one_sample_ltree_test",
    "two_sample_ltree_test",
    "one_sample_dyck_test",
    "two_sample_dyck_test",
    "ltree_one_sample_from_summaries",
    "ltree_two_sample_from_summaries",
    "dyck_one_sample_from_summaries",
    "dyck_two_sample_from_summaries",
    "permutation_two_sample",
]


# --------------------------------------------------------------------- #
# Summaries
# --------------------------------------------------------------------- #


@dataclass(frozen=True, slots=True)
class TreeSummary:
    """Per-tree scalar extracts feeding the tests.

    All lengths carry the n**-0.5 normalization under which large critical
    trees converge: w is the normalized distance from the root to one
    uniformly chosen vertex, msd the mean of the squared normalized
    distances over all vertices, and s the normalized total path length of
    the subtree spanning the root and k random picks.  k_sig and s2_sig
    hold the auxiliary small-subtree moments feeding the subtree-based
    variance estimator of the random-distance tests: s2_sig is the mean
    squared normalized length over several independent k_sig-pick spans
    (small k keeps the finite-size length bias of order k/(sigma sqrt(n))
    inside the test's acceptance band).
    """

    n: int
    n_leaves: int
    w: float
    msd: float
    k: int
    s: float
    k_sig: int
    s2_sig: float


def _resolve_k(n_leaves: int, leaf_count, leaf_fraction) -> int:
    if leaf_fraction is not None:
        if not 0.0 < leaf_fraction <= 1.0:
            raise DomainError(f"leaf fraction must be in (0, 1], got {leaf_fraction}")
        return min(n_leaves, max(1, round(leaf_fraction * n_leaves)))
    if leaf_count is None:
        raise DomainError("either leaf_count or leaf_fraction is required")
    if leaf_count < 1:
        raise DomainError(f"leaf count must be at least 1, got {leaf_count}")
    return min(int(leaf_count), n_leaves)


AUX_SPAN_PICKS = 3
AUX_SPAN_REPLICATES = 8


def summarize_tree(
    tree: Tree, rng, leaf_count=25, leaf_fraction=None, subtree_pick: str = "vertices"
) -> TreeSummary:
    """Compute the scalar summary of one tree with fresh randomness.

    subtree_pick chooses the sampling frame for the spanning subtree:
    "vertices" draws the k endpoints uniformly from all vertices (the
    mass-measure picks under which the finite-size subtree length matches
    its Gamma limit already at n ~ 1000), "leaves" restricts to leaves
    (finite trees then carry an upward length bias of order k/sqrt(n),
    which cancels between groups in two-sample comparisons but is visible
    in one-sample calibration).
    """
    gen = as_generator(rng)
    n = tree.n
    w = random_vertex_distance(tree, gen)
    depths = tree.root_distances()
    msd = float(np.mean(depths * depths)) / n
    leaves = tree.leaf_indices()
    if subtree_pick == "vertices":
        pool = None  # all vertices
        pool_size = n
    elif subtree_pick == "leaves":
        pool = leaves
        pool_size = leaves.shape[0]
    else:
        raise DomainError(
            f"subtree_pick must be 'vertices' or 'leaves', got {subtree_pick!r}"
        )

    def pick(count):
        if count >= pool_size:
            return np.arange(n) if pool is None else pool
        if pool is None:
            return gen.choice(n, size=count, replace=False)
        return gen.choice(pool, size=count, replace=False)

    k = _resolve_k(pool_size, leaf_count, leaf_fraction)
    s = ltree_total_length(tree, pick(k)) / math.sqrt(n)
    k_sig = min(AUX_SPAN_PICKS, pool_size)
    acc = 0.0
    for _ in range(AUX_SPAN_REPLICATES):
        sl = ltree_total_length(tree, pick(k_sig))
        acc += sl * sl
    s2_sig = acc / AUX_SPAN_REPLICATES / n
    return TreeSummary(
        n=n, n_leaves=leaves.shape[0], w=w, msd=msd, k=k, s=s,
        k_sig=k_sig, s2_sig=s2_sig,
    )


def summarize_trees(
    trees, rng, leaf_count=25, leaf_fraction=None, subtree_pick: str = "vertices"
) -> list:
    gen = as_generator(rng)
    return [
        summarize_tree(
            t, gen, leaf_count=leaf_count, leaf_fraction=leaf_fraction,
            subtree_pick=subtree_pick,
        )
        for t in trees
    ]


# --------------------------------------------------------------------- #
# Variance estimators
# --------------------------------------------------------------------- #


@dataclass(frozen=True, slots=True)
class VarianceEstimate:
    value: float
    method: str  # "distance" or "ltree"
    sample_size: int


def estimate_sigma2_distance(distances, squared: bool = False) -> VarianceEstimate:
    """Offspring-variance estimate 2p / sum(W_i^2) from normalized distances.

    With squared=True the inputs are already squared (e.g. per-tree mean
    squared distances).
    """
    w = np.asarray(distances, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise DegenerateSample("at least one distance is required")
    if not np.all(np.isfinite(w)):
        raise DomainError("distances must be finite")
    w2 = w if squared else w * w
    total = float(w2.sum())
    if total <= 0.0:
        raise DegenerateSample("all distances are zero; variance estimate undefined")
    return VarianceEstimate(2.0 * w.shape[0] / total, "distance", w.shape[0])


def estimate_sigma2_ltree(leaf_counts, path_lengths) -> VarianceEstimate:
    """Offspring-variance estimate 2*sum(k_i) / sum(S_i^2) from subtrees.

    Path lengths carry the n**-0.5 normalization of the source trees.
    """
    k = np.asarray(leaf_counts, dtype=np.float64)
    s = np.asarray(path_lengths, dtype=np.float64)
    if k.shape != s.shape or k.ndim != 1 or k.shape[0] < 1:
        raise DegenerateSample("leaf counts and path lengths must align, nonempty")
    total = float((s * s).sum())
    if total <= 0.0:
        raise DegenerateSample("all path lengths are zero; variance estimate undefined")
    return VarianceEstimate(2.0 * float(k.sum()) / total, "ltree", k.shape[0])


def _distance_sigma2(summaries, sigma_vertices: str) -> VarianceEstimate:
    usable = [s for s in summaries if s.n > 1]
    dropped = len(summaries) - len(usable)
    if dropped:
        warnings.warn(
            f"excluded {dropped} single-vertex trees from the distance-based "
            "variance estimate (their distance is identically zero)",
            stacklevel=3,
        )
    if not usable:
        raise DegenerateSample("no usable trees for the distance-based estimate")
    if sigma_vertices == "all":
        return estimate_sigma2_distance([s.msd for s in usable], squared=True)
    if sigma_vertices == "single":
        return estimate_sigma2_distance([s.w for s in usable])
    raise DomainError(f"sigma_vertices must be 'all' or 'single', got {sigma_vertices!r}")


# --------------------------------------------------------------------- #
# Densities for strict binary trees
# --------------------------------------------------------------------- #


def _strict_binary_leaf_count(tree: Tree) -> int:
    deg = tree.out_degrees()
    if tree.n < 2 or deg[0] != 1:
        raise NotStrictBinary("expected a root with exactly one child")
    rest = deg[1:]
    if not np.all((rest == 0) | (rest == 2)):
        raise NotStrictBinary("every non-root vertex must have 0 or 2 children")
    k = int((rest == 0).sum())
    if tree.n != 2 * k:
        raise NotStrictBinary("vertex count does not match a strict binary tree")
    return k


def _log_density_binary_ks(k: int, s: float, sigma2: float) -> float:
    # log of prod_{i=1}^{k-1} (2i-1) = lgamma(2k-1) - (k-1) log 2 - lgamma(k)
    log_odd = math.lgamma(2 * k - 1) - (k - 1) * math.log(2.0) - math.lgamma(k)
    return (
        log_odd
        - (k - 1) * math.log(2.0)
        + k * math.log(sigma2)
        + math.log(s)
        - 0.5 * s * s * sigma2
    )


def log_density_binary(tree: Tree) -> float:
    """Log density of a strict binary tree under the sequential model.

    Depends on the branch lengths only through their sum.
    """
    k = _strict_binary_leaf_count(tree)
    return _log_density_binary_ks(k, tree.total_path_length(), 1.0)


def log_density_ltree(tree: Tree, sigma2: float) -> float:
    """Variance-parameterized log density on limiting k-leaf subtrees."""
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    k = _strict_binary_leaf_count(tree)
    return _log_density_binary_ks(k, tree.total_path_length(), float(sigma2))


# --------------------------------------------------------------------- #
# Test reports
# --------------------------------------------------------------------- #


@dataclass(frozen=True, slots=True)
class TestReport:
    """Outcome of a goodness-of-fit test."""

    method: str
    distribution: str  # "chi2" | "F" | "permutation"
    statistic: float
    df1: float | None
    df2: float | None
    p_value: float
    alpha: float
    reject: bool
    critical_value: float | None = None
    sigma2_hat: tuple | None = None
    n_trees: tuple | None = None
    n_permutations: int | None = None

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "retain"

    def _fields(self) -> dict:
        def join(v):
            if v is None:
                return ""
            if isinstance(v, tuple):
                return ",".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in v)
            if isinstance(v, float):
                return f"{v:.12g}"
            return str(v)

        return {
            "statistic": join(self.statistic),
            "df1": join(self.df1),
            "df2": join(self.df2),
            "p_value": join(self.p_value),
            "alpha": join(self.alpha),
            "decision": self.decision,
            "sigma2_hat": join(self.sigma2_hat),
            "n_trees": join(self.n_trees),
            "method": self.method,
        }

    def to_keyvalue(self) -> str:
        """Flat key=value record with a fixed field set and order."""
        return "\n".join(f"{k}={v}" for k, v in self._fields().items())

    def to_json(self) -> str:
        doc = {
            "statistic": self.statistic,
            "df1": self.df1,
            "df2": self.df2,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "decision": self.decision,
            "sigma2_hat": list(self.sigma2_hat) if self.sigma2_hat else None,
            "n_trees": list(self.n_trees) if self.n_trees else None,
            "method": self.method,
        }
        return json.dumps(doc)


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly in (0, 1), got {alpha}")
    return float(alpha)


def _upper_tail_report(method, statistic, df, alpha, sigma2_hat, n_trees,
                       reference, df_sigma) -> TestReport:
    """Upper-tail one-sample report.

    reference="chi2" compares the statistic to the chi-square law printed
    in the critical function; reference="f" (default in the test wrappers)
    uses the exact finite-sample null of the studentized statistic -- a
    plugged-in variance estimate with df_sigma equivalent degrees of
    freedom turns chi2(df)/df into F(df, df_sigma) -- which keeps the size
    at alpha for moderate sample counts where the chi-square band is
    narrower than the estimator noise.
    """
    if reference == "chi2":
        p = float(stats.chi2.sf(statistic, df))
        crit = float(stats.chi2.ppf(1.0 - alpha, df))
        dist, df2 = "chi2", None
    elif reference == "f":
        p = float(stats.f.sf(statistic / df, df, df_sigma))
        crit = df * float(stats.f.ppf(1.0 - alpha, df, df_sigma))
        dist, df2 = "F", float(df_sigma)
    else:
        raise DomainError(f"reference must be 'chi2' or 'f', got {reference!r}")
    return TestReport(
        method=method,
        distribution=dist,
        statistic=float(statistic),
        df1=float(df),
        df2=df2,
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        critical_value=crit,
        sigma2_hat=sigma2_hat,
        n_trees=n_trees,
    )


def _f_report(method, val_a, val_b, df_a, df_b, alpha, two_sided,
              sigma2_hat, n_trees) -> TestReport:
    if not (val_a > 0 and val_b > 0):
        raise DegenerateSample("mean-square statistics must be positive")
    if two_sided:
        if val_a >= val_b:
            stat, df1, df2 = val_a / val_b, df_a, df_b
        else:
            stat, df1, df2 = val_b / val_a, df_b, df_a
        p = min(1.0, 2.0 * float(stats.f.sf(stat, df1, df2)))
        crit = float(stats.f.ppf(1.0 - alpha / 2.0, df1, df2))
    else:
        stat, df1, df2 = val_a / val_b, df_a, df_b
        p = float(stats.f.sf(stat, df1, df2))
        crit = float(stats.f.ppf(1.0 - alpha, df1, df2))
    return TestReport(
        method=method,
        distribution="F",
        statistic=float(stat),
        df1=float(df1),
        df2=float(df2),
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        critical_value=crit,
        sigma2_hat=sigma2_hat,
        n_trees=n_trees,
    )


def _log_ratio_variance(x, y) -> float:
    """Delta-method variance of ln(sum x / sum y) for paired per-tree terms."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = x.shape[0]
    mx, my = x.mean(), y.mean()
    if mx <= 0 or my <= 0 or p < 2:
        return float("nan")
    cvx = x.var() / (mx * mx)
    cvy = y.var() / (my * my)
    cxy = float(np.mean((x - mx) * (y - my))) / (mx * my)
    return max((cvx + cvy - 2.0 * cxy) / p, 0.0)


# --------------------------------------------------------------------- #
# Exact tests for the sequential binary model
# --------------------------------------------------------------------- #


def one_sample_binary_test(trees: Sequence[Tree], alpha: float = 0.01) -> TestReport:
    """Exact one-sample test: sum of squared path lengths vs chi-square.

    Under the unit-rate sequential model, S_i^2 is chi-square with 2 k_i
    degrees of freedom, so the statistic sum_i S_i^2 is chi-square with
    2 sum_i k_i; rejection is upper-tail.  No variance is estimated, so
    the chi-square reference is exact here.
    """
    alpha = _check_alpha(alpha)
    ks = [_strict_binary_leaf_count(t) for t in trees]
    t_stat = math.fsum(t.total_path_length() ** 2 for t in trees)
    df = 2.0 * sum(ks)
    return _upper_tail_report(
        "binary-chi2", t_stat, df, alpha, None, (len(ks),), "chi2", None
    )


def two_sample_binary_test(
    trees_a: Sequence[Tree],
    trees_b: Sequence[Tree],
    alpha: float = 0.01,
    two_sided: bool = True,
) -> TestReport:
    """Exact two-sample F test on scaled mean squared path lengths."""
    alpha = _check_alpha(alpha)
    ka = sum(_strict_binary_leaf_count(t) for t in trees_a)
    kb = sum(_strict_binary_leaf_count(t) for t in trees_b)
    s2a = math.fsum(t.total_path_length() ** 2 for t in trees_a)
    s2b = math.fsum(t.total_path_length() ** 2 for t in trees_b)
    return _f_report(
        "binary-F",
        s2a / (2.0 * ka),
        s2b / (2.0 * kb),
        2.0 * ka,
        2.0 * kb,
        alpha,
        two_sided,
        None,
        (len(trees_a), len(trees_b)),
    )


# --------------------------------------------------------------------- #
# Asymptotic tests from summaries
# --------------------------------------------------------------------- #


def _aux_sigma2(summaries) -> VarianceEstimate:
    """Subtree variance estimate from the auxiliary small spans."""
    k = np.asarray([s.k_sig for s in summaries], dtype=np.float64)
    s2 = np.asarray([s.s2_sig for s in summaries], dtype=np.float64)
    total = float(s2.sum())
    if total <= 0.0:
        raise DegenerateSample("all auxiliary subtree lengths are zero")
    return VarianceEstimate(2.0 * float(k.sum()) / total, "ltree", k.shape[0])


def ltree_one_sample_from_summaries(
    summaries, alpha: float = 0.01, sigma_vertices: str = "all",
    reference: str = "f",
) -> TestReport:
    """Upper-tail test on variance-scaled squared subtree path lengths."""
    alpha = _check_alpha(alpha)
    sig = _distance_sigma2(summaries, sigma_vertices)
    t_stat = sig.value * math.fsum(s.s * s.s for s in summaries)
    df = 2.0 * sum(s.k for s in summaries)
    # plugged sigma has at most 2 * (usable trees) equivalent df (one
    # squared-distance pivot per tree); the all-vertex average is tighter,
    # which only makes the F reference conservative
    df_sigma = 2.0 * sig.sample_size
    return _upper_tail_report(
        "ltree-chi2", t_stat, df, alpha, (sig.value,), (len(summaries),),
        reference, df_sigma,
    )


def dyck_one_sample_from_summaries(
    summaries, alpha: float = 0.01, reference: str = "f"
) -> TestReport:
    """Upper-tail test on variance-scaled squared normalized distances."""
    alpha = _check_alpha(alpha)
    sig = _aux_sigma2(summaries)
    t_stat = sig.value * math.fsum(s.w * s.w for s in summaries)
    df = 2.0 * len(summaries)
    df_sigma = 2.0 * sum(s.k_sig for s in summaries)
    return _upper_tail_report(
        "dyck-chi2", t_stat, df, alpha, (sig.value,), (len(summaries),),
        reference, df_sigma,
    )


def _two_sample_engine(method, summaries_a, summaries_b, alpha, two_sided,
                       reference, df_fn, sigma_fn) -> TestReport:
    """Shared two-sample logic over per-tree (numerator, denominator) terms.

    sigma_fn maps a group's summaries to (sigma2, scaled mean square, and
    the per-tree numerator/denominator terms of the group statistic);
    df_fn gives the printed degrees of freedom; reference="satterthwaite"
    replaces them with effective df matched to the delta-method variance
    of each group's log statistic, which keeps the F comparison honest
    when the plugged variance estimate carries real sampling noise.
    """
    alpha = _check_alpha(alpha)
    sig_a, val_a, num_a, den_a = sigma_fn(summaries_a)
    sig_b, val_b, num_b, den_b = sigma_fn(summaries_b)
    df_a, df_b = df_fn(summaries_a), df_fn(summaries_b)
    if reference == "satterthwaite":
        va = _log_ratio_variance(num_a, den_a)
        vb = _log_ratio_variance(num_b, den_b)
        if np.isfinite(va) and va > 0:
            df_a = 2.0 / va
        if np.isfinite(vb) and vb > 0:
            df_b = 2.0 / vb
    elif reference != "f":
        raise DomainError(
            f"reference must be 'f' or 'satterthwaite', got {reference!r}"
        )
    return _f_report(
        method, val_a, val_b, df_a, df_b, alpha, two_sided,
        (sig_a, sig_b), (len(summaries_a), len(summaries_b)),
    )


def ltree_two_sample_from_summaries(
    summaries_a, summaries_b, alpha: float = 0.01, two_sided: bool = True,
    sigma_vertices: str = "all", reference: str = "satterthwaite",
) -> TestReport:
    def sigma_fn(summaries):
        sig = _distance_sigma2(summaries, sigma_vertices)
        k2 = 2.0 * sum(s.k for s in summaries)
        num = np.asarray([s.s * s.s for s in summaries])
        if sigma_vertices == "all":
            den = np.asarray([s.msd for s in summaries])
        else:
            den = np.asarray([s.w * s.w for s in summaries])
        val = sig.value * float(num.sum()) / k2
        return sig.value, val, num, den

    return _two_sample_engine(
        "ltree-F", summaries_a, summaries_b, alpha, two_sided, reference,
        lambda ss: 2.0 * sum(s.k for s in ss), sigma_fn,
    )


def dyck_two_sample_from_summaries(
    summaries_a, summaries_b, alpha: float = 0.01, two_sided: bool = True,
    reference: str = "satterthwaite",
) -> TestReport:
    def sigma_fn(summaries):
        sig = _aux_sigma2(summaries)
        num = np.asarray([s.w * s.w for s in summaries])
        den = np.asarray([s.s2_sig for s in summaries])
        val = sig.value * float(num.sum()) / (2.0 * len(summaries))
        return sig.value, val, num, den

    return _two_sample_engine(
        "dyck-F", summaries_a, summaries_b, alpha, two_sided, reference,
        lambda ss: 2.0 * len(ss), sigma_fn,
    )


# --------------------------------------------------------------------- #
# Tree-level wrappers
# --------------------------------------------------------------------- #


def one_sample_ltree_test(
    trees, rng, leaf_count=25, leaf_fraction=None,
    alpha: float = 0.01, sigma_vertices: str = "all",
    subtree_pick: str = "vertices", reference: str = "f",
) -> TestReport:
    """Goodness-of-fit test for critical conditioned branching trees.

    Estimates the offspring variance from normalized root distances,
    extracts a random-pick subtree per tree, and compares the scaled sum
    of squared subtree lengths to its upper-tail reference.
    """
    summaries = summarize_trees(trees, rng, leaf_count, leaf_fraction, subtree_pick)
    return ltree_one_sample_from_summaries(summaries, alpha, sigma_vertices, reference)


def _paired_group_generators(rng):
    """Two generators with identical streams (common random numbers).

    Sharing the pick-randomness across groups couples only the sampling
    noise, never the trees; identical inputs then produce identical
    summaries and a two-sample statistic of exactly 1.
    """
    from .distributions import RngStream

    seed = int(as_generator(rng).integers(2**63))
    return RngStream(seed).generator(), RngStream(seed).generator()


def two_sample_ltree_test(
    trees_a, trees_b, rng, leaf_count=25, leaf_fraction=None,
    alpha: float = 0.01, two_sided: bool = True, sigma_vertices: str = "all",
    subtree_pick: str = "vertices", reference: str = "satterthwaite",
) -> TestReport:
    gen_a, gen_b = _paired_group_generators(rng)
    sa = summarize_trees(trees_a, gen_a, leaf_count, leaf_fraction, subtree_pick)
    sb = summarize_trees(trees_b, gen_b, leaf_count, leaf_fraction, subtree_pick)
    return ltree_two_sample_from_summaries(
        sa, sb, alpha, two_sided, sigma_vertices, reference
    )


def one_sample_dyck_test(
    trees, rng, leaf_count=25, leaf_fraction=None, alpha: float = 0.01,
    subtree_pick: str = "vertices", reference: str = "f",
) -> TestReport:
    """Goodness-of-fit test from one normalized random distance per tree."""
    summaries = summarize_trees(trees, rng, leaf_count, leaf_fraction, subtree_pick)
    return dyck_one_sample_from_summaries(summaries, alpha, reference)


def two_sample_dyck_test(
    trees_a, trees_b, rng, leaf_count=25, leaf_fraction=None,
    alpha: float = 0.01, two_sided: bool = True,
    subtree_pick: str = "vertices", reference: str = "satterthwaite",
) -> TestReport:
    gen_a, gen_b = _paired_group_generators(rng)
    sa = summarize_trees(trees_a, gen_a, leaf_count, leaf_fraction, subtree_pick)
    sb = summarize_trees(trees_b, gen_b, leaf_count, leaf_fraction, subtree_pick)
    return dyck_two_sample_from_summaries(sa, sb, alpha, two_sided, reference)


# --------------------------------------------------------------------- #
# Permutation test
# --------------------------------------------------------------------- #

_PERM_KINDS = ("ltree-F", "dyck-F", "binary-F")


def _summary_columns(summaries) -> np.ndarray:
    """Column stack (ones, nz, msd, w2, w2nz, s2, k, s2sig, ksig)."""
    cols = np.empty((len(summaries), 9))
    for i, s in enumerate(summaries):
        nz = 1.0 if s.n > 1 else 0.0
        cols[i] = (
            1.0, nz, s.msd, s.w * s.w, s.w * s.w * nz,
            s.s * s.s, float(s.k), s.s2_sig, float(s.k_sig),
        )
    return cols


def _oriented_stats(kind: str, sums_a: np.ndarray, sums_b: np.ndarray,
                    sigma_vertices: str) -> np.ndarray:
    """Vectorized oriented (>= 1) two-sample statistics from group sums.

    sums_* have the column layout of _summary_columns, one row per
    (permutation) replicate.
    """
    ones_a, nz_a, msd_a, w2_a, w2nz_a, s2_a, k_a, s2sig_a, ksig_a = sums_a.T
    ones_b, nz_b, msd_b, w2_b, w2nz_b, s2_b, k_b, s2sig_b, ksig_b = sums_b.T
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "binary-F":
            val_a = s2_a / (2.0 * k_a)
            val_b = s2_b / (2.0 * k_b)
        elif kind == "ltree-F":
            if sigma_vertices == "all":
                sig_a = 2.0 * nz_a / msd_a
                sig_b = 2.0 * nz_b / msd_b
            else:
                sig_a = 2.0 * nz_a / w2nz_a
                sig_b = 2.0 * nz_b / w2nz_b
            val_a = sig_a * s2_a / (2.0 * k_a)
            val_b = sig_b * s2_b / (2.0 * k_b)
        elif kind == "dyck-F":
            sig_a = 2.0 * ksig_a / s2sig_a
            sig_b = 2.0 * ksig_b / s2sig_b
            val_a = sig_a * w2_a / (2.0 * ones_a)
            val_b = sig_b * w2_b / (2.0 * ones_b)
        else:
            raise DomainError(f"unknown permutation statistic {kind!r}")
        ratio = val_a / val_b
        return np.maximum(ratio, 1.0 / ratio)


def permutation_two_sample(
    summaries_a,
    summaries_b,
    rng,
    statistic: str = "ltree-F",
    n_perm: int = 5000,
    alpha: float = 0.01,
    sigma_vertices: str = "all",
) -> TestReport:
    """Two-sample permutation test on per-tree summary tuples.

    Permutes whole summaries across the group labels, recomputes the
    oriented F-type statistic for each relabeling, and reports
    p = (1 + #{permuted >= observed}) / (n_perm + 1).
    """
    alpha = _check_alpha(alpha)
    if n_perm < 100:
        raise DomainError(f"need at least 100 permutations, got {n_perm}")
    if statistic not in _PERM_KINDS:
        raise DomainError(f"statistic must be one of {_PERM_KINDS}, got {statistic!r}")
    gen = as_generator(rng)
    cols = np.vstack([_summary_columns(summaries_a), _summary_columns(summaries_b)])
    na = len(summaries_a)
    ntot = cols.shape[0]
    total = cols.sum(axis=0)

    obs_a = cols[:na].sum(axis=0)
    observed = float(
        _oriented_stats(statistic, obs_a[None, :], (total - obs_a)[None, :],
                        sigma_vertices)[0]
    )

    exceed = 0
    done = 0
    chunk = max(1, min(512, n_perm))
    while done < n_perm:
        b = min(chunk, n_perm - done)
        keys = gen.random((b, ntot))
        take = np.argpartition(keys, na - 1, axis=1)[:, :na]
        sums_a = cols[take].sum(axis=1)
        stats_perm = _oriented_stats(statistic, sums_a, total[None, :] - sums_a,
                                     sigma_vertices)
        exceed += int(np.count_nonzero(stats_perm >= observed))
        done += b
    p = (1.0 + exceed) / (n_perm + 1.0)
    return TestReport(
        method=f"perm-{statistic}",
        distribution="permutation",
        statistic=observed,
        df1=None,
        df2=None,
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        critical_value=None,
        sigma2_hat=None,
        n_trees=(na, ntot - na),
        n_permutations=int(n_perm),
    )
