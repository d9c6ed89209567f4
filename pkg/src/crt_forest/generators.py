"""Tree-generating models.

Conditioned Galton-Watson trees are sampled in three steps: draw a degree
vector of n i.i.d. offspring counts conditioned on summing to n-1, rotate
it to the unique cyclic shift whose partial-sum walk stays above -1 (cycle
lemma), and assemble the preorder tree with i.i.d. branch lengths.

The conditioning step has two interchangeable implementations with exactly
the same law:

* ``rejection`` redraws the n counts until they hit the target sum
  (expected ~sqrt(2*pi*sigma^2*n) attempts, budget-capped);
* ``direct`` samples the conditional law in one shot per family —
  uniform compositions for the geometric family, grouped multivariate
  hypergeometric for binomial families, forced counts for strict binary,
  and an explicit count distribution for three-point supports.

Non-critical offspring parameters are reduced to critical ones by
exponential tilting pi_k -> pi_k * lam^k / N(lam); the conditioned law is
invariant under the tilt, so both samplers draw from the tilted pmf.

Also here: unconditioned Galton-Watson trees (size-capped), constant-rate
birth-death trees on a fixed number of tips, Kingman coalescent trees, and
the sequential binary-tree model driven by a non-homogeneous Poisson
process with linear rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .distributions import as_generator
from .errors import (
    DomainError,
    InfeasibleSize,
    NotTiltable,
    RejectionBudgetExceeded,
)
from .trees import Tree, _tree_from_children

__all__ = [
    "OffspringSpec",
    "tilt_to_critical",
    "parse_offspring",
    "BranchLengthSpec",
    "parse_lengths",
    "sample_degree_sequence",
    "rotate_to_tree",
    "assemble_tree",
    "sample_cgw",
    "GWDraw",
    "sample_gw_unconditioned",
    "sample_birth_death",
    "sample_coalescent",
    "sample_poisson_binary",
]


# --------------------------------------------------------------------- #
# Offspring distributions
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class OffspringSpec:
    """An offspring family together with its critical (mean-1) tilt.

    Attributes
    ----------
    family : str
        One of geometric, binomial2, strict_binary, unary_binary,
        unordered_unary_binary, m_ary.
    params : tuple
        Raw family parameters as given.
    tilt : float
        Tilting constant lambda with pi_k -> pi_k * lambda^k / N(lambda).
    pmf : tuple[float, ...] | None
        Tilted pmf on {0, 1, ..., len-1}; None for the geometric family,
        whose tilt is always Geo(1/2) on {0, 1, 2, ...}.
    sigma2 : float
        Variance of the tilted (critical) offspring distribution.
    """

    family: str
    params: tuple
    tilt: float
    pmf: tuple | None
    sigma2: float

    # -- constructors ---------------------------------------------------

    @staticmethod
    def geometric(p: float) -> "OffspringSpec":
        """pi_k = p (1-p)^k on k = 0, 1, 2, ...; tilts to Geo(1/2)."""
        _check_unit_open(p, "p")
        lam = 1.0 / (2.0 * (1.0 - p))
        if not (0.0 < lam * (1.0 - p) < 1.0):
            raise NotTiltable(f"no admissible tilt for geometric p={p}")
        return OffspringSpec("geometric", (p,), lam, None, 2.0)

    @staticmethod
    def binomial2(p: float) -> "OffspringSpec":
        """Binomial(2, p); tilts to Binomial(2, 1/2)."""
        _check_unit_open(p, "p")
        lam = (1.0 - p) / p
        return _finish("binomial2", (p,), lam, (0.25, 0.5, 0.25))

    @staticmethod
    def strict_binary(p: float) -> "OffspringSpec":
        """pi_0 = 1-p, pi_2 = p; tilts to (1/2, 0, 1/2)."""
        _check_unit_open(p, "p")
        lam = math.sqrt((1.0 - p) / p)
        return _finish("strict_binary", (p,), lam, (0.5, 0.0, 0.5))

    @staticmethod
    def unary_binary(p0: float, p1: float) -> "OffspringSpec":
        """pi_0 = p0, pi_1 = p1, pi_2 = 1-p0-p1."""
        _check_unit_open(p0, "p0")
        _check_unit_open(p1, "p1")
        p2 = 1.0 - p0 - p1
        if p2 <= 0.0:
            raise DomainError(f"p0 + p1 must be < 1, got {p0 + p1}")
        # unit tilted mean requires pi2 * lam^2 = pi0
        lam = math.sqrt(p0 / p2)
        norm = 2.0 * p0 + p1 * lam
        pmf = (p0 / norm, p1 * lam / norm, p0 / norm)
        return _finish("unary_binary", (p0, p1), lam, pmf)

    @staticmethod
    def unordered_unary_binary() -> "OffspringSpec":
        """pi = (1, sqrt(2), 1) / (2 + sqrt(2)); already critical."""
        r = 2.0 + math.sqrt(2.0)
        pmf = (1.0 / r, math.sqrt(2.0) / r, 1.0 / r)
        return _finish("unordered_unary_binary", (), 1.0, pmf)

    @staticmethod
    def m_ary(m: int) -> "OffspringSpec":
        """Binomial(m, 1/m) for m >= 3; critical with variance 1 - 1/m."""
        m = int(m)
        if m < 3:
            raise DomainError(f"m-ary family requires m >= 3, got {m}")
        q = 1.0 / m
        pmf = tuple(
            math.exp(
                gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)
                + i * math.log(q) + (m - i) * math.log1p(-q)
            )
            for i in range(m + 1)
        )
        return _finish("m_ary", (m,), 1.0, pmf)

    # -- properties ------------------------------------------------------

    @property
    def label(self) -> str:
        if not self.params:
            return _FAMILY_TOKEN[self.family]
        args = ",".join(f"{p:g}" for p in self.params)
        return f"{_FAMILY_TOKEN[self.family]}:{args}"

    def tilted_mean(self) -> float:
        if self.pmf is None:
            return 1.0  # Geo(1/2)
        return float(sum(i * q for i, q in enumerate(self.pmf)))

    # -- sampling --------------------------------------------------------

    def sample_tilted(self, rng, size=None):
        """Offspring counts from the tilted (critical) law."""
        gen = as_generator(rng)
        if self.pmf is None:
            out = gen.geometric(0.5, size=size) - 1
        else:
            cum = np.cumsum(self.pmf)
            cum[-1] = 1.0
            out = np.searchsorted(cum, gen.random(size), side="right")
        return int(out) if size is None else out.astype(np.int64, copy=False)

    def sample_raw(self, rng, size=None):
        """Offspring counts from the raw (possibly non-critical) law."""
        gen = as_generator(rng)
        fam = self.family
        if fam == "geometric":
            out = gen.geometric(self.params[0], size=size) - 1
        elif fam == "binomial2":
            out = gen.binomial(2, self.params[0], size=size)
        elif fam == "strict_binary":
            out = 2 * (gen.random(size) < self.params[0]).astype(np.int64)
        elif fam == "unary_binary":
            p0, p1 = self.params
            cum = np.array([p0, p0 + p1, 1.0])
            out = np.searchsorted(cum, gen.random(size), side="right")
        elif fam in ("unordered_unary_binary", "m_ary"):
            # these families are parameterized at their critical point
            return self.sample_tilted(gen, size=size)
        else:  # pragma: no cover
            raise DomainError(f"unknown family {fam}")
        return int(out) if size is None else np.asarray(out, dtype=np.int64)


def _check_unit_open(p: float, name: str) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie strictly in (0, 1), got {p}")


def _finish(family, params, lam, pmf) -> OffspringSpec:
    if not (np.isfinite(lam) and lam > 0):
        raise NotTiltable(f"tilting constant for {family}{params} is not admissible")
    pmf = tuple(float(q) for q in pmf)
    total = math.fsum(pmf)
    pmf = tuple(q / total for q in pmf)
    mean = math.fsum(i * q for i, q in enumerate(pmf))
    if abs(mean - 1.0) > 1e-9:
        raise NotTiltable(f"tilted mean {mean} != 1 for {family}{params}")
    sigma2 = math.fsum(i * i * q for i, q in enumerate(pmf)) - mean * mean
    return OffspringSpec(family, tuple(params), float(lam), pmf, float(sigma2))


_FAMILY_TOKEN = {
    "geometric": "geo",
    "binomial2": "bin2",
    "strict_binary": "strictbin",
    "unary_binary": "ub",
    "unordered_unary_binary": "uub",
    "m_ary": "mary",
}

_FAMILY_BUILDERS = {
    "geo": OffspringSpec.geometric,
    "geometric": OffspringSpec.geometric,
    "bin2": OffspringSpec.binomial2,
    "binomial2": OffspringSpec.binomial2,
    "strictbin": OffspringSpec.strict_binary,
    "strict_binary": OffspringSpec.strict_binary,
    "bin": OffspringSpec.strict_binary,
    "ub": OffspringSpec.unary_binary,
    "unary_binary": OffspringSpec.unary_binary,
    "uub": OffspringSpec.unordered_unary_binary,
    "unordered_unary_binary": OffspringSpec.unordered_unary_binary,
    "mary": OffspringSpec.m_ary,
    "m_ary": OffspringSpec.m_ary,
}


def tilt_to_critical(family: str, *params) -> OffspringSpec:
    """Build an OffspringSpec from a family name and raw parameters."""
    try:
        builder = _FAMILY_BUILDERS[family.lower()]
    except KeyError:
        raise DomainError(f"unknown offspring family {family!r}") from None
    return builder(*params)


def parse_offspring(token: str) -> OffspringSpec:
    """Parse plain-text specs such as 'geo:0.5' or 'ub:0.33,0.33'."""
    name, _, rest = token.partition(":")
    args = [float(x) for x in rest.split(",")] if rest else []
    if name.lower() in ("mary", "m_ary") and args:
        args = [int(args[0])]
    return tilt_to_critical(name, *args)


# --------------------------------------------------------------------- #
# Branch lengths
# --------------------------------------------------------------------- #


@dataclass(frozen=True)
class BranchLengthSpec:
    """An i.i.d. branch-length law with strictly positive support."""

    kind: str
    params: tuple

    @staticmethod
    def uniform(a: float, b: float) -> "BranchLengthSpec":
        if not (0.0 <= a < b) or not np.isfinite(b):
            raise DomainError(f"uniform lengths need 0 <= a < b, got ({a}, {b})")
        return BranchLengthSpec("uniform", (float(a), float(b)))

    @staticmethod
    def constant(c: float) -> "BranchLengthSpec":
        if not (c > 0 and np.isfinite(c)):
            raise DomainError(f"constant length must be positive, got {c}")
        return BranchLengthSpec("constant", (float(c),))

    @staticmethod
    def exponential(mean: float) -> "BranchLengthSpec":
        if not (mean > 0 and np.isfinite(mean)):
            raise DomainError(f"exponential mean must be positive, got {mean}")
        return BranchLengthSpec("exponential", (float(mean),))

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        return self.params[0]

    @property
    def label(self) -> str:
        args = ",".join(f"{p:g}" for p in self.params)
        return f"{self.kind}:{args}"

    def sample(self, rng, size: int) -> np.ndarray:
        gen = as_generator(rng)
        if self.kind == "uniform":
            a, b = self.params
            out = gen.uniform(a, b, size=size)
            floor = a if a > 0 else 0.0
            bad = np.flatnonzero(out <= floor) if a == 0.0 else ()
        elif self.kind == "constant":
            return np.full(size, self.params[0])
        else:
            out = gen.exponential(self.params[0], size=size)
            bad = np.flatnonzero(out <= 0.0)
        # a draw landing exactly on 0 has probability ~2^-53; redraw to keep
        # the positivity invariant unconditional
        while len(bad):
            out[bad] = self.sample(gen, len(bad))
            bad = bad[out[bad] <= 0.0]
        return out


def parse_lengths(token: str) -> BranchLengthSpec:
    """Parse plain-text specs such as 'uniform:0,2', 'constant:1', 'exp:1'."""
    name, _, rest = token.partition(":")
    args = [float(x) for x in rest.split(",")] if rest else []
    name = name.lower()
    if name in ("uniform", "unif"):
        return BranchLengthSpec.uniform(*args)
    if name in ("constant", "const"):
        return BranchLengthSpec.constant(*args)
    if name in ("exponential", "exp"):
        return BranchLengthSpec.exponential(*args)
    raise DomainError(f"unknown branch-length law {name!r}")


_DEFAULT_LENGTHS = BranchLengthSpec.uniform(0.0, 2.0)


# --------------------------------------------------------------------- #
# Degree sequences and assembly
# --------------------------------------------------------------------- #


def _check_feasible(spec: OffspringSpec, n: int) -> None:
    if n < 1:
        raise DomainError(f"tree size must be at least 1, got {n}")
    if spec.family == "strict_binary" and n % 2 == 0:
        raise InfeasibleSize(
            f"strict binary trees need an odd vertex count, got {n}"
        )


def sample_degree_sequence(spec: OffspringSpec, n: int, rng, method: str = "auto") -> np.ndarray:
    """n i.i.d. offspring counts conditioned on summing to n-1 (pre-rotation).

    method="direct" (the "auto" default) samples the conditional law in
    closed form; method="rejection" redraws i.i.d. vectors until the sum
    hits n-1, with an attempt budget of 50*sqrt(n).  Both produce the same
    distribution.
    """
    _check_feasible(spec, n)
    gen = as_generator(rng)
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    if method in ("auto", "direct"):
        return _direct_degrees(spec, n, gen)
    if method == "rejection":
        return _rejection_degrees(spec, n, gen)
    raise DomainError(f"unknown method {method!r}")


def _rejection_degrees(spec: OffspringSpec, n: int, gen) -> np.ndarray:
    target = n - 1
    budget = int(math.ceil(50.0 * math.sqrt(n)))
    attempts = 0
    batch = max(1, min(budget, (1 << 22) // n))
    while attempts < budget:
        b = min(batch, budget - attempts)
        draws = spec.sample_tilted(gen, size=(b, n))
        hits = np.flatnonzero(draws.sum(axis=1) == target)
        if hits.size:
            return draws[hits[0]].copy()
        attempts += b
    raise RejectionBudgetExceeded(
        f"no degree sequence with sum {target} in {budget} attempts "
        f"(family {spec.label}); try method='direct'"
    )


def _direct_degrees(spec: OffspringSpec, n: int, gen) -> np.ndarray:
    fam = spec.family
    if fam == "geometric":
        # Geo(1/2) makes every composition of n-1 into n parts equally
        # likely: stars and bars
        slots = 2 * n - 2
        bars = np.sort(gen.choice(slots, size=n - 1, replace=False))
        aug = np.empty(n + 1, dtype=np.int64)
        aug[0] = -1
        aug[1:n] = bars
        aug[n] = slots
        return np.diff(aug) - 1
    if fam == "binomial2":
        picked = gen.choice(2 * n, size=n - 1, replace=False)
        return np.bincount(picked >> 1, minlength=n).astype(np.int64)
    if fam == "m_ary":
        m = int(spec.params[0])
        picked = gen.choice(m * n, size=n - 1, replace=False)
        return np.bincount(picked // m, minlength=n).astype(np.int64)
    if fam == "strict_binary":
        xi = np.zeros(n, dtype=np.int64)
        xi[gen.choice(n, size=(n - 1) // 2, replace=False)] = 2
        return xi
    if fam in ("unary_binary", "unordered_unary_binary"):
        return _three_point_degrees(spec.pmf, n, gen)
    raise DomainError(f"no direct sampler for family {fam}")  # pragma: no cover


def _three_point_degrees(pmf, n: int, gen) -> np.ndarray:
    """Condition i.i.d. draws on {0,1,2} on their sum: sample the count of
    2s from its exact law, then place counts uniformly at random."""
    q0, q1, q2 = pmf
    n2 = np.arange(0, (n - 1) // 2 + 1)
    n1 = n - 1 - 2 * n2
    n0 = n - n1 - n2
    logw = (
        -gammaln(n0 + 1) - gammaln(n1 + 1) - gammaln(n2 + 1)
        + n0 * math.log(q0) + n1 * math.log(q1) + n2 * math.log(q2)
    )
    logw -= logw.max()
    w = np.exp(logw)
    k2 = int(gen.choice(n2.shape[0], p=w / w.sum()))
    xi = np.repeat(
        np.array([0, 1, 2], dtype=np.int64),
        [int(n0[k2]), int(n1[k2]), int(n2[k2])],
    )
    gen.shuffle(xi)
    return xi


def rotate_to_tree(seq) -> np.ndarray:
    """The unique cyclic rotation whose partial-sum walk codes a tree.

    With S_j = sum_{i<=j} (xi_i - 1), the valid rotation keeps S_j > -1
    for j < n and ends at S_n = -1; it starts right after the first
    position attaining the walk's minimum (cycle lemma).
    """
    seq = np.ascontiguousarray(seq, dtype=np.int64)
    n = seq.shape[0]
    if int(seq.sum()) != n - 1:
        raise DomainError("degree sequence must sum to n - 1")
    walk = np.cumsum(seq - 1)
    j = int(np.argmin(walk))
    return np.roll(seq, -(j + 1))


def assemble_tree(seq, lengths: BranchLengthSpec, rng) -> Tree:
    """Preorder assembly: vertex i receives seq[i] ordered children."""
    seq = np.ascontiguousarray(seq, dtype=np.int64)
    n = seq.shape[0]
    gen = as_generator(rng)
    if n == 1:
        return Tree.from_preorder(
            np.array([-1], dtype=np.int64), np.zeros(1), validate=False
        )
    deg = seq.tolist()
    par = [0] * n
    par[0] = -1
    stack_v = [0] * n
    stack_r = [0] * n
    stack_v[0] = 0
    stack_r[0] = deg[0]
    top = 0
    for i in range(1, n):
        while stack_r[top] == 0:
            top -= 1
            if top < 0:
                raise DomainError("degree sequence does not code a tree")
        par[i] = stack_v[top]
        stack_r[top] -= 1
        top += 1
        stack_v[top] = i
        stack_r[top] = deg[i]
    edge = np.empty(n)
    edge[0] = 0.0
    edge[1:] = lengths.sample(gen, n - 1)
    return Tree.from_preorder(np.asarray(par, dtype=np.int64), edge, validate=False)


def sample_cgw(
    spec: OffspringSpec,
    n: int,
    rng,
    lengths: BranchLengthSpec = _DEFAULT_LENGTHS,
    method: str = "auto",
) -> Tree:
    """Conditioned Galton-Watson tree with exactly n vertices."""
    gen = as_generator(rng)
    seq = sample_degree_sequence(spec, n, gen, method=method)
    return assemble_tree(rotate_to_tree(seq), lengths, gen)


# --------------------------------------------------------------------- #
# Unconditioned Galton-Watson
# --------------------------------------------------------------------- #


class GWDraw(NamedTuple):
    tree: Tree
    truncated: bool


def sample_gw_unconditioned(
    spec: OffspringSpec,
    rng,
    max_vertices: int = 100_000,
    lengths: BranchLengthSpec = _DEFAULT_LENGTHS,
) -> GWDraw:
    """Plain branching-process tree from the raw (untilted) offspring law.

    Depth-first growth in preorder, truncated at `max_vertices`: once the
    cap is reached, pending vertices become leaves and the draw is
    flagged.  Untruncated draws carry the exact branching-process law.
    """
    if max_vertices < 1:
        raise DomainError(f"max_vertices must be positive, got {max_vertices}")
    gen = as_generator(rng)
    parent = [-1]
    stack = [0]  # vertices awaiting their offspring draw, top = next in preorder
    clipped = False
    # batch the offspring draws; preorder consumption keeps the law exact
    buf = spec.sample_raw(gen, size=64)
    buf_at = 0
    while stack and len(parent) < max_vertices:
        v = stack.pop()
        if buf_at == len(buf):
            buf = spec.sample_raw(gen, size=min(1024, 2 * len(buf)))
            buf_at = 0
        deg = int(buf[buf_at])
        buf_at += 1
        take = min(deg, max_vertices - len(parent))
        clipped = clipped or take < deg
        base = len(parent)
        parent.extend([v] * take)
        # children are pushed right-to-left so the leftmost is explored first
        stack.extend(range(base + take - 1, base - 1, -1))
    truncated = clipped or bool(stack)
    n = len(parent)
    edge = np.empty(n)
    edge[0] = 0.0
    if n > 1:
        edge[1:] = lengths.sample(gen, n - 1)
    # children were allocated in consecutive index blocks (sibling order =
    # index order); the public constructor renumbers into canonical preorder
    return GWDraw(Tree(np.asarray(parent, dtype=np.int64), edge), truncated)


# --------------------------------------------------------------------- #
# Phylogenetic models
# --------------------------------------------------------------------- #


def sample_birth_death(
    n_taxa: int,
    rng,
    speciation_rate: float = 2.0,
    extinction_rate: float = 0.0,
) -> Tree:
    """Constant-rate birth-death tree observed with n_taxa extant tips.

    The process runs from a single lineage until n_taxa are alive, then is
    extended by one further exponential epoch so every pendant edge has
    positive length.  With extinction, dead subtrees are pruned and the
    resulting unary chains contracted; runs that die out restart.
    """
    if n_taxa < 2:
        raise DomainError(f"n_taxa must be at least 2, got {n_taxa}")
    if not speciation_rate > 0 or extinction_rate < 0:
        raise DomainError("speciation rate must be positive, extinction nonnegative")
    gen = as_generator(rng)
    lam, mu = float(speciation_rate), float(extinction_rate)
    birth_frac = lam / (lam + mu)

    while True:
        children: list[list[int]] = [[]]
        above = [0.0]
        lineages = [(0, 0.0)]  # (attachment vertex, edge start time)
        t = 0.0
        while 0 < len(lineages) < n_taxa:
            k = len(lineages)
            t += gen.exponential(1.0 / (k * (lam + mu)))
            i = int(gen.integers(k))
            if mu == 0.0 or gen.random() < birth_frac:
                pv, bt = lineages[i]
                v = len(children)
                children.append([])
                above.append(t - bt)
                children[pv].append(v)
                lineages[i] = (v, t)
                lineages.append((v, t))
            else:
                lineages.pop(i)
        if not lineages:
            continue  # extinct; restart
        t += gen.exponential(1.0 / (n_taxa * (lam + mu)))
        tips = []
        for pv, bt in lineages:
            v = len(children)
            children.append([])
            above.append(t - bt)
            children[pv].append(v)
            tips.append(v)
        raw, order = _tree_from_children(children, above, root=0)
        if mu == 0.0:
            return raw
        # prune extinct subtrees: keep root-to-tip paths, contract unary chains
        from .trees import LeafSelection, ltree_extract

        rank = np.empty(len(children), dtype=np.int64)
        rank[order] = np.arange(len(children))
        tip_ids = tuple(int(raw.ids[rank[v]]) for v in tips)
        pruned = ltree_extract(raw, LeafSelection(raw, tip_ids))
        return Tree.from_preorder(pruned.parent, pruned.edge_length, validate=False)


def sample_coalescent(n_leaves: int, rng) -> Tree:
    """Kingman coalescent tree: ultrametric, binary, n_leaves tips.

    While k lineages remain, wait Exp(k(k-1)/2) and merge a uniform pair;
    edge lengths are merge-time differences.
    """
    if n_leaves < 2:
        raise DomainError(f"n_leaves must be at least 2, got {n_leaves}")
    gen = as_generator(rng)
    total = 2 * n_leaves - 1
    children: list[list[int]] = [[] for _ in range(total)]
    above = [0.0] * total
    node_time = [0.0] * total
    active = list(range(n_leaves))
    t = 0.0
    nxt = n_leaves
    while len(active) > 1:
        k = len(active)
        dt = gen.exponential(2.0 / (k * (k - 1)))
        while dt <= 0.0:
            dt = gen.exponential(2.0 / (k * (k - 1)))
        t += dt
        i, j = gen.choice(k, size=2, replace=False)
        a, b = active[int(i)], active[int(j)]
        children[nxt] = [a, b]
        node_time[nxt] = t
        above[a] = t - node_time[a]
        above[b] = t - node_time[b]
        # drop merged pair, append the new lineage
        hi, lo = max(int(i), int(j)), min(int(i), int(j))
        active.pop(hi)
        active.pop(lo)
        active.append(nxt)
        nxt += 1
    root = active[0]
    # leaves keep their lineage labels 0..n_leaves-1
    tree, _ = _tree_from_children(children, above, root=root, ids=range(total))
    return tree


def sample_poisson_binary(k_leaves: int, rng, theta: float = 1.0) -> Tree:
    """Sequential binary tree from a Poisson process with rate theta * t.

    Arrival times are t_j = sqrt(2 G_j / theta) with G_j cumulative
    standard-exponential sums; each new edge of length t_{j+1} - t_j is
    attached at a uniform position along the current total length, on the
    left or right side with equal probability.  The result is an ordered
    strict binary tree with k_leaves leaves and 2*k_leaves - 1 edges.
    """
    if k_leaves < 1:
        raise DomainError(f"k_leaves must be at least 1, got {k_leaves}")
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    gen = as_generator(rng)
    arrivals = np.sqrt(2.0 * np.cumsum(gen.exponential(1.0, size=k_leaves)) / theta)

    children: list[list[int]] = [[], []]
    above = [0.0, float(arrivals[0])]
    parent_of = [-1, 0]
    children[0].append(1)

    for j in range(1, k_leaves):
        new_len = float(arrivals[j] - arrivals[j - 1])
        # pick the split point uniformly over the current total length
        lengths = np.asarray(above[1:])
        cum = np.cumsum(lengths)
        while True:
            x = gen.uniform(0.0, cum[-1])
            e = int(np.searchsorted(cum, x, side="right"))
            e = min(e, lengths.shape[0] - 1)
            offset = x - (cum[e - 1] if e > 0 else 0.0)
            if 0.0 < offset < lengths[e]:
                break
        c = e + 1  # vertex below the split edge
        p = parent_of[c]
        m = len(children)  # new split vertex
        children.append([])
        above.append(offset)
        parent_of.append(p)
        children[p][children[p].index(c)] = m
        above[c] = above[c] - offset
        parent_of[c] = m
        leaf = len(children)
        children.append([])
        above.append(new_len)
        parent_of.append(m)
        if gen.random() < 0.5:
            children[m] = [c, leaf]
        else:
            children[m] = [leaf, c]

    tree, _ = _tree_from_children(children, above, root=0, ids=range(len(children)))
    return tree
