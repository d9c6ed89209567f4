"""Monte-Carlo calibration harness for rejection-rate tables.

A scenario draws `num_trees` trees per trial from a generator token,
summarizes them once, and evaluates every requested test on the shared
summaries; two-sample scenarios draw an independent baseline sample per
trial.  Trials are deterministic functions of (seed, trial index), so
results are byte-identical regardless of worker count; the CRT_FOREST_THREADS
environment variable caps the process pool.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .distributions import RngStream
from .errors import DomainError
from .generators import (
    BranchLengthSpec,
    parse_lengths,
    parse_offspring,
    sample_birth_death,
    sample_cgw,
    sample_coalescent,
    sample_gw_unconditioned,
    sample_poisson_binary,
)
from .inference import (
    dyck_one_sample_from_summaries,
    dyck_two_sample_from_summaries,
    ltree_one_sample_from_summaries,
    ltree_two_sample_from_summaries,
    permutation_two_sample,
    summarize_trees,
)

__all__ = [
    "ExperimentConfig",
    "make_tree_sampler",
    "run_calibration",
    "calibration_csv_rows",
    "write_calibration_csv",
    "CSV_HEADER",
]

CSV_HEADER = "distribution,method,sample_size,alpha,trials,reject_rate,seed"

_ONE_SAMPLE_METHODS = ("ltree", "dyck")
_TWO_SAMPLE_METHODS = ("ltree-two", "dyck-two")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one calibration scenario needs, fully seeded."""

    distribution: str  # generator token, e.g. "geo:0.5" or "phylo.bd:500"
    n_vertices: int = 1000
    num_trees: int = 1000
    trials: int = 200
    alpha: float = 0.01
    leaf_count: int = 25
    leaf_fraction: float | None = None
    lengths: str = "uniform:0,2"
    baseline: str | None = None  # second generator => two-sample methods
    n_permutations: int = 0  # > 0 adds permutation variants
    seed: int = 0
    sigma_vertices: str = "all"
    methods: tuple = ("ltree", "dyck")

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be positive, got {self.trials}")
        if self.num_trees < 1:
            raise DomainError(f"num_trees must be positive, got {self.num_trees}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")


def make_tree_sampler(token: str, n_vertices: int, lengths: BranchLengthSpec):
    """Turn a generator token into a callable(rng) -> Tree.

    Tokens: conditioned families ("geo:0.5", "bin2:0.5", "strictbin:0.35",
    "ub:p0,p1", "uub", "mary:m"), unconditioned "gw-<family:params>"
    (redrawn until the branching process fills exactly n_vertices, so every
    simulated tree has the same size), "phylo.bd:<n_taxa>[:rate]",
    "phylo.coal:<n_leaves>", and "pois:<k>[:theta]".
    """
    token = token.strip()
    lowered = token.lower()
    if lowered.startswith("gw-"):
        spec = parse_offspring(token[3:])

        def draw_gw(rng):
            while True:
                d = sample_gw_unconditioned(
                    spec, rng, max_vertices=n_vertices, lengths=lengths
                )
                if d.tree.n == n_vertices:
                    return d.tree

        return draw_gw
    if lowered.startswith(("phylo.bd", "bd")):
        parts = token.split(":")[1:]
        n_taxa = int(parts[0]) if parts else max(2, (n_vertices + 1) // 2)
        rate = float(parts[1]) if len(parts) > 1 else 2.0
        return lambda rng: sample_birth_death(n_taxa, rng, speciation_rate=rate)
    if lowered.startswith(("phylo.coal", "coal")):
        parts = token.split(":")[1:]
        n_leaves = int(parts[0]) if parts else max(2, (n_vertices + 1) // 2)
        return lambda rng: sample_coalescent(n_leaves, rng)
    if lowered.startswith("pois"):
        parts = token.split(":")[1:]
        k = int(parts[0]) if parts else 25
        theta = float(parts[1]) if len(parts) > 1 else 1.0
        return lambda rng: sample_poisson_binary(k, rng, theta=theta)
    spec = parse_offspring(token)
    n = n_vertices
    if spec.family == "strict_binary" and n % 2 == 0:
        n += 1  # strict binary trees exist only at odd sizes
    return lambda rng: sample_cgw(spec, n, rng, lengths=lengths)


def _trial_methods(config: ExperimentConfig) -> list:
    methods = []
    for m in config.methods:
        if m in _ONE_SAMPLE_METHODS:
            methods.append(m)
        elif m in _TWO_SAMPLE_METHODS:
            if config.baseline is None:
                raise DomainError(f"{m} needs a baseline generator")
            methods.append(m)
        else:
            raise DomainError(f"unknown method {m!r}")
    if config.n_permutations:
        if config.baseline is None:
            raise DomainError("permutation tests are two-sample; set a baseline")
        for base in ("ltree", "dyck"):
            if any(m.startswith(base) for m in methods):
                methods.append(f"{base}-perm")
    return methods


def run_trial(config: ExperimentConfig, trial_index: int) -> dict:
    """One Monte-Carlo trial; returns {method: rejected} decisions."""
    gen = RngStream(config.seed, trial_index).generator()
    lengths = parse_lengths(config.lengths)
    sampler = make_tree_sampler(config.distribution, config.n_vertices, lengths)
    trees = [sampler(gen) for _ in range(config.num_trees)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # single-vertex exclusions are routine here
        summaries = summarize_trees(
            trees, gen, leaf_count=config.leaf_count, leaf_fraction=config.leaf_fraction
        )
        del trees
        base_summaries = None
        if config.baseline is not None:
            base_sampler = make_tree_sampler(config.baseline, config.n_vertices, lengths)
            base_trees = [base_sampler(gen) for _ in range(config.num_trees)]
            base_summaries = summarize_trees(
                base_trees, gen,
                leaf_count=config.leaf_count, leaf_fraction=config.leaf_fraction,
            )
            del base_trees

        out = {}
        for m in _trial_methods(config):
            if m == "ltree":
                rep = ltree_one_sample_from_summaries(
                    summaries, config.alpha, config.sigma_vertices
                )
            elif m == "dyck":
                rep = dyck_one_sample_from_summaries(summaries, config.alpha)
            elif m == "ltree-two":
                rep = ltree_two_sample_from_summaries(
                    base_summaries, summaries, config.alpha,
                    sigma_vertices=config.sigma_vertices,
                )
            elif m == "dyck-two":
                rep = dyck_two_sample_from_summaries(
                    base_summaries, summaries, config.alpha
                )
            elif m.endswith("-perm"):
                kind = "ltree-F" if m.startswith("ltree") else "dyck-F"
                rep = permutation_two_sample(
                    base_summaries, summaries, gen, statistic=kind,
                    n_perm=config.n_permutations, alpha=config.alpha,
                    sigma_vertices=config.sigma_vertices,
                )
            else:  # pragma: no cover
                raise DomainError(f"unknown method {m!r}")
            out[m] = bool(rep.reject)
    return out


def _worker(payload) -> dict:
    config, idx = payload
    return run_trial(config, idx)


def default_workers() -> int:
    raw = os.environ.get("CRT_FOREST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_calibration(config: ExperimentConfig, workers: int | None = None) -> dict:
    """Rejection rate per method over `config.trials` Monte-Carlo trials."""
    lengths = parse_lengths(config.lengths)
    if abs(lengths.mean - 1.0) > 1e-9:
        warnings.warn(
            f"branch-length mean is {lengths.mean:g}, not 1; normalized "
            "distances presume mean-1 lengths",
            stacklevel=2,
        )
    if workers is None:
        workers = default_workers()
    payloads = [(config, t) for t in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, payloads, chunksize=8))
    else:
        results = [_worker(p) for p in payloads]
    methods = results[0].keys()
    return {
        m: sum(r[m] for r in results) / float(config.trials) for m in methods
    }


def calibration_csv_rows(config: ExperimentConfig, rates: dict) -> list:
    rows = []
    for method, rate in rates.items():
        rows.append(
            f"{config.distribution},{method},{config.num_trees},"
            f"{config.alpha:g},{config.trials},{rate:.6g},{config.seed}"
        )
    return rows


def write_calibration_csv(path, configs_and_rates) -> None:
    """Write (config, rates) pairs under the fixed CSV schema."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for config, rates in configs_and_rates:
            for row in calibration_csv_rows(config, rates):
                fh.write(row + "\n")
