"""Command-line interface: sample | test | calibrate | hclust | dyck.

All inputs and outputs are plain text: Newick tree files (one tree per
line), two-column breakpoint listings for Dyck paths, CSV calibration
tables, and key=value test reports.  Every command takes --seed and is
byte-reproducible; CRT_FOREST_THREADS caps calibration workers.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from . import __version__
from .clustering import agglomerate, heterogeneity_summary
from .distributions import RngStream
from .dyck import DyckPath, dyck_decode, dyck_encode
from .errors import CrtForestError
from .generators import parse_lengths, parse_offspring, sample_cgw
from .harness import (
    ExperimentConfig,
    default_workers,
    make_tree_sampler,
    run_calibration,
    calibration_csv_rows,
    CSV_HEADER,
)
from .inference import (
    one_sample_binary_test,
    one_sample_dyck_test,
    one_sample_ltree_test,
    permutation_two_sample,
    summarize_trees,
    two_sample_binary_test,
    two_sample_dyck_test,
    two_sample_ltree_test,
)
from .newick import read_newick_file, to_newick

EXIT_RETAIN = 0
EXIT_REJECT = 1
EXIT_ERROR = 2


@click.group()
@click.version_option(__version__)
def main():
    """Simulate large random trees and test their generative models."""


def _echo_lines(lines, out):
    if out is None or out == "-":
        for line in lines:
            click.echo(line)
    else:
        with open(out, "w") as fh:
            for line in lines:
                fh.write(line + "\n")


# --------------------------------------------------------------------- #
# sample
# --------------------------------------------------------------------- #


@main.command()
@click.option("--model", default="cgw",
              type=click.Choice(["cgw", "gw", "birth-death", "coalescent", "poisson-binary"]))
@click.option("--offspring", default="geo:0.5", show_default=True,
              help="family:params token, e.g. geo:0.5, bin2:0.5, strictbin:0.35, ub:0.3,0.3, uub, mary:3")
@click.option("--n-vertices", default=1000, show_default=True, type=int)
@click.option("--num-trees", default=1, show_default=True, type=int)
@click.option("--lengths", default="uniform:0,2", show_default=True,
              help="branch-length law token: uniform:a,b | constant:c | exp:mean")
@click.option("--max-vertices", default=100000, show_default=True, type=int,
              help="size cap for unconditioned GW trees")
@click.option("--n-taxa", default=500, show_default=True, type=int,
              help="tip count for birth-death / coalescent models")
@click.option("--speciation-rate", default=2.0, show_default=True, type=float)
@click.option("--extinction-rate", default=0.0, show_default=True, type=float)
@click.option("--k-leaves", default=25, show_default=True, type=int,
              help="leaf count for the poisson-binary model")
@click.option("--theta", default=1.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default="-", show_default=True)
def sample(model, offspring, n_vertices, num_trees, lengths, max_vertices,
           n_taxa, speciation_rate, extinction_rate, k_leaves, theta, seed, out):
    """Write sampled trees as Newick, one per line."""
    try:
        gen = RngStream(seed).generator()
        length_spec = parse_lengths(lengths)
        if model == "cgw":
            spec = parse_offspring(offspring)
            draws = (sample_cgw(spec, n_vertices, gen, lengths=length_spec)
                     for _ in range(num_trees))
        elif model == "gw":
            token = f"gw-{offspring}"
            sampler = make_tree_sampler(token, n_vertices, length_spec)
            draws = (sampler(gen) for _ in range(num_trees))
        elif model == "birth-death":
            from .generators import sample_birth_death

            draws = (sample_birth_death(n_taxa, gen, speciation_rate, extinction_rate)
                     for _ in range(num_trees))
        elif model == "coalescent":
            from .generators import sample_coalescent

            draws = (sample_coalescent(n_taxa, gen) for _ in range(num_trees))
        else:
            from .generators import sample_poisson_binary

            draws = (sample_poisson_binary(k_leaves, gen, theta=theta)
                     for _ in range(num_trees))
        _echo_lines((to_newick(t) for t in draws), out)
    except CrtForestError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


# --------------------------------------------------------------------- #
# test
# --------------------------------------------------------------------- #


@main.command()
@click.argument("mode", type=click.Choice(["one", "two"]))
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@click.option("--method", default="ltree", show_default=True,
              type=click.Choice(["binary", "ltree", "dyck", "perm"]))
@click.option("--alpha", default=0.01, show_default=True, type=float)
@click.option("--leaf-count", default=25, show_default=True, type=int)
@click.option("--leaf-frac", default=None, type=float)
@click.option("--perms", default=5000, show_default=True, type=int)
@click.option("--perm-statistic", default="ltree-F", show_default=True,
              type=click.Choice(["ltree-F", "dyck-F", "binary-F"]))
@click.option("--one-sided", is_flag=True, help="paper-style one-sided two-sample test")
@click.option("--sigma-vertices", default="all", show_default=True,
              type=click.Choice(["all", "single"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True, help="emit a JSON document instead of key=value")
@click.option("--out", default=None, help="also write the report to a file")
def test(mode, inputs, method, alpha, leaf_count, leaf_frac, perms,
         perm_statistic, one_sided, sigma_vertices, seed, as_json, out):
    """Run a goodness-of-fit test on Newick files (one tree per line).

    Exit code 0 = retain, 1 = reject, 2 = error.
    """
    try:
        need = 1 if mode == "one" else 2
        if len(inputs) != need:
            raise click.UsageError(f"{mode}-sample tests need exactly {need} input file(s)")
        gen = RngStream(seed).generator()
        trees_a = read_newick_file(inputs[0])
        kw = dict(leaf_count=leaf_count, leaf_fraction=leaf_frac, alpha=alpha)
        if mode == "one":
            if method == "binary":
                report = one_sample_binary_test(trees_a, alpha=alpha)
            elif method == "ltree":
                report = one_sample_ltree_test(trees_a, gen, sigma_vertices=sigma_vertices, **kw)
            elif method == "dyck":
                report = one_sample_dyck_test(trees_a, gen, **kw)
            else:
                raise click.UsageError("permutation tests are two-sample only")
        else:
            trees_b = read_newick_file(inputs[1])
            two = dict(two_sided=not one_sided)
            if method == "binary":
                report = two_sample_binary_test(trees_a, trees_b, alpha=alpha, **two)
            elif method == "ltree":
                report = two_sample_ltree_test(
                    trees_a, trees_b, gen, sigma_vertices=sigma_vertices, **kw, **two
                )
            elif method == "dyck":
                report = two_sample_dyck_test(trees_a, trees_b, gen, **kw, **two)
            else:
                sa = summarize_trees(trees_a, gen, leaf_count, leaf_frac)
                sb = summarize_trees(trees_b, gen, leaf_count, leaf_frac)
                report = permutation_two_sample(
                    sa, sb, gen, statistic=perm_statistic, n_perm=perms,
                    alpha=alpha, sigma_vertices=sigma_vertices,
                )
        text = report.to_json() if as_json else report.to_keyvalue()
        click.echo(text)
        if out:
            with open(out, "w") as fh:
                fh.write(text + "\n")
        sys.exit(EXIT_REJECT if report.reject else EXIT_RETAIN)
    except (CrtForestError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


# --------------------------------------------------------------------- #
# calibrate
# --------------------------------------------------------------------- #


@main.command()
@click.option("--distributions", default="geo:0.5,strictbin:0.5,strictbin:0.35",
              show_default=True, help="comma-separated generator tokens")
@click.option("--baseline", default=None,
              help="second generator token; switches to two-sample tests")
@click.option("--methods", default="ltree,dyck", show_default=True)
@click.option("--n-vertices", default=1000, show_default=True, type=int)
@click.option("--num-trees", default=1000, show_default=True, type=int)
@click.option("--trials", default=200, show_default=True, type=int)
@click.option("--alpha", default=0.01, show_default=True, type=float)
@click.option("--leaf-count", default=25, show_default=True, type=int)
@click.option("--lengths", default="uniform:0,2", show_default=True)
@click.option("--perms", default=0, show_default=True, type=int,
              help="> 0 adds permutation variants with this many permutations")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--workers", default=None, type=int,
              help="process count; defaults to CRT_FOREST_THREADS or 1")
@click.option("--out", default="-", show_default=True)
def calibrate(distributions, baseline, methods, n_vertices, num_trees, trials,
              alpha, leaf_count, lengths, perms, seed, workers, out):
    """Monte-Carlo rejection-rate table (CSV) over generator scenarios."""
    try:
        method_names = tuple(m.strip() for m in methods.split(","))
        if baseline is not None:
            # a baseline switches the short method names to their
            # two-sample variants
            method_names = tuple(
                m if m.endswith("-two") else f"{m}-two" for m in method_names
            )
        rows = [CSV_HEADER]
        for token in distributions.split(","):
            token = token.strip()
            config = ExperimentConfig(
                distribution=token,
                n_vertices=n_vertices,
                num_trees=num_trees,
                trials=trials,
                alpha=alpha,
                leaf_count=leaf_count,
                lengths=lengths,
                baseline=baseline,
                n_permutations=perms,
                seed=seed,
                methods=method_names,
            )
            rates = run_calibration(config, workers=workers or default_workers())
            rows.extend(calibration_csv_rows(config, rates))
        _echo_lines(rows, out)
    except CrtForestError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


# --------------------------------------------------------------------- #
# hclust
# --------------------------------------------------------------------- #


def _read_values(path):
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise CrtForestError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.asarray(vals)


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@click.option("--group-a", default=None, help="comma-separated value files, one per subject")
@click.option("--group-b", default=None, help="comma-separated value files, one per subject")
@click.option("--linkage", default="single", show_default=True,
              type=click.Choice(["single", "average", "complete"]))
@click.option("--leaf-percents", default="10,20,30,40", show_default=True)
@click.option("--alpha", default=0.01, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", default=None, type=click.Path(),
              help="write each dendrogram as Newick into this directory")
def hclust(inputs, group_a, group_b, linkage, leaf_percents, alpha, seed, out_dir):
    """Cluster scalar data (one value per line) into dendrograms.

    With a single input file, prints the heterogeneity summary and the
    Newick dendrogram.  With --group-a/--group-b, runs the two-sample
    subtree F test at each leaf percentage.
    """
    try:
        gen = RngStream(seed).generator()
        if out_dir is not None:
            import os

            os.makedirs(out_dir, exist_ok=True)

        def cluster_file(path):
            d = agglomerate(_read_values(path), linkage=linkage)
            if out_dir is not None:
                import os

                base = os.path.splitext(os.path.basename(path))[0]
                with open(os.path.join(out_dir, base + ".nwk"), "w") as fh:
                    fh.write(to_newick(d.tree) + "\n")
            return d

        if group_a or group_b:
            if not (group_a and group_b):
                raise click.UsageError("--group-a and --group-b must both be given")
            da = [cluster_file(p) for p in group_a.split(",")]
            db = [cluster_file(p) for p in group_b.split(",")]
            ta = [d.tree for d in da]
            tb = [d.tree for d in db]
            for pct in (float(x) for x in leaf_percents.split(",")):
                report = two_sample_ltree_test(
                    ta, tb, gen, leaf_fraction=pct / 100.0, alpha=alpha,
                )
                click.echo(f"# leaf_percent={pct:g}")
                click.echo(report.to_keyvalue())
        else:
            if len(inputs) != 1:
                raise click.UsageError("give exactly one input file or two groups")
            d = cluster_file(inputs[0])
            h = heterogeneity_summary(d)
            click.echo(f"height={h.height:.12g}")
            click.echo(f"total_path_length={h.total_path_length:.12g}")
            click.echo(f"branch_count={h.branch_count}")
            if out_dir is None:
                click.echo(to_newick(d.tree))
    except (CrtForestError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


# --------------------------------------------------------------------- #
# dyck
# --------------------------------------------------------------------- #


@main.group()
def dyck():
    """Encode trees as Dyck paths and back."""


@dyck.command()
@click.argument("input", type=click.Path(exists=True))
@click.option("--out", default="-", show_default=True)
def encode(input, out):
    """Newick (first line) -> breakpoint list 'position height' per line."""
    try:
        tree = read_newick_file(input)[0]
        path = dyck_encode(tree)
        lines = (f"{p:.17g} {h:.17g}" for p, h in path.breakpoints)
        _echo_lines(lines, out)
    except CrtForestError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@dyck.command()
@click.argument("input", type=click.Path(exists=True))
@click.option("--out", default="-", show_default=True)
def decode(input, out):
    """Breakpoint list 'position height' per line -> Newick."""
    try:
        pts = []
        with open(input) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise CrtForestError(f"{input}:{lineno}: expected 'position height'")
                pts.append((float(parts[0]), float(parts[1])))
        tree = dyck_decode(DyckPath.from_breakpoints(pts))
        _echo_lines([to_newick(tree)], out)
    except (CrtForestError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
