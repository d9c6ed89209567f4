"""Random streams, quantile functions, and scalar samplers.

Only the distribution families the tests and generators actually need are
exposed: chi-square and F quantiles, gamma and Rayleigh samplers, and draws
from a tilted offspring distribution.  Quantiles are computed by
scipy.special's inverse regularized incomplete gamma/beta routines (via
scipy.stats), which are accurate well past the 1e-10 contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError

__all__ = [
    "RngStream",
    "as_generator",
    "chi2_quantile",
    "f_quantile",
    "sample_gamma",
    "sample_rayleigh",
    "sample_offspring",
]


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by (master seed, stream index).

    Streams with the same seed and different indices are statistically
    independent (numpy SeedSequence spawn keys) and reproducible across
    runs and thread schedules.  Instances are cheap; the underlying
    generator is created on first use and must not be shared between
    threads — derive one stream per unit of concurrent work instead.
    """

    seed: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        """Return a fresh numpy Generator positioned at the stream start."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.index,))
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, index: int) -> "RngStream":
        """Sibling stream with the same master seed and a new index."""
        return RngStream(self.seed, index)


def as_generator(rng) -> np.random.Generator:
    """Coerce an RngStream, Generator, or integer seed to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot interpret {type(rng).__name__} as a random generator")


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie strictly in (0, 1), got {p}")
    return p


def chi2_quantile(p: float, df: float) -> float:
    """Quantile of the chi-square distribution with `df` degrees of freedom."""
    p = _check_probability(p)
    df = float(df)
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    return float(stats.chi2.ppf(p, df))


def f_quantile(p: float, df1: float, df2: float) -> float:
    """Quantile of the F distribution with (df1, df2) degrees of freedom."""
    p = _check_probability(p)
    df1, df2 = float(df1), float(df2)
    if not (df1 > 0 and df2 > 0):
        raise DomainError(f"degrees of freedom must be positive, got ({df1}, {df2})")
    return float(stats.f.ppf(p, df1, df2))


def sample_gamma(shape: float, scale: float, rng, size=None):
    """Draw from a Gamma distribution with the given shape and scale."""
    if not shape > 0 or not scale > 0:
        raise DomainError(f"shape and scale must be positive, got ({shape}, {scale})")
    gen = as_generator(rng)
    out = gen.gamma(shape, scale, size=size)
    return float(out) if size is None else out


def sample_rayleigh(scale: float, rng, size=None):
    """Draw from a Rayleigh distribution by inverse transform.

    Density (w/scale^2) exp(-w^2 / (2 scale^2)); the draw is
    scale * sqrt(-2 ln U) with U uniform on (0, 1].
    """
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    gen = as_generator(rng)
    u = gen.random(size)  # in [0, 1); 1-u is in (0, 1]
    out = scale * np.sqrt(-2.0 * np.log1p(-u))
    return float(out) if size is None else out


def sample_offspring(spec, rng, size=None):
    """Draw offspring counts from the tilted (critical) law of `spec`.

    `spec` is a generators.OffspringSpec; this is a thin alias for its
    `sample_tilted` method so callers holding only the distribution layer
    can still draw degrees.
    """
    return spec.sample_tilted(rng, size=size)
