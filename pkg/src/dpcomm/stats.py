"""Monte Carlo helpers: input sampling, empirical tables, confidence slack."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from dpcomm.info import JointDistribution
from dpcomm.randomness import child_seeds


def rng_for(seed: int, tag) -> np.random.Generator:
    """Independent numpy generator derived from ``seed`` and a tag."""
    return np.random.Generator(np.random.PCG64(int(child_seeds([seed], tag)[0])))


def sample_cells(d: JointDistribution, n: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Draw ``n`` cells of ``d``; returns one index array per axis."""
    p = np.asarray(d.probs, dtype=np.float64).ravel()
    flat = rng.choice(p.size, size=n, p=p / p.sum())
    return np.unravel_index(flat, d.shape)


def empirical(axes, columns, n: int | None = None) -> JointDistribution:
    """Empirical distribution of index columns over ``axes``."""
    axes = tuple(axes)
    shape = tuple(len(a) for a in axes)
    flat = np.ravel_multi_index(tuple(np.asarray(c) for c in columns), shape)
    counts = np.bincount(flat, minlength=math.prod(shape)).astype(np.float64)
    total = counts.sum() if n is None else n
    return JointDistribution(axes, counts / total)


def sigma_to_alpha(sigma: float) -> float:
    """One-sided tail mass beyond ``sigma`` standard deviations."""
    return float(stats.norm.sf(sigma))


def wilson_interval(successes: int, trials: int, sigma: float = 3.0) -> tuple[float, float]:
    level = 1.0 - 2.0 * sigma_to_alpha(sigma)
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def l1_slack(cells: int, trials: int, sigma: float = 3.0) -> float:
    """High-probability excess of an empirical l1 distance over the true one.

    ``E ||emp - p||_1 <= 0.5 * sqrt(cells / n)`` by Cauchy-Schwarz, and the
    distance moves by at most ``1/n`` per sample, so McDiarmid adds
    ``sqrt(ln(1/alpha) / (2n))`` at one-sided level ``alpha``.
    """
    alpha = sigma_to_alpha(sigma)
    return 0.5 * math.sqrt(cells / trials) + math.sqrt(math.log(1.0 / alpha) / (2.0 * trials))
