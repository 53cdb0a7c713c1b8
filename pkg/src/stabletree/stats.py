"""Statistical comparison utilities for the experiment harness."""

from __future__ import annotations

import numpy as np
from scipy import stats as sstats


def ks_distance(sample, cdf) -> float:
    """Sup-norm distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    if x.size == 0:
        raise ValueError("empty sample")
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(hi - f), np.max(f - lo)))


def empirical_cdf_table(sample, s_grid, level: float = 0.95) -> list:
    """P(X <= s) with Clopper-Pearson binomial confidence bounds per grid point."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    a = 1.0 - level
    rows = []
    for s in s_grid:
        k = int(np.sum(x <= s))
        lo = 0.0 if k == 0 else float(sstats.beta.ppf(a / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(sstats.beta.ppf(1 - a / 2, k + 1, n - k))
        rows.append(
            {"s": float(s), "p_hat": k / n, "ci_low": lo, "ci_high": hi, "count": k}
        )
    return rows


def chi2_pvalue(observed, expected) -> float:
    """Pearson chi-square p-value; expected counts are rescaled to the sample size."""
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    exp = exp * obs.sum() / exp.sum()
    if np.any(exp < 5):
        raise ValueError("expected counts below 5; merge bins first")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return float(sstats.chi2.sf(stat, len(obs) - 1))


def batch_mean_ci(samples, batches: int = 20, level: float = 0.95):
    """Mean with a batch-means t confidence interval (samples in given order)."""
    x = np.asarray(samples, dtype=float)
    if x.size < batches:
        batches = max(2, x.size // 2)
    usable = (x.size // batches) * batches
    means = x[:usable].reshape(batches, -1).mean(axis=1)
    m = float(means.mean())
    se = float(means.std(ddof=1) / np.sqrt(batches))
    t = float(sstats.t.ppf(0.5 + level / 2, batches - 1))
    return m, m - t * se, m + t * se


def two_sample_ks_pvalue(a, b) -> float:
    return float(sstats.ks_2samp(np.asarray(a), np.asarray(b)).pvalue)
