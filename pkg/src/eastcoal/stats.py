"""Empirical distance estimators for integer-valued ensembles.

Total variation between two samples of integer tuples is computed on the
exact discrete support, with rare tuples pooled into a single remainder
cell so the bootstrap does not chase empty bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TvResult:
    """Point estimate and bootstrap band for one TV comparison.

    n_categories counts the cells entering the sum, the remainder cell
    included when it is nonempty; pooled_mass is the combined empirical
    probability routed into the remainder.
    """

    tv: float
    ci_low: float
    ci_high: float
    n_categories: int
    pooled_mass: float

    def __post_init__(self):
        if not 0.0 <= self.tv <= 1.0:
            raise ValueError("TV must lie in [0, 1]")
        if not self.ci_low <= self.tv <= self.ci_high:
            raise ValueError("CI must contain the point estimate")


def _as_rows(samples, name: str) -> np.ndarray:
    arr = np.asarray(samples)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty array of tuples")
    if not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError(f"{name} must be integer-valued")
        arr = as_int
    return np.ascontiguousarray(arr, dtype=np.int64)


def estimate_tv(samples_a, samples_b, n_boot: int = 1000, seed: int = 0,
                min_expected: float = 5.0) -> TvResult:
    """TV = (1/2) sum |p_hat - q_hat| over the exact integer support.

    Tuples whose expected count under the pooled empirical law falls
    below min_expected on either side are merged into one remainder
    cell. The 95% CI comes from n_boot multinomial resamples of each
    side over the pooled cells (equivalent in law to resampling the raw
    samples), widened if needed so it contains the point estimate.
    """
    a = _as_rows(samples_a, "samples_a")
    b = _as_rows(samples_b, "samples_b")
    if a.shape[1] != b.shape[1]:
        raise ValueError("ensembles have different tuple arity")
    na, nb = a.shape[0], b.shape[0]

    rows = np.concatenate([a, b], axis=0)
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    counts_a = np.bincount(inverse[:na], minlength=len(uniq)).astype(float)
    counts_b = np.bincount(inverse[na:], minlength=len(uniq)).astype(float)

    pooled_p = (counts_a + counts_b) / (na + nb)
    keep = (pooled_p * na >= min_expected) & (pooled_p * nb >= min_expected)

    cells_a = counts_a[keep]
    cells_b = counts_b[keep]
    rest_a = counts_a[~keep].sum()
    rest_b = counts_b[~keep].sum()
    if rest_a + rest_b > 0:
        cells_a = np.append(cells_a, rest_a)
        cells_b = np.append(cells_b, rest_b)
    pooled_mass = (rest_a + rest_b) / (na + nb)

    pa = cells_a / na
    pb = cells_b / nb
    tv = 0.5 * float(np.abs(pa - pb).sum())

    rng = np.random.default_rng(seed)
    boot_a = rng.multinomial(na, pa, size=n_boot) / na
    boot_b = rng.multinomial(nb, pb, size=n_boot) / nb
    boot_tv = 0.5 * np.abs(boot_a - boot_b).sum(axis=1)
    lo, hi = np.percentile(boot_tv, [2.5, 97.5])

    return TvResult(tv=tv,
                    ci_low=min(float(lo), tv),
                    ci_high=max(float(hi), tv),
                    n_categories=len(cells_a),
                    pooled_mass=float(pooled_mass))


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov statistic sup_x |F_n(x) - F(x)|.

    cdf is a vectorized callable evaluating the reference distribution.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n == 0:
        raise ValueError("need at least one sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    grid = np.arange(1, n + 1) / n
    d_plus = float((grid - f).max())
    d_minus = float((f - (grid - 1.0 / n)).max())
    return max(d_plus, d_minus)


def sup_cdf_distance(f_vals, g_vals) -> float:
    """Sup-norm distance between two CDFs sampled on a common grid."""
    f = np.asarray(f_vals, dtype=np.float64)
    g = np.asarray(g_vals, dtype=np.float64)
    if f.shape != g.shape:
        raise ValueError("CDF grids must have matching shape")
    return float(np.abs(f - g).max())
