"""Time-varying mixture function estimation from loading series.

Each loading value is treated as coming from one of two populations
("unchanged" U and "changed" V); the mixture probability rho(t) of the
U population is the expectation of the rescaled series
W_t = (Y_t - mu_V) / (mu_U - mu_V) and is estimated by wavelet regression
of W on an equally spaced dyadic grid.  Valleys of rho flag candidate
change points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_family, check_signal
from .wavelets import dwt1, idwt1, soft_threshold

__all__ = [
    "MixtureResult",
    "MixtureAnalyzer",
    "estimate_mixture",
    "mean_mixture",
    "find_valleys",
    "two_means",
]


@dataclass
class MixtureResult:
    """Estimated mixture function on a dyadic grid.

    Attributes
    ----------
    rho : ndarray, shape (n,)
        Estimated mixture probabilities on the grid, clipped to [0, 1].
    grid : ndarray, shape (n,)
        Grid points t_i in [0, 1] (cell midpoints).
    mu_u, mu_v : float
        Group means; mu_u > mu_v by convention.
    group_labels : ndarray, shape (n,)
        Binary labels on the grid: 1 where the resampled observation was
        assigned to the U group.
    valleys : list of int
        Grid indices of local minima of rho below the valley threshold,
        one per below-threshold run.
    """

    rho: np.ndarray
    grid: np.ndarray
    mu_u: float
    mu_v: float
    group_labels: np.ndarray
    valleys: list[int]


def two_means(values: np.ndarray) -> np.ndarray:
    """Deterministic 2-means clustering of scalars.

    Centers start at the minimum and maximum and are iterated to
    convergence; returns binary labels (1 = cluster with the larger mean).
    """
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        raise ValueError("cannot split all-equal values into two groups")
    centers = np.array([lo, hi])
    labels = np.zeros(v.size, dtype=int)
    for _ in range(200):
        new_labels = (np.abs(v - centers[1]) < np.abs(v - centers[0])).astype(int)
        if new_labels.all() or not new_labels.any():
            break
        for g in (0, 1):
            centers[g] = v[new_labels == g].mean()
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def find_valleys(rho, threshold: float = 0.5) -> list[int]:
    """One valley per run of below-threshold values: the run's argmin."""
    rho = np.asarray(rho, dtype=float)
    below = rho < threshold
    valleys = []
    start = None
    for i, flag in enumerate(np.append(below, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            segment = rho[start:i]
            valleys.append(start + int(np.argmin(segment)))
            start = None
    return valleys


def estimate_mixture(loadings, family: str = "haar",
                     valley_threshold: float = 0.5) -> MixtureResult:
    """Estimate the mixture function of a single loading series.

    Parameters
    ----------
    loadings : array-like, shape (M,)
        Loading time series, M >= 8, not all equal.
    family : str, default="haar"
        Wavelet family for the regression smoother.
    valley_threshold : float, default=0.5
        Runs of rho below this value produce one valley each.

    Returns
    -------
    MixtureResult

    Notes
    -----
    The series is resampled to n = 2**ceil(log2 M) points by nearest
    neighbor to satisfy the dyadic length requirement; detail coefficients
    are soft-thresholded with a universal threshold whose noise scale is
    the median absolute deviation of the finest detail level.
    """
    y = check_signal(np.ravel(loadings), "loadings")
    m = y.size
    if m < 8:
        raise ValueError(f"need at least 8 loadings, got {m}")
    check_family(family)

    labels_raw = two_means(y)
    mu_u = float(y[labels_raw == 1].mean())
    mu_v = float(y[labels_raw == 0].mean())
    w = (y - mu_v) / (mu_u - mu_v)

    n = 1 << int(np.ceil(np.log2(m)))
    grid = (np.arange(n) + 0.5) / n
    nearest = np.clip(np.round(grid * m - 0.5).astype(int), 0, m - 1)
    w_grid = w[nearest]
    labels = labels_raw[nearest]

    levels = max(int(np.log2(n)) - 2, 1)
    approx, details = dwt1(w_grid, family, levels)
    sigma = float(np.median(np.abs(details[0]))) / 0.6745
    lam = sigma * float(np.sqrt(2.0 * np.log(n)))
    details = [soft_threshold(d, lam) for d in details]
    rho = np.clip(idwt1(approx, details, family), 0.0, 1.0)

    return MixtureResult(
        rho=rho, grid=grid, mu_u=mu_u, mu_v=mu_v,
        group_labels=labels, valleys=find_valleys(rho, valley_threshold),
    )


def mean_mixture(results: list[MixtureResult]) -> np.ndarray:
    """Pointwise mean of several mixture functions, clipped to [0, 1]."""
    if not results:
        raise ValueError("mean_mixture needs at least one result")
    n = results[0].rho.size
    for r in results[1:]:
        if r.rho.size != n:
            raise ValueError(f"mixture length mismatch: {r.rho.size} vs {n}")
    return np.clip(np.mean([r.rho for r in results], axis=0), 0.0, 1.0)


class MixtureAnalyzer(BaseEstimator):
    """Mixture-function change scanner with a scikit-learn API.

    ``fit`` accepts a loading series (1-d) or a matrix of loading series
    (columns = components); component-wise mixture functions are averaged.

    Parameters
    ----------
    family : str, default="haar"
        Wavelet family of the regression smoother.
    valley_threshold : float, default=0.5
        Threshold below which local minima are flagged.
    """

    def __init__(self, family: str = "haar", valley_threshold: float = 0.5):
        self.family = family
        self.valley_threshold = valley_threshold

    def fit(self, X, y=None):
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"loadings must be 1-d or 2-d, got shape {arr.shape}")
        results = [
            estimate_mixture(arr[:, k], self.family, self.valley_threshold)
            for k in range(arr.shape[1])
        ]
        self.results_ = results
        self.rho_ = mean_mixture(results)
        self.grid_ = results[0].grid
        self.valleys_ = find_valleys(self.rho_, self.valley_threshold)
        return self
