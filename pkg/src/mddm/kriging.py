"""Geostatistical pre-smoothing: variogram estimation and tapered kriging.

The spatial model is an exponential-correlation field with a nugget:
semivariogram gamma(h) = tau2 + sigma2 * (1 - exp(-h / theta)).  Ordinary
kriging predictions follow

    I_hat(x0) = mu_hat + c' Sigma^{-1} (I - mu_hat 1),
    mu_hat    = (1' Sigma^{-1} I) / (1' Sigma^{-1} 1),

with the covariance tapered by a compactly supported Wendland function so
Sigma is sparse and the solve scales to full images.  The taper multiplies
both Sigma and the prediction covariances c (one-taper scheme).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin

from ._streams import substream
from .raster import RasterSeries
from .validation import check_positive_int

__all__ = [
    "VariogramModel",
    "EmpiricalVariogram",
    "KrigingSmoother",
    "empirical_variogram",
    "fit_variogram",
    "wendland_taper",
    "krige_smooth",
]

_EPS = 1e-12


@dataclass
class VariogramModel:
    """Exponential variogram parameters with a taper range.

    Attributes
    ----------
    tau2 : float
        Nugget (micro-scale variance), >= 0.
    sigma2 : float
        Partial sill (spatially structured variance), > 0.
    theta : float
        Correlation decay length, > 0.
    taper_range : float
        Distance beyond which the tapered covariance is exactly zero.
    contrast : float or None
        Weighted least-squares contrast achieved by the fit, when fitted.
    """

    tau2: float
    sigma2: float
    theta: float
    taper_range: float
    contrast: float | None = None

    def __post_init__(self):
        if self.tau2 < 0:
            raise ValueError(f"nugget must be non-negative, got {self.tau2}")
        if self.sigma2 <= 0:
            raise ValueError(f"partial sill must be positive, got {self.sigma2}")
        if self.theta <= 0:
            raise ValueError(f"range must be positive, got {self.theta}")
        if self.taper_range <= 0:
            raise ValueError(f"taper range must be positive, got {self.taper_range}")

    def semivariogram(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return self.tau2 + self.sigma2 * (1.0 - np.exp(-h / self.theta))

    def covariance(self, h) -> np.ndarray:
        """Structured covariance sigma2 * exp(-h / theta) (nugget excluded)."""
        h = np.asarray(h, dtype=float)
        return self.sigma2 * np.exp(-h / self.theta)


@dataclass
class EmpiricalVariogram:
    """Binned empirical semivariogram.

    ``gamma_hat[b]`` is half the mean squared pixel difference over all
    sampled pairs whose distance falls in bin ``b``, pooled across images;
    ``counts[b]`` is the number of contributing pairs.
    """

    bin_centers: np.ndarray
    gamma_hat: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.bin_centers = np.asarray(self.bin_centers, dtype=float)
        self.gamma_hat = np.asarray(self.gamma_hat, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        if not (len(self.bin_centers) == len(self.gamma_hat) == len(self.counts)):
            raise ValueError("bin_centers, gamma_hat and counts must share length")
        if np.any(self.counts <= 0):
            raise ValueError("reported bins must have positive pair counts")
        if np.any(np.diff(self.bin_centers) <= 0):
            raise ValueError("bins must be sorted by distance")


def _grid_sites(series: RasterSeries) -> np.ndarray:
    dx, dy = series.pixel_spacing
    rows = np.arange(series.rows) * dy
    cols = np.arange(series.cols) * dx
    yy, xx = np.meshgrid(rows, cols, indexing="ij")
    return np.column_stack([yy.ravel(), xx.ravel()])


def empirical_variogram(series: RasterSeries, max_lag: float | None = None,
                        n_bins: int = 15, subsample: int = 20000,
                        seed: int = 0) -> EmpiricalVariogram:
    """Estimate the semivariogram from random pixel pairs, pooled over images.

    Parameters
    ----------
    series : RasterSeries
    max_lag : float, optional
        Largest pair distance retained; defaults to a quarter of the
        smaller image extent.
    n_bins : int, default=15
        Number of equal-width distance bins on (0, max_lag].
    subsample : int, default=20000
        Number of random pixel pairs drawn (same pairs reused for every
        image).  Caps the quadratic pair cost.
    seed : int, default=0
        Subsampling is deterministic given this seed.

    Returns
    -------
    EmpiricalVariogram
        Bins with no pairs are dropped.
    """
    n_bins = check_positive_int(n_bins, "n_bins")
    subsample = check_positive_int(subsample, "subsample")
    dx, dy = series.pixel_spacing
    if max_lag is None:
        max_lag = 0.25 * min(series.rows * dy, series.cols * dx)
    max_lag = float(max_lag)
    if max_lag <= 0:
        raise ValueError(f"max_lag must be positive, got {max_lag}")

    sites = _grid_sites(series)
    n_sites = sites.shape[0]
    rng = substream(seed, "variogram-pairs")
    left = rng.integers(0, n_sites, size=subsample)
    right = rng.integers(0, n_sites, size=subsample)
    dist = np.linalg.norm(sites[left] - sites[right], axis=1)
    keep = (left != right) & (dist <= max_lag)
    left, right, dist = left[keep], right[keep], dist[keep]
    if dist.size == 0:
        raise ValueError("no pixel pairs within max_lag; increase max_lag or subsample")

    flat = series.images.reshape(series.n_images, -1)
    sq = 0.5 * (flat[:, left] - flat[:, right]) ** 2  # (M, n_pairs)
    edges = np.linspace(0.0, max_lag, n_bins + 1)
    which = np.clip(np.searchsorted(edges, dist, side="right") - 1, 0, n_bins - 1)

    centers, gammas, counts = [], [], []
    for b in range(n_bins):
        mask = which == b
        if not mask.any():
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        gammas.append(float(sq[:, mask].mean()))
        counts.append(int(mask.sum()))
    return EmpiricalVariogram(np.array(centers), np.array(gammas), np.array(counts))


def _contrast(params: np.ndarray, h: np.ndarray, gamma: np.ndarray,
              weights: np.ndarray) -> float:
    tau2 = max(params[0], 0.0)
    sigma2 = max(params[1], _EPS)
    theta = max(params[2], _EPS)
    model = tau2 + sigma2 * (1.0 - np.exp(-h / theta))
    return float(np.sum(weights * (gamma - model) ** 2))


def fit_variogram(ev: EmpiricalVariogram) -> VariogramModel:
    """Minimum-contrast fit of the exponential model to an empirical variogram.

    Minimizes the pair-count-weighted squared distance between empirical and
    model semivariogram values with a bounded derivative-free search
    (Nelder-Mead over box-projected parameters), starting from the best of a
    range grid with per-range linear least squares for nugget and sill.
    """
    h = ev.bin_centers
    gamma = ev.gamma_hat
    weights = ev.counts.astype(float)
    if len(h) < 3:
        raise ValueError(f"need at least 3 nonempty bins to fit, got {len(h)}")

    best = None
    for theta in np.geomspace(h[0] / 4.0, 4.0 * h[-1], 30):
        basis = 1.0 - np.exp(-h / theta)
        design = np.column_stack([np.ones_like(h), basis]) * np.sqrt(weights)[:, None]
        target = gamma * np.sqrt(weights)
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        start = np.array([max(coef[0], 0.0), max(coef[1], _EPS), theta])
        value = _contrast(start, h, gamma, weights)
        if best is None or value < best[0]:
            best = (value, start)
    start_value, start = best

    result = minimize(
        _contrast, start, args=(h, gamma, weights), method="Nelder-Mead",
        options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-14},
    )
    final = np.array([max(result.x[0], 0.0), max(result.x[1], _EPS), max(result.x[2], _EPS)])
    final_value = _contrast(final, h, gamma, weights)
    if final_value > start_value + 1e-9 * (1.0 + start_value):
        raise RuntimeError(
            "variogram fit failed to improve on its starting simplex "
            f"(contrast {final_value:.6g} vs {start_value:.6g})"
        )
    tau2, sigma2, theta = final
    return VariogramModel(
        tau2=float(tau2), sigma2=float(sigma2), theta=float(theta),
        taper_range=3.0 * float(theta), contrast=final_value,
    )


def wendland_taper(h, r: float) -> np.ndarray:
    """Wendland-1 taper (1 - h/r)_+^4 (1 + 4 h/r).

    Positive definite in up to three dimensions; exactly zero for h >= r.
    """
    if r <= 0:
        raise ValueError(f"taper range must be positive, got {r}")
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("distances must be non-negative")
    u = np.clip(1.0 - h / r, 0.0, None)
    return u**4 * (1.0 + 4.0 * h / r)


def _tapered_system(sites: np.ndarray, model: VariogramModel):
    """Sparse tapered covariance matrix over ``sites`` and its factorization."""
    n = sites.shape[0]
    tree = cKDTree(sites)
    pairs = tree.query_pairs(r=model.taper_range, output_type="ndarray")
    if model.tau2 == 0.0 and pairs.size:
        d = np.linalg.norm(sites[pairs[:, 0]] - sites[pairs[:, 1]], axis=1)
        dup = np.nonzero(d == 0.0)[0]
        if dup.size:
            i, j = pairs[dup[0]]
            raise ValueError(
                f"singular covariance: duplicate sites {int(i)} and {int(j)} with zero nugget"
            )
    if pairs.size:
        d = np.linalg.norm(sites[pairs[:, 0]] - sites[pairs[:, 1]], axis=1)
        vals = model.covariance(d) * wendland_taper(d, model.taper_range)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
        data = np.concatenate([vals, vals, np.full(n, model.sigma2 + model.tau2)])
    else:
        rows = cols = np.arange(n)
        data = np.full(n, model.sigma2 + model.tau2)
    cov = sparse.csc_matrix((data, (rows, cols)), shape=(n, n))
    try:
        factor = splu(cov)
    except RuntimeError as exc:
        raise ValueError(f"covariance matrix is numerically singular: {exc}") from None
    return tree, factor


def krige_smooth(series: RasterSeries, model: VariogramModel, targets=None):
    """Ordinary-kriging prediction for every image of a series.

    Parameters
    ----------
    series : RasterSeries
        Observations; every pixel is an observed site.
    model : VariogramModel
        Fitted (or known) spatial parameters, including the taper range.
    targets : ndarray of shape (n_targets, 2), optional
        Prediction sites as (y, x) coordinates in the series' spatial
        units.  When omitted, predictions are made at the observed pixels
        and a smoothed :class:`RasterSeries` is returned; otherwise an
        array of shape (n_images, n_targets) is returned.

    Notes
    -----
    The kriging weights solve one sparse factorization shared by all
    images; the per-image solves are a single multi-column triangular
    solve, so the result does not depend on any execution order.
    """
    sites = _grid_sites(series)
    tree, factor = _tapered_system(sites, model)
    flat = series.images.reshape(series.n_images, -1).T  # (n_sites, M)

    ones = np.ones(sites.shape[0])
    w = factor.solve(ones)
    denom = float(ones @ w)
    mu = (flat.T @ w) / denom  # (M,)
    alpha = factor.solve(flat - ones[:, None] * mu[None, :])  # (n_sites, M)

    if targets is None:
        # c at an observed site equals its Sigma row minus the nugget, so
        # the prediction collapses to y - tau2 * alpha.
        pred = flat - model.tau2 * alpha
        return series.with_images(pred.T.reshape(series.images.shape))

    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 2 or targets.shape[1] != 2:
        raise ValueError(f"targets must have shape (n_targets, 2), got {targets.shape}")
    target_tree = cKDTree(targets)
    cross = target_tree.sparse_distance_matrix(
        tree, max_distance=model.taper_range, output_type="coo_matrix"
    )
    vals = model.covariance(cross.data) * wendland_taper(cross.data, model.taper_range)
    c_mat = sparse.csr_matrix((vals, (cross.row, cross.col)),
                              shape=(targets.shape[0], sites.shape[0]))
    return (mu[None, :] + c_mat @ alpha).T


class KrigingSmoother(TransformerMixin, BaseEstimator):
    """Variogram-fitting kriging smoother with a scikit-learn API.

    ``fit`` estimates the spatial model from the series itself (empirical
    variogram + minimum-contrast fit); ``transform`` replaces every image
    by its kriging prediction at the observed pixels.

    Parameters
    ----------
    max_lag : float or None, default=None
        Largest pair distance in the empirical variogram (None = a quarter
        of the smaller image extent).
    n_bins : int, default=15
        Distance bins.
    subsample : int, default=20000
        Random pixel pairs for the empirical variogram.
    taper_range : float or None, default=None
        Override for the fitted taper range (None = 3 * theta).
    seed : int, default=0
        Seed for pair subsampling.
    """

    def __init__(self, max_lag: float | None = None, n_bins: int = 15,
                 subsample: int = 20000, taper_range: float | None = None,
                 seed: int = 0):
        self.max_lag = max_lag
        self.n_bins = n_bins
        self.subsample = subsample
        self.taper_range = taper_range
        self.seed = seed

    def fit(self, X, y=None):
        series = X if isinstance(X, RasterSeries) else RasterSeries(X)
        ev = empirical_variogram(
            series, max_lag=self.max_lag, n_bins=self.n_bins,
            subsample=self.subsample, seed=self.seed,
        )
        model = fit_variogram(ev)
        if self.taper_range is not None:
            model = VariogramModel(
                model.tau2, model.sigma2, model.theta,
                float(self.taper_range), model.contrast,
            )
        self.empirical_variogram_ = ev
        self.model_ = model
        return self

    def transform(self, X):
        if not hasattr(self, "model_"):
            raise ValueError("KrigingSmoother is not fitted; call fit first")
        if isinstance(X, RasterSeries):
            return krige_smooth(X, self.model_)
        series = RasterSeries(X)
        return krige_smooth(series, self.model_).images
