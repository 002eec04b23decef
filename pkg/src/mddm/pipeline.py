"""Divergence-matrix change detection pipeline.

For every image the 2-d wavelet transform is taken, coefficients are
grouped by orientation (levels concatenated per group), and the density of
each group is estimated on a support shared across the series.  The
density coefficient curves of each group form a curve time series that is
smoothed through the functional dimension model; pairwise Hellinger
distances of the smoothed curves, summed over groups, give the multi-date
divergence matrix (MDDM).  Change scores rank candidate change times by
the mean divergence across each split of the series.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from ._streams import substream
from .config import PipelineConfig
from .density import estimate_sqrt_density
from .functional import (
    FunctionalModel,
    estimate_dimension,
    fit_functional_model,
    forecast_loadings,
    reconstruct,
)
from .kriging import KrigingSmoother
from .raster import RasterSeries, log_transform
from .validation import check_positive_int
from .wavelets import DIAGONAL, HORIZONTAL, VERTICAL, dwt2, soft_threshold_denoise, swt2

__all__ = ["Mddm", "ChangeDetector", "compute_mddm", "change_scores", "forecast_distances"]

_SQRT2 = float(np.sqrt(2.0))
# Relative coefficient span below which a subband group counts as constant.
_DEGENERATE_SPAN = 256.0 * float(np.finfo(float).eps)

_GROUP_ORIENTATION = {
    "horizontal": HORIZONTAL,
    "vertical": VERTICAL,
    "diagonal": DIAGONAL,
}


@dataclass
class GroupCurves:
    """Density curve series of one subband group."""

    name: str
    support: tuple[float, float]
    curves: np.ndarray  # (M, 2**resolution) raw density coefficients
    model: FunctionalModel
    smoothed: np.ndarray  # (M, 2**resolution) model-smoothed, clipped, unit rows


@dataclass
class Mddm:
    """Multi-date divergence matrix with the per-group fit details."""

    matrix: np.ndarray
    groups: dict[str, GroupCurves]

    @property
    def n_images(self) -> int:
        return self.matrix.shape[0]


def as_series(X) -> RasterSeries:
    return X if isinstance(X, RasterSeries) else RasterSeries(np.asarray(X, dtype=float))


def subband_groups(series: RasterSeries, config: PipelineConfig, mode: str) -> dict[str, list[np.ndarray]]:
    """Vectorized wavelet coefficients per orientation group and image.

    Modes: ``all`` — approximation plus the three orientation groups with
    all levels concatenated; ``details`` — the orientation groups only;
    ``coarse`` — approximation plus the coarsest level of each orientation
    (the selection used by the mixture analysis).
    """
    transform = swt2 if config.transform == "swt" else dwt2
    out: dict[str, list[np.ndarray]] = {}
    levels = list(range(1, config.levels + 1))
    if mode == "coarse":
        levels = [config.levels]
    names = ["approx", "horizontal", "vertical", "diagonal"]
    if mode == "details":
        names = ["horizontal", "vertical", "diagonal"]
    for name in names:
        out[name] = []
    for image in series.images:
        coeffs = transform(image, config.family, config.levels)
        if "approx" in out:
            out["approx"].append(coeffs.approx.ravel())
        for name in names:
            if name == "approx":
                continue
            orientation = _GROUP_ORIENTATION[name]
            out[name].append(
                np.concatenate([coeffs.details[(j, orientation)].ravel() for j in levels])
            )
    return out


def _fit_group(name: str, vectors: list[np.ndarray], config: PipelineConfig,
               scale: float = 0.0) -> GroupCurves:
    lo = min(float(v.min()) for v in vectors)
    hi = max(float(v.max()) for v in vectors)
    if hi - lo <= _DEGENERATE_SPAN * max(scale, abs(lo), abs(hi)):
        # Constant coefficients up to transform rounding noise (e.g. the
        # diagonal subband of affine images): estimating a density on a
        # noise-wide support would be meaningless and unstable, so treat
        # the group as the point mass it really is.
        hi = lo + 1.0
    curves = np.stack(
        [
            estimate_sqrt_density(
                v, (lo, hi), config.resolution, denoise_levels=config.denoise_levels
            ).coeffs
            for v in vectors
        ]
    )
    m = curves.shape[0]
    lags = min(config.lags, m - 2) if m > 2 else 1
    if config.components != "auto":
        model = fit_functional_model(curves, p=lags, d=min(int(config.components), curves.shape[1]))
    elif m < 8:
        # Too short for the bootstrap test: fall back to the numerical rank.
        model = fit_functional_model(curves, p=lags, d=None)
    else:
        model = estimate_dimension(
            curves, p=lags, n_boot=config.n_boot, alpha=config.alpha,
            block_length=config.block_length,
            rng=substream(config.seed, "dimension", name),
        )
    smoothed = np.clip(reconstruct(model, curves), 0.0, None)
    norms = np.linalg.norm(smoothed, axis=1)
    norms[norms == 0.0] = 1.0
    smoothed = smoothed / norms[:, None]
    return GroupCurves(name, (lo, hi), curves, model, smoothed)


def _presmooth(series: RasterSeries, config: PipelineConfig) -> RasterSeries:
    if config.smoother == "none":
        return series
    if config.smoother == "wavelet-threshold":
        images = np.stack(
            [
                soft_threshold_denoise(img, config.family, config.levels, "universal")
                for img in series.images
            ]
        )
        return series.with_images(images)
    smoother = KrigingSmoother(
        max_lag=config.kriging_max_lag, n_bins=config.kriging_n_bins,
        subsample=config.kriging_subsample, taper_range=config.kriging_taper_range,
        seed=config.seed,
    )
    return smoother.fit(series).transform(series)


def prepare_groups(series: RasterSeries, config: PipelineConfig, mode: str,
                   presmooth: bool = True) -> dict[str, GroupCurves]:
    """Run transform, density and dimension stages for every subband group."""
    series = as_series(series)
    if series.n_images < 2:
        raise ValueError(f"divergence analysis needs at least 2 images, got {series.n_images}")
    if config.log_offset is not None:
        series = log_transform(series, config.log_offset)
    if presmooth:
        series = _presmooth(series, config)
    vectors = subband_groups(series, config, mode)
    names = list(vectors)
    scale = max(float(np.max(np.abs(v))) for vs in vectors.values() for v in vs)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            fitted = list(pool.map(lambda n: _fit_group(n, vectors[n], config, scale), names))
    else:
        fitted = [_fit_group(n, vectors[n], config, scale) for n in names]
    return {g.name: g for g in fitted}


def compute_mddm(series, config: PipelineConfig | None = None) -> Mddm:
    """Compute the multi-date divergence matrix of an image series.

    Parameters
    ----------
    series : RasterSeries or ndarray of shape (M, rows, cols)
    config : PipelineConfig, optional
        Pipeline parameters; defaults throughout when omitted.

    Returns
    -------
    Mddm
        Symmetric non-negative matrix with zero diagonal: entry (m, l) is
        the sum over subband groups of the Hellinger distance between the
        smoothed density estimates of images m and l.
    """
    config = config or PipelineConfig()
    groups = prepare_groups(series, config, config.mddm_subbands)
    some = next(iter(groups.values()))
    m = some.curves.shape[0]
    total = np.zeros((m, m))
    for group in groups.values():
        # He(u, v) = ||u - v|| / sqrt(2) for unit vectors; the difference
        # form keeps identical curves at exactly zero distance.
        total += np.minimum(cdist(group.smoothed, group.smoothed) / _SQRT2, 1.0)
    np.fill_diagonal(total, 0.0)
    return Mddm(matrix=total, groups=groups)


def change_scores(mddm) -> np.ndarray:
    """Scores ranking candidate change times from a divergence matrix.

    ``scores[t]`` is the mean divergence between the images before ``t``
    and the images from ``t`` on (``scores[0]`` is 0); a change beginning
    at image ``t`` maximizes the score at index ``t``.
    """
    matrix = mddm.matrix if isinstance(mddm, Mddm) else np.asarray(mddm, dtype=float)
    m = matrix.shape[0]
    if matrix.shape != (m, m):
        raise ValueError(f"divergence matrix must be square, got {matrix.shape}")
    scores = np.zeros(m)
    for t in range(1, m):
        scores[t] = float(matrix[:t, t:].mean())
    return scores


def forecast_distances(series, horizon: int, config: PipelineConfig | None = None) -> np.ndarray:
    """Hellinger distances between observed and forecast densities.

    Per subband group, the loading series of the functional model is
    forecast ``horizon`` steps ahead by component-wise AR(1); the forecast
    curves are rebuilt (mean + loadings on the eigenfunctions), clipped and
    renormalized, and compared against every observed density estimate.

    Returns
    -------
    ndarray, shape (n_images, horizon)
        Entry (m, h) sums over groups the distance between image m's
        density estimate and the h-step-ahead forecast density.
    """
    horizon = check_positive_int(horizon, "horizon")
    config = config or PipelineConfig()
    groups = prepare_groups(series, config, config.mddm_subbands)
    some = next(iter(groups.values()))
    m = some.curves.shape[0]
    total = np.zeros((m, horizon))
    for group in groups.values():
        model = group.model
        if model.d_hat == 0:
            predicted = np.tile(model.mean, (horizon, 1))
        else:
            eta = forecast_loadings(model, horizon)
            predicted = model.mean + eta @ model.eigenfunctions.T
        predicted = np.clip(predicted, 0.0, None)
        norms = np.linalg.norm(predicted, axis=1)
        norms[norms == 0.0] = 1.0
        predicted = predicted / norms[:, None]
        observed = group.curves / np.linalg.norm(group.curves, axis=1, keepdims=True)
        total += np.minimum(cdist(observed, predicted) / _SQRT2, 1.0)
    return total


class ChangeDetector(BaseEstimator):
    """Divergence-matrix change detector with a scikit-learn API.

    ``fit`` runs the full pipeline on an image series; the fitted
    attributes expose the divergence matrix, the change scores and the
    best change candidate.

    Parameters
    ----------
    family, levels, transform
        2-d wavelet settings (``transform`` is "dwt" or "swt").
    resolution : int, default=6
        Density resolution J0 (2**J0 histogram bins per group).
    denoise_levels : int, default=0
        Optional shrinkage depth for the density estimates.
    subbands : {"all", "details", "coarse"}, default="all"
        Which orientation groups enter the divergence sum.
    n_components : int or "auto", default="auto"
        Functional dimension per group; "auto" runs the bootstrap test.
    lags, n_boot, alpha, block_length
        Dimension-test parameters.
    smoother : {"none", "wavelet-threshold", "kriging"}, default="none"
        Optional pre-smoothing of the images.
    log_offset : float or None, default=None
        When set, pixels are replaced by ln(v + log_offset) first.
    seed : int, default=0
        Master seed; all stage streams derive from it.
    workers : int, default=1
        Thread pool width for per-group stages (does not affect results).

    Attributes
    ----------
    mddm_ : ndarray of shape (M, M)
    change_scores_ : ndarray of shape (M,)
    change_point_ : int or None
        Argmax of the scores, None when the matrix is identically zero.
    """

    def __init__(self, family: str = "daubechies-4", levels: int = 3,
                 transform: str = "dwt", resolution: int = 6,
                 denoise_levels: int = 0, subbands: str = "all",
                 n_components: int | str = "auto", lags: int = 2,
                 n_boot: int = 500, alpha: float = 0.05, block_length: int = 1,
                 smoother: str = "none", log_offset: float | None = None,
                 seed: int = 0, workers: int = 1):
        self.family = family
        self.levels = levels
        self.transform = transform
        self.resolution = resolution
        self.denoise_levels = denoise_levels
        self.subbands = subbands
        self.n_components = n_components
        self.lags = lags
        self.n_boot = n_boot
        self.alpha = alpha
        self.block_length = block_length
        self.smoother = smoother
        self.log_offset = log_offset
        self.seed = seed
        self.workers = workers

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            log_offset=self.log_offset, seed=self.seed, workers=self.workers,
            smoother=self.smoother, family=self.family, levels=self.levels,
            transform=self.transform, resolution=self.resolution,
            denoise_levels=self.denoise_levels, components=self.n_components,
            lags=self.lags, n_boot=self.n_boot, alpha=self.alpha,
            block_length=self.block_length, mddm_subbands=self.subbands,
        )

    def fit(self, X, y=None):
        result = compute_mddm(as_series(X), self._config())
        self.result_ = result
        self.mddm_ = result.matrix
        self.change_scores_ = change_scores(result)
        peak = float(self.change_scores_.max())
        self.change_point_ = int(np.argmax(self.change_scores_)) if peak > 0 else None
        return self

    def forecast_distances(self, X, horizon: int) -> np.ndarray:
        """Observed-vs-forecast density distances for a series."""
        return forecast_distances(as_series(X), horizon, self._config())
