"""Seeded synthetic fixtures for tests, demos and the ``synth`` command.

Every generator draws from a named substream of the master seed, so the
fixtures are reproducible and independent of generation order.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ._streams import substream
from .raster import RasterSeries

__all__ = [
    "variance_step_series",
    "outlier_image_series",
    "repeated_image_series",
    "variance_drift_series",
    "gaussian_field_series",
    "rank2_curves",
    "rank0_curves",
    "step_mixture_sample",
    "dip_loadings",
]


def variance_step_series(n_images: int = 8, shape: tuple[int, int] = (32, 32),
                         change_index: int = 4, factor: float = 2.0,
                         seed: int = 0) -> RasterSeries:
    """Gaussian-noise series whose variance jumps by ``factor`` at ``change_index``."""
    if not 0 < change_index < n_images:
        raise ValueError(f"change_index must be in 1..{n_images - 1}, got {change_index}")
    rng = substream(seed, "variance-step")
    images = rng.standard_normal((n_images,) + tuple(shape))
    images[change_index:] *= np.sqrt(factor)
    return RasterSeries(images)


def outlier_image_series(n_images: int = 16, shape: tuple[int, int] = (32, 32),
                         outlier_index: int = 5, factor: float = 4.0,
                         seed: int = 0) -> RasterSeries:
    """Gaussian-noise series with a single higher-variance image."""
    if not 0 <= outlier_index < n_images:
        raise ValueError(f"outlier_index must be in 0..{n_images - 1}, got {outlier_index}")
    rng = substream(seed, "outlier-image")
    images = rng.standard_normal((n_images,) + tuple(shape))
    images[outlier_index] *= np.sqrt(factor)
    return RasterSeries(images)


def repeated_image_series(n_images: int = 6, shape: tuple[int, int] = (16, 16),
                          seed: int = 0) -> RasterSeries:
    """The same noise image repeated ``n_images`` times."""
    rng = substream(seed, "repeated-image")
    image = rng.standard_normal(tuple(shape))
    return RasterSeries(np.tile(image, (n_images, 1, 1)))


def variance_drift_series(n_images: int = 12, shape: tuple[int, int] = (32, 32),
                          start: float = 1.0, step: float = 0.08,
                          seed: int = 0) -> RasterSeries:
    """Noise series whose standard deviation grows linearly image by image."""
    rng = substream(seed, "variance-drift")
    scales = start + step * np.arange(n_images)
    if np.any(scales <= 0):
        raise ValueError("drift scales must stay positive")
    images = rng.standard_normal((n_images,) + tuple(shape)) * scales[:, None, None]
    return RasterSeries(images)


def gaussian_field_series(n_images: int = 4, shape: tuple[int, int] = (16, 16),
                          tau2: float = 0.05, sigma2: float = 1.0, theta: float = 4.0,
                          seed: int = 0) -> tuple[RasterSeries, RasterSeries]:
    """Exponential-covariance Gaussian fields plus nugget noise.

    Returns the noise-free series and the observed (noisy) series; grid
    spacing is 1 in both directions.
    """
    rows, cols = shape
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    sites = np.column_stack([ii.ravel(), jj.ravel()]).astype(float)
    cov = sigma2 * np.exp(-cdist(sites, sites) / theta)
    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(len(sites)))
    rng = substream(seed, "gaussian-field")
    clean = (rng.standard_normal((n_images, len(sites))) @ chol.T).reshape(
        (n_images, rows, cols)
    )
    noisy = clean + np.sqrt(tau2) * rng.standard_normal(clean.shape)
    return RasterSeries(clean), RasterSeries(noisy)


def rank2_curves(n_curves: int = 64, n_points: int = 16, noise: float = 0.0,
                 seed: int = 0) -> np.ndarray:
    """Curve series spanned by two orthonormal shapes with sin/cos loadings."""
    rng = substream(seed, "rank2-curves")
    m = np.arange(1, n_curves + 1)
    eta1 = np.sin(2 * np.pi * m / n_curves)
    eta2 = np.cos(2 * np.pi * m / n_curves)
    basis, _ = np.linalg.qr(rng.standard_normal((n_points, 2)))
    curves = np.outer(eta1, basis[:, 0]) + np.outer(eta2, basis[:, 1])
    if noise > 0:
        curves = curves + noise * rng.standard_normal(curves.shape)
    return curves


def rank0_curves(n_curves: int = 64, n_points: int = 16, scale: float = 0.01,
                 seed: int = 0) -> np.ndarray:
    """Pure-noise curve series (no common low-dimensional structure)."""
    rng = substream(seed, "rank0-curves")
    return scale * rng.standard_normal((n_curves, n_points))


def step_mixture_sample(n: int = 128, sigma: float = 0.1, change_index: int | None = None,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Noisy loadings whose mixture weight steps from 1 to 0.

    Returns ``(loadings, truth)`` where truth is 1 before ``change_index``
    (default n//2) and 0 from it on.
    """
    if change_index is None:
        change_index = n // 2
    truth = np.where(np.arange(n) < change_index, 1.0, 0.0)
    rng = substream(seed, "step-mixture")
    return truth + sigma * rng.standard_normal(n), truth


def dip_loadings(n: int = 32, dip_index: int = 12, noise: float = 0.01,
                 seed: int = 0) -> np.ndarray:
    """Loadings equal to 1 except for a single 0 at ``dip_index``, plus noise."""
    if not 0 <= dip_index < n:
        raise ValueError(f"dip_index must be in 0..{n - 1}, got {dip_index}")
    values = np.ones(n)
    values[dip_index] = 0.0
    rng = substream(seed, "dip-loadings")
    return values + noise * rng.standard_normal(n)
