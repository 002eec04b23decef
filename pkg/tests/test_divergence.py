"""Divergence-matrix pipeline tests."""
import numpy as np
import pytest

from mddm import (
    ChangeDetector,
    KrigingSmoother,
    RasterSeries,
    change_scores,
    compute_mddm,
    forecast_distances,
)
from mddm.config import PipelineConfig
from mddm.pipeline import prepare_groups, subband_groups
from mddm.synth import (
    gaussian_field_series,
    repeated_image_series,
    variance_drift_series,
    variance_step_series,
)

# Detection settings used by the change-localization fixtures: stationary
# transform, detail orientations only, one functional component.
DETECT = dict(transform="swt", family="daubechies-4", levels=3, resolution=4,
              mddm_subbands="details", components=1)


def test_identical_images_give_zero_matrix():
    result = compute_mddm(repeated_image_series(6), PipelineConfig())
    assert result.matrix.shape == (6, 6)
    assert np.all(result.matrix == 0.0)


def test_constant_images_give_zero_matrix():
    # Every subband of a constant image is constant; the degenerate-span
    # point-mass fallback must keep the distances at exactly zero.
    series = RasterSeries(np.full((6, 16, 16), 7.0))
    result = compute_mddm(series, PipelineConfig())
    assert np.all(result.matrix == 0.0)


def test_matrix_is_symmetric_bounded():
    result = compute_mddm(variance_step_series(seed=1), PipelineConfig(**DETECT))
    m = result.matrix
    assert np.array_equal(m, m.T)
    assert np.all(np.diag(m) == 0.0)
    assert np.all(m >= 0.0)
    # Each group contributes a Hellinger distance bounded by 1.
    assert np.all(m <= len(result.groups))


def test_permutation_equivariance_at_full_rank():
    # With the component count equal to the curve length the functional
    # smoothing is the identity, so permuting the images permutes the
    # matrix rows and columns.
    series = variance_step_series(n_images=6, change_index=3, seed=2)
    cfg = PipelineConfig(resolution=4, components=16)
    base = compute_mddm(series, cfg).matrix
    perm = np.array([3, 0, 5, 1, 4, 2])
    permuted = compute_mddm(RasterSeries(series.images[perm]), cfg).matrix
    assert np.max(np.abs(permuted - base[np.ix_(perm, perm)])) < 1e-12


def test_variance_step_is_localized():
    for seed in (0, 1, 2):
        result = compute_mddm(variance_step_series(seed=seed), PipelineConfig(**DETECT))
        m = result.matrix
        cross = m[:4, 4:].mean()
        mask = ~np.eye(4, dtype=bool)
        within = 0.5 * (m[:4, :4][mask].mean() + m[4:, 4:][mask].mean())
        assert cross > 3.0 * within
        assert int(np.argmax(change_scores(result))) in (3, 4)


def test_subband_groups_shapes():
    series = RasterSeries(np.random.default_rng(0).standard_normal((2, 16, 16)))
    cfg = PipelineConfig(levels=2)
    groups = subband_groups(series, cfg, "all")
    assert sorted(groups) == ["approx", "diagonal", "horizontal", "vertical"]
    assert groups["approx"][0].shape == (16,)        # (16/4)**2
    assert groups["horizontal"][0].shape == (80,)    # 64 + 16
    details = subband_groups(series, cfg, "details")
    assert sorted(details) == ["diagonal", "horizontal", "vertical"]
    coarse = subband_groups(series, cfg, "coarse")
    assert coarse["horizontal"][0].shape == (16,)    # coarsest level only
    swt_groups = subband_groups(series, PipelineConfig(levels=2, transform="swt"), "all")
    assert swt_groups["approx"][0].shape == (256,)
    assert swt_groups["horizontal"][0].shape == (512,)


def test_prepare_groups_needs_two_images():
    with pytest.raises(ValueError, match="at least 2 images"):
        prepare_groups(RasterSeries(np.ones((1, 8, 8))), PipelineConfig(), "all")


def test_workers_do_not_change_result():
    series = variance_step_series(seed=3)
    base = compute_mddm(series, PipelineConfig(**DETECT)).matrix
    threaded = compute_mddm(series, PipelineConfig(**DETECT, workers=4)).matrix
    assert np.array_equal(base, threaded)


# ---------------------------------------------------------------------------
# change scores


def test_change_scores_zero_matrix():
    assert np.all(change_scores(np.zeros((5, 5))) == 0.0)


def test_change_scores_block_matrix():
    # Hand-computed on a 4x4 two-block matrix (within 0.1, across 0.9):
    # score_1 = (0.1 + 0.9 + 0.9)/3, score_2 = 0.9, score_3 = score_1.
    m = np.array([
        [0.0, 0.1, 0.9, 0.9],
        [0.1, 0.0, 0.9, 0.9],
        [0.9, 0.9, 0.0, 0.1],
        [0.9, 0.9, 0.1, 0.0],
    ])
    scores = change_scores(m)
    assert scores[0] == 0.0
    assert scores[1] == pytest.approx(1.9 / 3.0, abs=1e-12)
    assert scores[2] == pytest.approx(0.9, abs=1e-12)
    assert scores[3] == pytest.approx(1.9 / 3.0, abs=1e-12)
    assert int(np.argmax(scores)) == 2


def test_change_scores_scale_linearly():
    rng = np.random.default_rng(4)
    m = np.abs(rng.standard_normal((6, 6)))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    assert np.allclose(change_scores(3.0 * m), 3.0 * change_scores(m), atol=1e-12)


def test_change_scores_requires_square():
    with pytest.raises(ValueError, match="square"):
        change_scores(np.zeros((3, 4)))


# ---------------------------------------------------------------------------
# forecasting


def test_forecast_constant_series_is_zero():
    distances = forecast_distances(repeated_image_series(12), 3, PipelineConfig())
    assert distances.shape == (12, 3)
    assert np.max(np.abs(distances)) < 1e-12


def test_forecast_drift_decreases_with_recency():
    # The AR(1) forecast extrapolates the drift, so recent images sit
    # closer to the predicted density than early ones.
    series = variance_drift_series(step=0.15)
    distances = forecast_distances(series, 2, PipelineConfig(components=1))
    col = distances[:, 0]
    assert col[0] > col[-1]
    assert col[:4].mean() > col[-4:].mean()


def test_forecast_horizon_validated():
    with pytest.raises(ValueError, match="horizon"):
        forecast_distances(repeated_image_series(12), 0, PipelineConfig())


# ---------------------------------------------------------------------------
# pre-smoothing invariance on noise-free series


def test_wavelet_presmoothing_keeps_noise_free_matrix():
    # Affine images have (numerically) empty detail subbands, so universal
    # soft thresholding must not move the divergence matrix.
    plane = np.add.outer(np.arange(16.0), 2.0 * np.arange(16.0)) + 5.0
    images = np.stack([(1.0 + 0.1 * m) * plane for m in range(6)])
    series = RasterSeries(images)
    plain = compute_mddm(series, PipelineConfig()).matrix
    smoothed = compute_mddm(series, PipelineConfig(smoother="wavelet-threshold")).matrix
    assert np.max(np.abs(smoothed - plain)) < 1e-6


def test_kriging_presmoothing_composes_exactly():
    # smoother="kriging" must be the literal composition of variogram
    # fitting, kriging and the plain pipeline, bit for bit.
    _, noisy = gaussian_field_series(4, (16, 16))
    via_pipeline = compute_mddm(noisy, PipelineConfig(smoother="kriging", seed=3)).matrix
    smoothed = KrigingSmoother(seed=3).fit(noisy).transform(noisy)
    manual = compute_mddm(smoothed, PipelineConfig(seed=3)).matrix
    assert np.array_equal(via_pipeline, manual)
    assert not np.array_equal(via_pipeline, compute_mddm(noisy, PipelineConfig(seed=3)).matrix)


# ---------------------------------------------------------------------------
# estimator API


def test_change_detector_finds_step():
    det = ChangeDetector(transform="swt", family="daubechies-4", levels=3,
                         resolution=4, subbands="details", n_components=1)
    det.fit(variance_step_series(seed=0).images)
    assert det.mddm_.shape == (8, 8)
    assert det.change_scores_.shape == (8,)
    assert det.change_point_ in (3, 4)


def test_change_detector_no_change_is_none():
    det = ChangeDetector().fit(repeated_image_series(6))
    assert det.change_point_ is None
    assert np.all(det.mddm_ == 0.0)


def test_change_detector_forecast_shape():
    det = ChangeDetector(n_components=1)
    out = det.forecast_distances(variance_drift_series(step=0.15), 2)
    assert out.shape == (12, 2)
