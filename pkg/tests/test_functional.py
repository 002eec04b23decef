"""Functional dimension model tests.

The D-matrix oracle is the literal quadruple sum over series indices; the
fast implementation must reproduce it exactly (up to accumulation noise).
"""
import numpy as np
import pytest

from mddm.functional import (
    FunctionalBasis,
    FunctionalModel,
    build_d_matrix,
    estimate_dimension,
    fit_functional_model,
    forecast_loadings,
    reconstruct,
)
from mddm.synth import rank0_curves, rank2_curves


def naive_d_matrix(coeffs, p):
    """Literal quadruple-sum D, cost O(p M^2 K^2)."""
    c = np.asarray(coeffs, dtype=float)
    m, k_dim = c.shape
    d = np.zeros((k_dim, k_dim))
    for k in range(1, p + 1):
        for j in range(k_dim):
            for jp in range(k_dim):
                acc = 0.0
                for r in range(m - p):
                    for s in range(m - p):
                        acc += c[r, j] * c[s, jp] * float(c[r + k] @ c[s + k])
                d[j, jp] += acc
    return d / (m - p) ** 2


def test_zero_coeffs_zero_matrix():
    assert np.all(build_d_matrix(np.zeros((5, 3)), 2) == 0.0)


def test_small_instance_matches_naive_oracle():
    coeffs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    fast = build_d_matrix(coeffs, 1)
    assert np.max(np.abs(fast - naive_d_matrix(coeffs, 1))) < 1e-12


def test_random_instance_matches_naive_oracle():
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal((6, 3))
    for p in (1, 2):
        fast = build_d_matrix(coeffs, p)
        assert np.max(np.abs(fast - naive_d_matrix(coeffs, p))) < 1e-10


def test_d_matrix_symmetric_psd():
    rng = np.random.default_rng(1)
    d = build_d_matrix(rng.standard_normal((10, 4)), 2)
    assert np.max(np.abs(d - d.T)) < 1e-12
    assert np.min(np.linalg.eigvalsh(d)) > -1e-12


def test_rank_one_series_gives_rank_one_d():
    rng = np.random.default_rng(2)
    direction = rng.standard_normal(5)
    direction /= np.linalg.norm(direction)
    coeffs = np.outer(rng.standard_normal(12), direction)
    lam = np.linalg.eigvalsh(build_d_matrix(coeffs, 2))[::-1]
    assert np.all(lam[1:] < 1e-10 * lam[0])


def test_p_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        build_d_matrix(np.ones((4, 2)), 3)
    with pytest.raises(ValueError, match="positive integer"):
        build_d_matrix(np.ones((4, 2)), 0)


# ---------------------------------------------------------------------------
# fixed-dimension fits


def test_full_dimension_reconstruct_is_identity():
    rng = np.random.default_rng(3)
    coeffs = rng.standard_normal((9, 4))
    model = fit_functional_model(coeffs, p=2, d=4)
    assert np.max(np.abs(reconstruct(model, coeffs) - coeffs)) < 1e-8


def test_zero_dimension_reconstruct_is_mean():
    rng = np.random.default_rng(4)
    coeffs = rng.standard_normal((7, 3))
    model = fit_functional_model(coeffs, p=1, d=0)
    out = reconstruct(model, coeffs)
    assert np.allclose(out, coeffs.mean(axis=0), atol=1e-12)


def test_rank2_fit_recovers_series():
    curves = rank2_curves(64, 16, noise=0.0)
    model = fit_functional_model(curves, p=2, d=2)
    assert model.d_hat == 2
    # Eigenfunction columns are orthonormal.
    gram = model.eigenfunctions.T @ model.eigenfunctions
    assert np.max(np.abs(gram - np.eye(2))) < 1e-8
    assert np.max(np.abs(reconstruct(model, curves) - curves)) < 1e-6


def test_numerical_rank_detects_two_components():
    model = fit_functional_model(rank2_curves(64, 16, noise=0.0), p=2, d=None)
    assert model.d_hat == 2


def test_constant_series_has_dimension_zero():
    # Centering a constant series leaves only rounding noise; the noise
    # floor must keep that from registering as structure.
    coeffs = np.tile([0.3, 0.7, 0.1], (12, 1))
    assert fit_functional_model(coeffs, p=2, d=None).d_hat == 0
    assert estimate_dimension(coeffs, p=2, n_boot=100, block_length=1).d_hat == 0


def test_reconstruct_length_mismatch():
    model = fit_functional_model(np.ones((5, 3)) * np.arange(3), p=1, d=1)
    with pytest.raises(ValueError, match="does not match"):
        reconstruct(model, np.ones((2, 4)))


def test_dimension_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        fit_functional_model(np.ones((5, 3)), p=1, d=4)


# ---------------------------------------------------------------------------
# bootstrap dimension test


def test_estimate_dimension_validation():
    curves = rank2_curves(12, 6)
    with pytest.raises(ValueError, match="at least 8 curves"):
        estimate_dimension(curves[:5], p=1)
    with pytest.raises(ValueError, match="at least 100"):
        estimate_dimension(curves, p=2, n_boot=50)
    with pytest.raises(ValueError, match="alpha"):
        estimate_dimension(curves, p=2, alpha=1.5)
    with pytest.raises(ValueError, match="block_length"):
        estimate_dimension(curves, p=2, block_length=0)


def test_dimension_recovery_smoke():
    for seed in (0, 1):
        model = estimate_dimension(
            rank2_curves(64, 16, noise=0.01, seed=seed),
            p=2, n_boot=500, alpha=0.05, block_length=1, rng=seed,
        )
        assert model.d_hat == 2
    model = estimate_dimension(
        rank0_curves(64, 16, seed=0), p=2, n_boot=500, alpha=0.05,
        block_length=1, rng=0,
    )
    assert model.d_hat == 0


def test_dimension_estimate_deterministic():
    curves = rank2_curves(64, 16, noise=0.05, seed=3)
    a = estimate_dimension(curves, p=2, n_boot=200, block_length=1, rng=7)
    b = estimate_dimension(curves, p=2, n_boot=200, block_length=1, rng=7)
    assert a.d_hat == b.d_hat
    assert np.array_equal(a.loadings, b.loadings)


# ---------------------------------------------------------------------------
# forecasting


def _loading_model(loadings):
    loadings = np.asarray(loadings, dtype=float)[:, None]
    return FunctionalModel(
        d_hat=1,
        eigenfunctions=np.ones((1, 1)),
        loadings=loadings,
        eigenvalues=np.ones(1),
        p=1,
        mean=np.zeros(1),
    )


def test_forecast_geometric_series():
    # x[t+1] = 0.8 x[t] exactly, so the fitted AR(1) must continue the
    # geometric decay: h-step forecast = 0.8 ** (11 + h).
    rho = 0.8
    model = _loading_model(rho ** np.arange(12))
    out = forecast_loadings(model, 3)
    assert np.allclose(out[:, 0], rho ** (11 + np.arange(1, 4)), atol=1e-8)


def test_forecast_constant_series():
    model = _loading_model(np.full(10, 2.5))
    out = forecast_loadings(model, 4)
    assert np.allclose(out, 2.5, atol=1e-10)


def test_forecast_validation():
    model = _loading_model(np.arange(6.0))
    with pytest.raises(ValueError, match="at least 10 loadings"):
        forecast_loadings(model, 1)
    model = _loading_model(np.arange(12.0))
    with pytest.raises(ValueError, match="horizon"):
        forecast_loadings(model, 0)


# ---------------------------------------------------------------------------
# estimator API


def test_functional_basis_fixed_components():
    curves = rank2_curves(64, 16, noise=0.0)
    basis = FunctionalBasis(n_components=2).fit(curves)
    assert basis.n_components_ == 2
    assert basis.components_.shape == (2, 16)
    assert basis.loadings_.shape == (64, 2)
    assert np.max(np.abs(basis.transform(curves) - curves)) < 1e-6
    assert basis.forecast(5).shape == (5, 2)


def test_functional_basis_auto():
    basis = FunctionalBasis(n_boot=200, block_length=1, seed=0)
    basis.fit(rank2_curves(64, 16, noise=0.01))
    assert basis.n_components_ == 2


def test_functional_basis_requires_fit():
    basis = FunctionalBasis()
    with pytest.raises(ValueError, match="not fitted"):
        basis.transform(np.ones((4, 4)))
    with pytest.raises(ValueError, match="not fitted"):
        basis.forecast(2)
