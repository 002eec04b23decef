"""Change detection in raster image time series.

Images are decomposed into wavelet subbands; the densities of the subband
coefficients are estimated through their square roots in a Haar basis,
smoothed by a low-dimensional functional model, and compared pairwise with
the Hellinger distance.  Summing the distances over subbands gives the
multi-date divergence matrix (MDDM) whose structure localizes changes; a
mixture-function analysis of the loading series refines the candidate
change times, and optional kriging removes spatial noise first.

The scikit-learn style estimators are the main entry points:

>>> from mddm import ChangeDetector
>>> detector = ChangeDetector(n_components=1, subbands="details").fit(images)
>>> detector.change_point_

Lower-level functions (transforms, density estimation, the divergence
matrix itself) live in the submodules and are re-exported here.
"""

from .config import ConfigError, PipelineConfig, load_config
from .density import (
    SqrtDensity,
    estimate_sqrt_density,
    evaluate_density,
    hellinger,
    hellinger_from_coeffs,
)
from .functional import (
    FunctionalBasis,
    FunctionalModel,
    build_d_matrix,
    estimate_dimension,
    fit_functional_model,
    forecast_loadings,
    reconstruct,
)
from .kriging import (
    EmpiricalVariogram,
    KrigingSmoother,
    VariogramModel,
    empirical_variogram,
    fit_variogram,
    krige_smooth,
    wendland_taper,
)
from .mixture import (
    MixtureAnalyzer,
    MixtureResult,
    estimate_mixture,
    find_valleys,
    mean_mixture,
)
from .pipeline import (
    ChangeDetector,
    Mddm,
    change_scores,
    compute_mddm,
    forecast_distances,
)
from .raster import RasterSeries, load_series, log_transform, save_series
from .wavelets import (
    DIAGONAL,
    HORIZONTAL,
    VERTICAL,
    SubbandCoeffs,
    WaveletDenoiser,
    dwt1,
    dwt2,
    idwt1,
    idwt2,
    iswt2,
    soft_threshold,
    soft_threshold_denoise,
    swt2,
    universal_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # estimators
    "ChangeDetector",
    "WaveletDenoiser",
    "FunctionalBasis",
    "KrigingSmoother",
    "MixtureAnalyzer",
    # data containers
    "RasterSeries",
    "SubbandCoeffs",
    "SqrtDensity",
    "FunctionalModel",
    "Mddm",
    "MixtureResult",
    "VariogramModel",
    "EmpiricalVariogram",
    "PipelineConfig",
    "ConfigError",
    # transforms
    "dwt1",
    "idwt1",
    "dwt2",
    "idwt2",
    "swt2",
    "iswt2",
    "HORIZONTAL",
    "VERTICAL",
    "DIAGONAL",
    "soft_threshold",
    "universal_threshold",
    "soft_threshold_denoise",
    # densities and divergence
    "estimate_sqrt_density",
    "evaluate_density",
    "hellinger",
    "hellinger_from_coeffs",
    # functional model
    "build_d_matrix",
    "fit_functional_model",
    "estimate_dimension",
    "reconstruct",
    "forecast_loadings",
    # pipeline
    "compute_mddm",
    "change_scores",
    "forecast_distances",
    # mixture
    "estimate_mixture",
    "mean_mixture",
    "find_valleys",
    # kriging
    "empirical_variogram",
    "fit_variogram",
    "krige_smooth",
    "wendland_taper",
    # io and config
    "load_series",
    "save_series",
    "log_transform",
    "load_config",
]
