"""Declarative pipeline configuration.

A single INI-style file drives every CLI command.  All keys are validated
against the schema below before any computation starts; unknown sections
or keys are rejected so that typos cannot silently fall back to defaults.

Example
-------
::

    [input]
    path = series.rts
    format = rts1

    [wavelet]
    family = daubechies-4
    levels = 3
    transform = dwt

    [dimension]
    components = auto
    alpha = 0.05
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

__all__ = ["ConfigError", "PipelineConfig", "load_config"]


class ConfigError(ValueError):
    """Raised for unknown keys or invalid values in a config file."""


@dataclass
class PipelineConfig:
    """Validated parameters for the full detection pipeline."""

    # [input]
    input_path: str | None = None
    input_format: str = "rts1"
    log_offset: float | None = None
    # [output]
    output_dir: str = "."
    # [run]
    seed: int = 0
    workers: int = 1
    # [smoothing]
    smoother: str = "none"
    # [wavelet]
    family: str = "daubechies-4"
    levels: int = 3
    transform: str = "dwt"
    # [density]
    resolution: int = 6
    denoise_levels: int = 0
    # [dimension]
    components: int | str = "auto"
    lags: int = 2
    n_boot: int = 500
    alpha: float = 0.05
    block_length: int = 1
    # [mddm]
    mddm_subbands: str = "all"
    # [mixture]
    mixture_subbands: str = "coarse"
    valley_threshold: float = 0.5
    # [kriging]
    kriging_n_bins: int = 15
    kriging_max_lag: float | None = None
    kriging_taper_range: float | None = None
    kriging_subsample: int = 20000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(key, message):
            raise ConfigError(f"invalid value for '{key}': {message}")

        if self.input_format not in ("rts1", "ascii-matrix-dir"):
            fail("input.format", f"{self.input_format!r} is not 'rts1' or 'ascii-matrix-dir'")
        if self.log_offset is not None and self.log_offset < 0:
            fail("input.log_offset", "must be non-negative")
        if int(self.seed) != self.seed:
            fail("run.seed", "must be an integer")
        if self.workers < 1:
            fail("run.workers", "must be at least 1")
        if self.smoother not in ("none", "wavelet-threshold", "kriging"):
            fail("smoothing.method", f"{self.smoother!r} is not 'none', 'wavelet-threshold' or 'kriging'")
        if self.family not in ("haar", "daubechies-4", "daubechies-8"):
            fail("wavelet.family", f"unknown family {self.family!r}")
        if self.levels < 1:
            fail("wavelet.levels", "must be a positive integer")
        if self.transform not in ("dwt", "swt"):
            fail("wavelet.transform", f"{self.transform!r} is not 'dwt' or 'swt'")
        if self.resolution < 1:
            fail("density.resolution", "must be a positive integer")
        if self.denoise_levels < 0:
            fail("density.denoise_levels", "must be non-negative")
        if self.denoise_levels and self.denoise_levels >= self.resolution:
            fail("density.denoise_levels", "must be smaller than density.resolution")
        if self.components != "auto":
            if int(self.components) != self.components or int(self.components) < 0:
                fail("dimension.components", "must be 'auto' or a non-negative integer")
            self.components = int(self.components)
        if self.lags < 1:
            fail("dimension.lags", "must be a positive integer")
        if self.n_boot < 100:
            fail("dimension.bootstrap", "must be at least 100")
        if not 0.0 < self.alpha < 1.0:
            fail("dimension.alpha", "must lie strictly between 0 and 1")
        if self.block_length < 1:
            fail("dimension.block_length", "must be a positive integer")
        if self.mddm_subbands not in ("all", "coarse", "details"):
            fail("mddm.subbands", f"{self.mddm_subbands!r} is not 'all', 'coarse' or 'details'")
        if self.mixture_subbands not in ("all", "coarse", "details"):
            fail("mixture.subbands", f"{self.mixture_subbands!r} is not 'all', 'coarse' or 'details'")
        if not 0.0 < self.valley_threshold < 1.0:
            fail("mixture.valley_threshold", "must lie strictly between 0 and 1")
        if self.kriging_n_bins < 3:
            fail("kriging.n_bins", "must be at least 3")
        if self.kriging_max_lag is not None and self.kriging_max_lag <= 0:
            fail("kriging.max_lag", "must be positive")
        if self.kriging_taper_range is not None and self.kriging_taper_range <= 0:
            fail("kriging.taper_range", "must be positive")
        if self.kriging_subsample < 1:
            fail("kriging.subsample", "must be a positive integer")

    def echo(self) -> dict:
        """Config as a nested dict for JSON reports.

        Execution-only settings (``run.workers``) are excluded: they may
        not change any numerical output, and reports must be byte-identical
        across parallelism settings.
        """
        return {
            "input": {
                "path": self.input_path,
                "format": self.input_format,
                "log_offset": self.log_offset,
            },
            "output": {"directory": self.output_dir},
            "run": {"seed": self.seed},
            "smoothing": {"method": self.smoother},
            "wavelet": {
                "family": self.family,
                "levels": self.levels,
                "transform": self.transform,
            },
            "density": {
                "resolution": self.resolution,
                "denoise_levels": self.denoise_levels,
            },
            "dimension": {
                "components": self.components,
                "lags": self.lags,
                "bootstrap": self.n_boot,
                "alpha": self.alpha,
                "block_length": self.block_length,
            },
            "mddm": {"subbands": self.mddm_subbands},
            "mixture": {
                "subbands": self.mixture_subbands,
                "valley_threshold": self.valley_threshold,
            },
            "kriging": {
                "n_bins": self.kriging_n_bins,
                "max_lag": self.kriging_max_lag,
                "taper_range": self.kriging_taper_range,
                "subsample": self.kriging_subsample,
            },
        }


# section -> key -> (attribute, parser)
def _opt(parser):
    return lambda raw: None if raw.strip() == "" else parser(raw)


def _subbands(raw: str) -> str:
    return raw.strip()


_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "input": {
        "path": ("input_path", str),
        "format": ("input_format", str.strip),
        "log_offset": ("log_offset", _opt(float)),
    },
    "output": {
        "directory": ("output_dir", str),
    },
    "run": {
        "seed": ("seed", int),
        "workers": ("workers", int),
    },
    "smoothing": {
        "method": ("smoother", str.strip),
    },
    "wavelet": {
        "family": ("family", str.strip),
        "levels": ("levels", int),
        "transform": ("transform", str.strip),
    },
    "density": {
        "resolution": ("resolution", int),
        "denoise_levels": ("denoise_levels", int),
    },
    "dimension": {
        "components": ("components", lambda raw: raw.strip() if raw.strip() == "auto" else int(raw)),
        "lags": ("lags", int),
        "bootstrap": ("n_boot", int),
        "alpha": ("alpha", float),
        "block_length": ("block_length", int),
    },
    "mddm": {
        "subbands": ("mddm_subbands", _subbands),
    },
    "mixture": {
        "subbands": ("mixture_subbands", _subbands),
        "valley_threshold": ("valley_threshold", float),
    },
    "kriging": {
        "n_bins": ("kriging_n_bins", int),
        "max_lag": ("kriging_max_lag", _opt(float)),
        "taper_range": ("kriging_taper_range", _opt(float)),
        "subsample": ("kriging_subsample", int),
    },
}


def load_config(path) -> PipelineConfig:
    """Parse and fully validate an INI config file.

    Raises
    ------
    ConfigError
        On unreadable files, unknown sections or keys, or invalid values.
        The message names the offending key.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section '{section}'")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key '{section}.{key}'")
            attr, parse = _SCHEMA[section][key]
            try:
                values[attr] = parse(raw)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"invalid value for '{section}.{key}': {raw!r}"
                ) from None
    try:
        return PipelineConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
