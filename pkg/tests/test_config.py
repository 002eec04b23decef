"""Config parsing, validation, and echo tests."""
import json

import pytest

from mddm.config import ConfigError, PipelineConfig, load_config

FULL_INI = """
[input]
path = series.rts
format = ascii-matrix-dir
log_offset = 0.5

[output]
directory = out

[run]
seed = 7
workers = 3

[smoothing]
method = kriging

[wavelet]
family = haar
levels = 2
transform = swt

[density]
resolution = 5
denoise_levels = 2

[dimension]
components = 4
lags = 3
bootstrap = 250
alpha = 0.1
block_length = 4

[mddm]
subbands = details

[mixture]
subbands = all
valley_threshold = 0.4

[kriging]
n_bins = 10
max_lag = 6.0
taper_range = 9.0
subsample = 5000
"""


def write(tmp_path, text):
    path = tmp_path / "config.ini"
    path.write_text(text)
    return path


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.input_path is None
    assert cfg.input_format == "rts1"
    assert cfg.log_offset is None
    assert cfg.output_dir == "."
    assert cfg.seed == 0
    assert cfg.workers == 1
    assert cfg.smoother == "none"
    assert cfg.family == "daubechies-4"
    assert cfg.levels == 3
    assert cfg.transform == "dwt"
    assert cfg.resolution == 6
    assert cfg.denoise_levels == 0
    assert cfg.components == "auto"
    assert cfg.lags == 2
    assert cfg.n_boot == 500
    assert cfg.alpha == 0.05
    assert cfg.block_length == 1
    assert cfg.mddm_subbands == "all"
    assert cfg.mixture_subbands == "coarse"
    assert cfg.valley_threshold == 0.5
    assert cfg.kriging_n_bins == 15
    assert cfg.kriging_max_lag is None
    assert cfg.kriging_taper_range is None
    assert cfg.kriging_subsample == 20000


def test_full_file_covers_every_key(tmp_path):
    cfg = load_config(write(tmp_path, FULL_INI))
    assert cfg.input_path == "series.rts"
    assert cfg.input_format == "ascii-matrix-dir"
    assert cfg.log_offset == 0.5
    assert cfg.output_dir == "out"
    assert cfg.seed == 7
    assert cfg.workers == 3
    assert cfg.smoother == "kriging"
    assert cfg.family == "haar"
    assert cfg.levels == 2
    assert cfg.transform == "swt"
    assert cfg.resolution == 5
    assert cfg.denoise_levels == 2
    assert cfg.components == 4
    assert cfg.lags == 3
    assert cfg.n_boot == 250
    assert cfg.alpha == 0.1
    assert cfg.block_length == 4
    assert cfg.mddm_subbands == "details"
    assert cfg.mixture_subbands == "all"
    assert cfg.valley_threshold == 0.4
    assert cfg.kriging_n_bins == 10
    assert cfg.kriging_max_lag == 6.0
    assert cfg.kriging_taper_range == 9.0
    assert cfg.kriging_subsample == 5000


def test_empty_optional_values_mean_none(tmp_path):
    cfg = load_config(write(tmp_path, "[kriging]\nmax_lag =\ntaper_range =\n"))
    assert cfg.kriging_max_lag is None
    assert cfg.kriging_taper_range is None


def test_unknown_section(tmp_path):
    with pytest.raises(ConfigError, match="unknown config section 'wavelets'"):
        load_config(write(tmp_path, "[wavelets]\nfamily = haar\n"))


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="unknown config key 'wavelet.familie'"):
        load_config(write(tmp_path, "[wavelet]\nfamilie = haar\n"))


def test_unparseable_value_names_the_key(tmp_path):
    with pytest.raises(ConfigError, match="invalid value for 'wavelet.levels'"):
        load_config(write(tmp_path, "[wavelet]\nlevels = three\n"))
    with pytest.raises(ConfigError, match="invalid value for 'run.seed'"):
        load_config(write(tmp_path, "[run]\nseed = 1.5\n"))


@pytest.mark.parametrize(
    "text, key",
    [
        ("[wavelet]\nfamily = sym4\n", "wavelet.family"),
        ("[wavelet]\nlevels = 0\n", "wavelet.levels"),
        ("[wavelet]\ntransform = packet\n", "wavelet.transform"),
        ("[input]\nformat = tiff\n", "input.format"),
        ("[input]\nlog_offset = -1\n", "input.log_offset"),
        ("[run]\nworkers = 0\n", "run.workers"),
        ("[smoothing]\nmethod = median\n", "smoothing.method"),
        ("[density]\nresolution = 0\n", "density.resolution"),
        ("[density]\ndenoise_levels = -1\n", "density.denoise_levels"),
        ("[density]\nresolution = 4\ndenoise_levels = 4\n", "density.denoise_levels"),
        ("[dimension]\ncomponents = -1\n", "dimension.components"),
        ("[dimension]\nlags = 0\n", "dimension.lags"),
        ("[dimension]\nbootstrap = 99\n", "dimension.bootstrap"),
        ("[dimension]\nalpha = 1.5\n", "dimension.alpha"),
        ("[dimension]\nblock_length = 0\n", "dimension.block_length"),
        ("[mddm]\nsubbands = fine\n", "mddm.subbands"),
        ("[mixture]\nsubbands = fine\n", "mixture.subbands"),
        ("[mixture]\nvalley_threshold = 0\n", "mixture.valley_threshold"),
        ("[kriging]\nn_bins = 2\n", "kriging.n_bins"),
        ("[kriging]\nmax_lag = -2\n", "kriging.max_lag"),
        ("[kriging]\ntaper_range = 0\n", "kriging.taper_range"),
        ("[kriging]\nsubsample = 0\n", "kriging.subsample"),
    ],
)
def test_invalid_values_name_section_and_key(tmp_path, text, key):
    with pytest.raises(ConfigError, match=f"invalid value for '{key}'"):
        load_config(write(tmp_path, text))


def test_components_accepts_auto_and_integers(tmp_path):
    assert load_config(write(tmp_path, "[dimension]\ncomponents = auto\n")).components == "auto"
    assert load_config(write(tmp_path, "[dimension]\ncomponents = 0\n")).components == 0
    with pytest.raises(ConfigError, match="invalid value for 'dimension.components'"):
        load_config(write(tmp_path, "[dimension]\ncomponents = some\n"))


def test_malformed_file(tmp_path):
    with pytest.raises(ConfigError, match="malformed config file"):
        load_config(write(tmp_path, "family = haar\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config file"):
        load_config(tmp_path / "nope.ini")


def test_echo_excludes_workers(tmp_path):
    cfg = load_config(write(tmp_path, FULL_INI))
    echo = cfg.echo()
    assert "workers" not in echo["run"]
    assert echo["run"] == {"seed": 7}
    assert echo["input"]["path"] == "series.rts"
    assert echo["output"]["directory"] == "out"
    assert echo["dimension"]["bootstrap"] == 250
    # The echo must be JSON-serializable as-is.
    json.dumps(echo, sort_keys=True)


def test_echo_is_workers_invariant(tmp_path):
    one = load_config(write(tmp_path, "[run]\nworkers = 1\n")).echo()
    four = load_config(write(tmp_path, "[run]\nworkers = 4\n")).echo()
    assert one == four
