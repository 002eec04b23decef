"""Command-line entry points.

Every analysis command reads one INI config file (see :mod:`mddm.config`)
and writes its artifacts into the configured output directory:

====================  =====================================================
``mddm``              ``mddm.csv`` (divergence matrix), ``scores.json``
``predict``           ``forecast_distances.csv``
``mixture``           ``mixture.csv`` (t,rho curve), ``valleys.json``
``variogram``         ``variogram.json``
``smooth``            ``smoothed.rts``, ``smooth.json``
``synth``             a fixture series at ``--out`` (flags only, no config)
====================  =====================================================

Matrices are written as headerless CSV, curves with a header row; float
formatting is ``%.17g`` so outputs round-trip exactly.  JSON reports carry
the tool version and the full config echo.  Exit codes: 0 on success, 2
for configuration problems, 1 when a pipeline stage fails (the message
names the stage).
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .kriging import VariogramModel, empirical_variogram, fit_variogram, krige_smooth
from .mixture import estimate_mixture, find_valleys, mean_mixture
from .pipeline import change_scores, compute_mddm, forecast_distances, prepare_groups
from .raster import load_series, save_series
from . import synth


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        raise StageError(f"stage '{name}' failed: {exc}") from exc


def _load_config(path) -> PipelineConfig:
    cfg = load_config(path)
    if cfg.input_path is None:
        raise ConfigError("missing required key 'input.path'")
    return cfg


def _read_series(cfg: PipelineConfig):
    with _stage("load-series"):
        return load_series(cfg.input_path, cfg.input_format)


def _output_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_matrix(path: Path, values: np.ndarray, header: str = "") -> None:
    np.savetxt(path, np.atleast_2d(values), delimiter=",", fmt="%.17g",
               header=header, comments="")


def _write_json(path: Path, cfg: PipelineConfig, payload: dict) -> None:
    body = {"version": __version__, "config": cfg.echo()}
    body.update(payload)
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_mddm(args) -> int:
    cfg = _load_config(args.config)
    series = _read_series(cfg)
    with _stage("mddm"):
        result = compute_mddm(series, cfg)
        scores = change_scores(result)
    out = _output_dir(cfg)
    with _stage("write-outputs"):
        _write_matrix(out / "mddm.csv", result.matrix)
        argmax = int(np.argmax(scores))
        _write_json(out / "scores.json", cfg, {
            "scores": scores.tolist(),
            "argmax": argmax,
            "change_point": argmax if float(scores.max()) > 0.0 else None,
        })
    print(f"wrote {out / 'mddm.csv'}, {out / 'scores.json'}")
    return 0


def cmd_predict(args) -> int:
    if args.horizon < 1:
        raise ConfigError(f"invalid value for 'horizon': must be at least 1, got {args.horizon}")
    cfg = _load_config(args.config)
    series = _read_series(cfg)
    with _stage("forecast"):
        distances = forecast_distances(series, args.horizon, cfg)
    out = _output_dir(cfg)
    with _stage("write-outputs"):
        _write_matrix(out / "forecast_distances.csv", distances)
    print(f"wrote {out / 'forecast_distances.csv'}")
    return 0


def cmd_mixture(args) -> int:
    cfg = _load_config(args.config)
    series = _read_series(cfg)
    with _stage("mixture"):
        groups = prepare_groups(series, cfg, cfg.mixture_subbands)
        results = []
        detail = []
        for name, group in groups.items():
            for k in range(group.model.d_hat):
                loadings = group.model.loadings[:, k]
                if np.all(loadings == loadings[0]):
                    continue
                res = estimate_mixture(loadings, cfg.family, cfg.valley_threshold)
                results.append(res)
                detail.append({
                    "group": name, "component": k + 1,
                    "mu_u": res.mu_u, "mu_v": res.mu_v,
                    "valleys": res.valleys,
                })
        if results:
            rho = mean_mixture(results)
            grid = results[0].grid
        else:
            # Every loading series is constant: nothing ever leaves the
            # unchanged population, so the mixture function is identically 1.
            n = 1 << int(np.ceil(np.log2(series.n_images)))
            rho = np.ones(n)
            grid = (np.arange(n) + 0.5) / n
        valleys = find_valleys(rho, cfg.valley_threshold)
    out = _output_dir(cfg)
    with _stage("write-outputs"):
        _write_matrix(out / "mixture.csv", np.column_stack([grid, rho]),
                      header="t,rho")
        _write_json(out / "valleys.json", cfg, {
            "n": int(rho.size),
            "valleys": valleys,
            "series": detail,
        })
    print(f"wrote {out / 'mixture.csv'}, {out / 'valleys.json'}")
    return 0


def _fit_spatial_model(cfg: PipelineConfig, series):
    with _stage("variogram"):
        ev = empirical_variogram(
            series, max_lag=cfg.kriging_max_lag, n_bins=cfg.kriging_n_bins,
            subsample=cfg.kriging_subsample, seed=cfg.seed,
        )
        model = fit_variogram(ev)
        if cfg.kriging_taper_range is not None:
            model = VariogramModel(model.tau2, model.sigma2, model.theta,
                                   cfg.kriging_taper_range, model.contrast)
    return ev, model


def cmd_variogram(args) -> int:
    cfg = _load_config(args.config)
    series = _read_series(cfg)
    ev, model = _fit_spatial_model(cfg, series)
    out = _output_dir(cfg)
    with _stage("write-outputs"):
        _write_json(out / "variogram.json", cfg, {
            "tau2": model.tau2,
            "sigma2": model.sigma2,
            "theta": model.theta,
            "taper_range": model.taper_range,
            "contrast_value": model.contrast,
            "bins": [
                {"lag": float(h), "gamma": float(g), "count": int(c)}
                for h, g, c in zip(ev.bin_centers, ev.gamma_hat, ev.counts)
            ],
        })
    print(f"wrote {out / 'variogram.json'}")
    return 0


def cmd_smooth(args) -> int:
    cfg = _load_config(args.config)
    series = _read_series(cfg)
    _, model = _fit_spatial_model(cfg, series)
    with _stage("kriging"):
        smoothed = krige_smooth(series, model)
    out = _output_dir(cfg)
    with _stage("write-outputs"):
        save_series(smoothed, out / "smoothed.rts")
        _write_json(out / "smooth.json", cfg, {
            "tau2": model.tau2,
            "sigma2": model.sigma2,
            "theta": model.theta,
            "taper_range": model.taper_range,
        })
    print(f"wrote {out / 'smoothed.rts'}, {out / 'smooth.json'}")
    return 0


def cmd_synth(args) -> int:
    shape = (args.rows, args.cols)
    with _stage("synth"):
        if args.kind == "variance-step":
            series = synth.variance_step_series(
                args.n_images, shape, args.change_index, args.factor, args.seed)
        elif args.kind == "outlier":
            series = synth.outlier_image_series(
                args.n_images, shape, args.outlier_index, args.factor, args.seed)
        elif args.kind == "repeated":
            series = synth.repeated_image_series(args.n_images, shape, args.seed)
        elif args.kind == "drift":
            series = synth.variance_drift_series(
                args.n_images, shape, args.start, args.step, args.seed)
        else:  # gaussian-field
            _, series = synth.gaussian_field_series(
                args.n_images, shape, args.tau2, args.sigma2, args.theta, args.seed)
        save_series(series, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mddm",
        description="Change detection in raster image time series via "
                    "wavelet-density divergence matrices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("-c", "--config", required=True, help="INI config file")
        return p

    p = with_config(sub.add_parser("mddm", help="divergence matrix and change scores"))
    p.set_defaults(func=cmd_mddm)

    p = with_config(sub.add_parser("predict", help="observed-vs-forecast density distances"))
    p.add_argument("--horizon", type=int, required=True, help="forecast steps ahead (>= 1)")
    p.set_defaults(func=cmd_predict)

    p = with_config(sub.add_parser("mixture", help="mixture function of the loading series"))
    p.set_defaults(func=cmd_mixture)

    p = with_config(sub.add_parser("variogram", help="fit the spatial variogram model"))
    p.set_defaults(func=cmd_variogram)

    p = with_config(sub.add_parser("smooth", help="kriging-smooth the series"))
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("synth", help="generate a synthetic fixture series")
    p.add_argument("--kind", required=True,
                   choices=["variance-step", "outlier", "repeated", "drift", "gaussian-field"])
    p.add_argument("--out", required=True, help="output .rts path")
    p.add_argument("--n-images", type=int, default=8)
    p.add_argument("--rows", type=int, default=32)
    p.add_argument("--cols", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--change-index", type=int, default=4, help="variance-step only")
    p.add_argument("--outlier-index", type=int, default=5, help="outlier only")
    p.add_argument("--factor", type=float, default=2.0, help="variance multiplier")
    p.add_argument("--start", type=float, default=1.0, help="drift only")
    p.add_argument("--step", type=float, default=0.08, help="drift only")
    p.add_argument("--tau2", type=float, default=0.05, help="gaussian-field only")
    p.add_argument("--sigma2", type=float, default=1.0, help="gaussian-field only")
    p.add_argument("--theta", type=float, default=4.0, help="gaussian-field only")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
