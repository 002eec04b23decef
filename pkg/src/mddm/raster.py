"""Raster time-series container and portable I/O.

Two on-disk formats are supported:

* ``rts1`` — a little-endian binary stack: magic bytes ``RTS1``, then three
  u32 fields (image count, rows, cols), then ``M * rows * cols`` float32
  values, image-major then row-major.
* ``ascii-matrix-dir`` — a directory holding one whitespace-delimited
  matrix per file; lexicographic filename order defines time order.
"""
from __future__ import annotations

import os
import struct

import numpy as np

__all__ = ["RasterSeries", "load_series", "save_series", "log_transform"]

_MAGIC = b"RTS1"
_HEADER = struct.Struct("<4sIII")


class RasterSeries:
    """An ordered stack of equally sized raster images.

    Parameters
    ----------
    images : array-like, shape (n_images, rows, cols)
        Pixel values; stored as float64.
    timestamps : sequence, optional
        Monotone-increasing labels, one per image.  Purely descriptive —
        all algorithms treat images as equally spaced.
    pixel_spacing : tuple of float, default (1.0, 1.0)
        Spatial units per pixel, (dx, dy).
    """

    def __init__(self, images, timestamps=None, pixel_spacing=(1.0, 1.0)):
        arr = np.asarray(images, dtype=float)
        if arr.ndim != 3:
            raise ValueError(
                f"images must have shape (n_images, rows, cols), got {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"empty raster series of shape {arr.shape}")
        if timestamps is not None:
            timestamps = tuple(timestamps)
            if len(timestamps) != arr.shape[0]:
                raise ValueError(
                    f"{len(timestamps)} timestamps for {arr.shape[0]} images"
                )
            if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
                raise ValueError("timestamps must be strictly increasing")
        dx, dy = float(pixel_spacing[0]), float(pixel_spacing[1])
        if dx <= 0 or dy <= 0:
            raise ValueError(f"pixel spacing must be positive, got {pixel_spacing}")
        arr = arr.copy()
        arr.setflags(write=False)
        self.images = arr
        self.timestamps = timestamps
        self.pixel_spacing = (dx, dy)

    @property
    def n_images(self) -> int:
        return self.images.shape[0]

    @property
    def rows(self) -> int:
        return self.images.shape[1]

    @property
    def cols(self) -> int:
        return self.images.shape[2]

    def __len__(self) -> int:
        return self.n_images

    def __getitem__(self, m: int) -> np.ndarray:
        return self.images[m]

    def __repr__(self) -> str:
        return (
            f"RasterSeries(n_images={self.n_images}, rows={self.rows}, "
            f"cols={self.cols})"
        )

    def with_images(self, images) -> "RasterSeries":
        """Return a copy of this series carrying new pixel values."""
        return RasterSeries(images, self.timestamps, self.pixel_spacing)


def load_series(path, format: str = "rts1") -> RasterSeries:
    """Load a raster series from disk.

    Parameters
    ----------
    path : str or os.PathLike
        File (``rts1``) or directory (``ascii-matrix-dir``).
    format : {"rts1", "ascii-matrix-dir"}

    Returns
    -------
    RasterSeries
        Validated series with at least two images.
    """
    if format == "rts1":
        series = _load_rts1(path)
    elif format == "ascii-matrix-dir":
        series = _load_ascii_dir(path)
    else:
        raise ValueError(f"unknown format {format!r}; expected 'rts1' or 'ascii-matrix-dir'")
    if series.n_images < 2:
        raise ValueError(
            f"series holds {series.n_images} image(s); at least 2 are required"
        )
    return series


def _load_rts1(path) -> RasterSeries:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("malformed header: file shorter than the RTS1 header")
        magic, n_images, rows, cols = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"malformed header: bad magic {magic!r}, expected {_MAGIC!r}")
        if n_images == 0 or rows == 0 or cols == 0:
            raise ValueError(
                f"malformed header: zero dimension (M={n_images}, rows={rows}, cols={cols})"
            )
        payload = fh.read()
    expected = n_images * rows * cols
    data = np.frombuffer(payload, dtype="<f4")
    if data.size < expected:
        raise ValueError(
            f"truncated payload: expected {expected} float32 values, found {data.size}"
        )
    if data.size > expected:
        raise ValueError(
            f"trailing bytes: expected {expected} float32 values, found {data.size}"
        )
    return RasterSeries(data.reshape(n_images, rows, cols).astype(float))


def _load_ascii_dir(path) -> RasterSeries:
    names = sorted(
        entry for entry in os.listdir(path)
        if os.path.isfile(os.path.join(path, entry))
    )
    if not names:
        raise ValueError(f"no matrix files found in {os.fspath(path)!r}")
    grids = []
    shape = None
    for name in names:
        grid = np.atleast_2d(np.loadtxt(os.path.join(path, name), dtype=float))
        if shape is None:
            shape = grid.shape
        elif grid.shape != shape:
            raise ValueError(
                f"inconsistent grid sizes: {name!r} is {grid.shape}, expected {shape}"
            )
        grids.append(grid)
    return RasterSeries(np.stack(grids))


def save_series(series: RasterSeries, path) -> None:
    """Write a series in the RTS1 binary format (values stored as float32)."""
    header = _HEADER.pack(_MAGIC, series.n_images, series.rows, series.cols)
    payload = series.images.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def log_transform(series: RasterSeries, offset: float = 0.0) -> RasterSeries:
    """Replace every pixel v by ln(v + offset).

    Turns multiplicative noise into additive noise.  Fails if any shifted
    pixel is non-positive — silent clamping would corrupt the downstream
    density estimates.
    """
    if offset < 0:
        raise ValueError(f"offset must be non-negative, got {offset}")
    shifted = series.images + offset
    bad = shifted <= 0
    if bad.any():
        m, i, j = (int(v) for v in np.argwhere(bad)[0])
        raise ValueError(
            f"log transform undefined: pixel + offset <= 0 first at image {m}, row {i}, col {j} "
            f"(value {series.images[m, i, j]!r}, offset {offset!r})"
        )
    return series.with_images(np.log(shifted))
