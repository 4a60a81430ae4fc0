"""On-disk dataset and result formats.

A synthesized dataset directory contains:

* ``geometry.meta``  -- text ``key = value`` lines (geometry, seeds, sample
  normalization, noise settings);
* ``b.raw`` / ``c.raw`` -- little-endian float64 intensity stacks with the
  ASCII header line ``FPMRAW1 <rows> <cols> <leds>``;
* ``ground_truth.cfld`` -- little-endian interleaved re/im float64 HR
  spectrum with the header line ``FPMCFLD1 <rows> <cols>``;
* 16-bit PNG previews of the ground-truth amplitude and phase.

Reconstruction results reuse ``.cfld`` for recovered fields and write a
``metrics.csv`` trace (iteration, objective, re, xi_size).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from fpmkit.errors import ConfigError

RAW_MAGIC = "FPMRAW1"
CFLD_MAGIC = "FPMCFLD1"


def write_raw_stack(path: Path, stack: np.ndarray) -> None:
    """Write a (leds, rows, cols) real stack as FPMRAW1."""
    stack = np.ascontiguousarray(stack, dtype="<f8")
    if stack.ndim != 3:
        raise ConfigError(f"expected a 3D stack, got shape {stack.shape}")
    leds, rows, cols = stack.shape
    with open(path, "wb") as f:
        f.write(f"{RAW_MAGIC} {rows} {cols} {leds}\n".encode("ascii"))
        f.write(stack.tobytes())


def read_raw_stack(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").split()
        if len(header) != 4 or header[0] != RAW_MAGIC:
            raise ConfigError(f"{path}: not a {RAW_MAGIC} file")
        rows, cols, leds = (int(x) for x in header[1:])
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != leds * rows * cols:
        raise ConfigError(f"{path}: payload size mismatch")
    return data.reshape(leds, rows, cols).copy()


def write_complex_field(path: Path, field: np.ndarray) -> None:
    """Write a 2D complex field as FPMCFLD1 (interleaved re/im float64)."""
    field = np.asarray(field, dtype=np.complex128)
    if field.ndim != 2:
        raise ConfigError(f"expected a 2D field, got shape {field.shape}")
    rows, cols = field.shape
    interleaved = np.empty((rows, cols, 2), dtype="<f8")
    interleaved[..., 0] = field.real
    interleaved[..., 1] = field.imag
    with open(path, "wb") as f:
        f.write(f"{CFLD_MAGIC} {rows} {cols}\n".encode("ascii"))
        f.write(interleaved.tobytes())


def read_complex_field(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").split()
        if len(header) != 3 or header[0] != CFLD_MAGIC:
            raise ConfigError(f"{path}: not a {CFLD_MAGIC} file")
        rows, cols = (int(x) for x in header[1:])
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != rows * cols * 2:
        raise ConfigError(f"{path}: payload size mismatch")
    data = data.reshape(rows, cols, 2)
    return (data[..., 0] + 1j * data[..., 1]).copy()


def write_meta(path: Path, items: dict) -> None:
    """Flat ``key = value`` text file; floats via repr so round-trips are exact."""
    lines = []
    for key, value in items.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def read_meta(path: Path) -> dict[str, str]:
    items: dict[str, str] = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        items[key.strip()] = value.strip()
    return items


def write_preview(path: Path, image: np.ndarray) -> None:
    """Save a real 2D array as a 16-bit grayscale PNG (min-max normalized)."""
    img = np.asarray(image, dtype=np.float64)
    lo, hi = float(img.min()), float(img.max())
    scale = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    Image.fromarray((scale * 65535.0).round().astype(np.uint16)).save(path)


def write_metrics_csv(path: Path, iterations, objective, re_trace, xi_size) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "objective", "re", "xi_size"])
        for it, obj, re, xi in zip(iterations, objective, re_trace, xi_size):
            writer.writerow([int(it), repr(float(obj)), repr(float(re)), int(xi)])
