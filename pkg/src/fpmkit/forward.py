"""Forward and adjoint FPM imaging operator in implicit (FFT + window) form.

The measurement matrix is never materialized: each LED's low-resolution
field is ``ifft2(pupil * window(Z, -offset))`` where the window is the M x M
sub-block of the HR spectrum centered at (grid center - pixel offset). The
adjoint embeds ``conj(pupil) * fft2(g)`` back at the same location.

Per-LED entry points (:func:`apply_field`, :func:`adjoint_field`,
:func:`forward_one`) operate on one LED; the batched ``*_all`` variants
process every LED at once and are what the solvers use.
"""

from __future__ import annotations

import numpy as np

from fpmkit.errors import ConfigError
from fpmkit.fields import _window_slices, embed_shifted, extract_shifted, fft2, ifft2
from fpmkit.geometry import IlluminationSource, Pupil


def _check_square(a: np.ndarray, size: int, name: str) -> None:
    if a.shape != (size, size):
        raise ConfigError(f"{name} must be {size}x{size}, got {a.shape}")


def _window_indices(src: IlluminationSource, n: int, m: int):
    """(L, M) row and column gather indices for every LED's spectral window."""
    offs = -src.pixel_offsets  # window center = grid center - LED offset
    base = np.arange(m) - m // 2 + n // 2
    rows = offs[:, 0:1] + base[None, :]
    cols = offs[:, 1:2] + base[None, :]
    if rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n:
        # per-LED diagnostics come from the scalar path
        for led in range(src.n_leds):
            _window_slices(n, n, tuple(offs[led]), m)
    return rows, cols


def _fft2_batch(x: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft2(x, axes=(-2, -1), norm="ortho"), axes=(-2, -1))


def _ifft2_batch(x: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.fft.ifftshift(x, axes=(-2, -1)), axes=(-2, -1), norm="ortho")


def apply_field(
    Z: np.ndarray, led: int, pupil: Pupil, src: IlluminationSource
) -> np.ndarray:
    """Low-resolution complex field produced by one LED."""
    m = pupil.values.shape[0]
    _check_square(Z, Z.shape[0], "spectrum")
    window = extract_shifted(Z, tuple(-src.pixel_offsets[led]), m)
    return ifft2(pupil.values * window)


def adjoint_field(
    g: np.ndarray, led: int, pupil: Pupil, src: IlluminationSource, hr_size: int
) -> np.ndarray:
    """Adjoint of :func:`apply_field`: embed the filtered spectrum of g into an N x N grid."""
    m = pupil.values.shape[0]
    _check_square(g, m, "low-resolution field")
    return embed_shifted(np.conj(pupil.values) * fft2(g), tuple(-src.pixel_offsets[led]), hr_size)


def forward_one(Z: np.ndarray, led: int, pupil: Pupil, src: IlluminationSource) -> np.ndarray:
    """Captured intensity image for one LED: |apply_field|^2 entrywise."""
    psi = apply_field(Z, led, pupil, src)
    return np.abs(psi) ** 2


def apply_all_fields(Z: np.ndarray, pupil: Pupil, src: IlluminationSource) -> np.ndarray:
    """Low-resolution fields for every LED, shape (n_leds, M, M)."""
    n = Z.shape[0]
    m = pupil.values.shape[0]
    _check_square(Z, n, "spectrum")
    rows, cols = _window_indices(src, n, m)
    windows = Z[rows[:, :, None], cols[:, None, :]]
    return _ifft2_batch(pupil.values[None] * windows)


def adjoint_all_fields(
    g: np.ndarray, pupil: Pupil, src: IlluminationSource, hr_size: int
) -> np.ndarray:
    """Sum of per-LED adjoints of a (n_leds, M, M) stack, as one N x N spectrum.

    Accumulation uses a single ``np.add.at`` scatter, which is deterministic
    for fixed inputs (bit-reproducible runs).
    """
    m = pupil.values.shape[0]
    if g.shape != (src.n_leds, m, m):
        raise ConfigError(f"expected stack of shape {(src.n_leds, m, m)}, got {g.shape}")
    rows, cols = _window_indices(src, hr_size, m)
    spectra = np.conj(pupil.values)[None] * _fft2_batch(g)
    out = np.zeros((hr_size, hr_size), dtype=np.complex128)
    np.add.at(out, (rows[:, :, None], cols[:, None, :]), spectra)
    return out


def forward_all(Z: np.ndarray, pupil: Pupil, src: IlluminationSource) -> np.ndarray:
    """Ideal measurement set b: per-LED intensity images, shape (n_leds, M, M)."""
    return np.abs(apply_all_fields(Z, pupil, src)) ** 2
