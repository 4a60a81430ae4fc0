"""Complex 2D field arithmetic: orthonormal FFTs and centered window extraction.

Conventions used throughout the toolkit:

* fields and spectra are 2D ``complex128`` numpy arrays;
* ``fft2``/``ifft2`` are orthonormal (scale ``1/sqrt(rows*cols)`` in each
  direction), so they are unitary and energy preserving;
* spectra are stored in centered layout: zero frequency sits at pixel
  ``(rows // 2, cols // 2)``;
* grid sizes must be even, so the center pixel is unambiguous.
"""

from __future__ import annotations

import numpy as np

from fpmkit.errors import ConfigError, GeometryError


def _check_even_2d(a: np.ndarray, name: str) -> None:
    if a.ndim != 2:
        raise ConfigError(f"{name} must be 2D, got shape {a.shape}")
    if a.shape[0] % 2 or a.shape[1] % 2:
        raise ConfigError(f"{name} must have even sides, got shape {a.shape}")


def fft2(f: np.ndarray) -> np.ndarray:
    """Orthonormal 2D DFT of a spatial field, returned in centered layout."""
    _check_even_2d(f, "field")
    return np.fft.fftshift(np.fft.fft2(np.asarray(f, dtype=np.complex128), norm="ortho"))


def ifft2(F: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft2`: centered spectrum to spatial field."""
    _check_even_2d(F, "spectrum")
    return np.fft.ifft2(np.fft.ifftshift(np.asarray(F, dtype=np.complex128)), norm="ortho")


def _window_slices(n_rows: int, n_cols: int, offset: tuple[int, int], m: int):
    """Row/col slices of the m x m window centered at (center + offset)."""
    dr, dc = int(offset[0]), int(offset[1])
    r0 = n_rows // 2 + dr - m // 2
    c0 = n_cols // 2 + dc - m // 2
    if r0 < 0 or c0 < 0 or r0 + m > n_rows or c0 + m > n_cols:
        raise GeometryError(
            f"{m}x{m} window at offset ({dr}, {dc}) leaves the "
            f"{n_rows}x{n_cols} grid (rows {r0}:{r0 + m}, cols {c0}:{c0 + m})"
        )
    return slice(r0, r0 + m), slice(c0, c0 + m)


def extract_shifted(F: np.ndarray, offset: tuple[int, int], size: int) -> np.ndarray:
    """Copy the ``size x size`` sub-spectrum centered at (grid center + offset).

    Raises :class:`GeometryError` if the window does not fit.
    """
    _check_even_2d(F, "spectrum")
    if size % 2 or size <= 0:
        raise ConfigError(f"window size must be even and positive, got {size}")
    rs, cs = _window_slices(F.shape[0], F.shape[1], offset, size)
    return F[rs, cs].copy()


def embed_shifted(g: np.ndarray, offset: tuple[int, int], size: int) -> np.ndarray:
    """Adjoint of :func:`extract_shifted`: place ``g`` into a ``size x size`` zero grid."""
    _check_even_2d(g, "window")
    if g.shape[0] != g.shape[1]:
        raise ConfigError(f"window must be square, got shape {g.shape}")
    out = np.zeros((size, size), dtype=np.complex128)
    rs, cs = _window_slices(size, size, offset, g.shape[0])
    out[rs, cs] = g
    return out
