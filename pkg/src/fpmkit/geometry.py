"""FPM system geometry: LED wave vectors, pupil construction, overlap checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpmkit.errors import ConfigError, GeometryError


@dataclass(frozen=True)
class SystemGeometry:
    """Physical description of the simulated FPM setup.

    Lengths are in meters. ``hr_size`` is the high-resolution grid side N,
    ``lr_size`` the low-resolution (captured image) side M. ``pixel_size``
    is the object-space pitch of the HR grid.
    """

    wavelength: float
    na_objective: float
    led_grid: int
    led_spacing: float
    led_height: float
    pixel_size: float
    hr_size: int
    lr_size: int

    def __post_init__(self):
        if not 0.0 < self.na_objective < 1.0:
            raise ConfigError(f"na_objective must be in (0, 1), got {self.na_objective}")
        for name in ("wavelength", "led_spacing", "led_height", "pixel_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.led_grid < 1 or self.led_grid % 2 == 0:
            raise ConfigError(f"led_grid must be a positive odd integer, got {self.led_grid}")
        if self.hr_size % 2 or self.lr_size % 2:
            raise ConfigError("hr_size and lr_size must be even")
        if not 0 < self.lr_size <= self.hr_size:
            raise ConfigError("lr_size must satisfy 0 < M <= N")
        if self.pupil_radius_px < 2.0:
            raise GeometryError(
                f"pupil radius {self.pupil_radius_px:.2f} px < 2; "
                "increase na_objective, hr_size or pixel_size"
            )

    @property
    def delta_k(self) -> float:
        """Spectral pixel pitch of the HR grid, rad/meter."""
        return 2.0 * np.pi / (self.hr_size * self.pixel_size)

    @property
    def k_magnitude(self) -> float:
        """Free-space wave number 2*pi/lambda."""
        return 2.0 * np.pi / self.wavelength

    @property
    def pupil_radius_px(self) -> float:
        """Objective cutoff NA*(2*pi/lambda) expressed in spectral pixels."""
        return self.na_objective * self.k_magnitude / (2.0 * np.pi / (self.hr_size * self.pixel_size))


@dataclass(frozen=True)
class IlluminationSource:
    """Per-LED illumination wave vectors and their pixel offsets on the HR spectral grid.

    ``k_offsets`` has shape (n_leds, 2) in rad/meter, ``pixel_offsets`` the
    rounded (row, col) spectral offsets, both ordered row-major over the LED
    grid. ``center_index`` is the normal-incidence LED.
    """

    k_offsets: np.ndarray
    pixel_offsets: np.ndarray
    center_index: int

    def __post_init__(self):
        object.__setattr__(self, "k_offsets", np.asarray(self.k_offsets, dtype=np.float64))
        object.__setattr__(self, "pixel_offsets", np.asarray(self.pixel_offsets, dtype=np.int64))
        if self.k_offsets.shape != self.pixel_offsets.shape or self.k_offsets.ndim != 2:
            raise ConfigError("k_offsets and pixel_offsets must both be (n_leds, 2)")

    @property
    def n_leds(self) -> int:
        return self.k_offsets.shape[0]


@dataclass(frozen=True)
class Pupil:
    """Complex aperture on the M x M spectral grid, plus its radius in pixels."""

    values: np.ndarray
    radius_px: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))
        if np.max(np.abs(self.values)) > 1.0 + 1e-12:
            raise ConfigError("pupil magnitude must not exceed 1")


def make_pupil(geom: SystemGeometry) -> Pupil:
    """Ideal binary pupil: 1 inside the objective NA disk, 0 outside."""
    m = geom.lr_size
    r = geom.pupil_radius_px
    rows = np.arange(m) - m // 2
    dist2 = rows[:, None] ** 2 + rows[None, :] ** 2
    disk = (dist2 <= r * r).astype(np.complex128)
    return Pupil(values=disk, radius_px=r)


def _pixel_offsets_in_bounds(pixel_offsets: np.ndarray, geom: SystemGeometry) -> np.ndarray:
    """Boolean per-LED mask: pupil window stays inside the HR grid."""
    half_slack = geom.hr_size // 2 - geom.lr_size // 2
    return np.all(np.abs(pixel_offsets) <= half_slack, axis=1)


def wave_vectors(geom: SystemGeometry) -> IlluminationSource:
    """Illumination wave-vector offsets for the full LED grid.

    For an LED at planar offset (x, y) from the optical axis at height h:
    sin(theta_x) = x / sqrt(x^2 + y^2 + h^2), and the spectral offset is
    (2*pi/lambda) * sin(theta), rounded to whole HR spectral pixels.
    """
    n = geom.led_grid
    half = n // 2
    idx = np.arange(-half, half + 1, dtype=np.float64) * geom.led_spacing
    yy, xx = np.meshgrid(idx, idx, indexing="ij")
    x = xx.ravel()
    y = yy.ravel()
    r = np.sqrt(x * x + y * y + geom.led_height**2)
    # rows of the spectral grid run along y, columns along x
    k_offsets = np.stack([geom.k_magnitude * y / r, geom.k_magnitude * x / r], axis=1)
    pixel_offsets = np.round(k_offsets / geom.delta_k).astype(np.int64)

    ok = _pixel_offsets_in_bounds(pixel_offsets, geom)
    if not np.all(ok):
        ring = np.maximum(np.abs(xx), np.abs(yy)).ravel() / geom.led_spacing
        max_ok_ring = int(ring[ok].max()) if np.any(ok) else -1
        first_bad = int(np.flatnonzero(~ok)[0])
        raise GeometryError(
            f"pupil window for LED {first_bad} (pixel offset "
            f"{tuple(pixel_offsets[first_bad])}) leaves the {geom.hr_size}^2 grid; "
            f"maximum admissible LED ring is {max_ok_ring}"
        )

    center_index = (n * n) // 2
    assert tuple(pixel_offsets[center_index]) == (0, 0)
    return IlluminationSource(
        k_offsets=k_offsets, pixel_offsets=pixel_offsets, center_index=center_index
    )


def adjacent_overlap_fraction(geom: SystemGeometry, src: IlluminationSource) -> float:
    """Pupil-disk area overlap between the center LED and its nearest neighbor.

    Fraction of the pupil disk area shared by two adjacent spectral windows;
    below ~0.5 the spectrum stitching becomes unreliable.
    """
    center = src.pixel_offsets[src.center_index].astype(np.float64)
    others = np.delete(src.k_offsets, src.center_index, axis=0) / geom.delta_k
    if others.size == 0:
        return 1.0
    d = float(np.min(np.linalg.norm(others - center, axis=1)))
    r = geom.pupil_radius_px
    if d >= 2.0 * r:
        return 0.0
    area = 2.0 * r * r * np.arccos(d / (2.0 * r)) - 0.5 * d * np.sqrt(4.0 * r * r - d * d)
    return float(area / (np.pi * r * r))


def coverage_mask(geom: SystemGeometry, src: IlluminationSource, pupil: Pupil) -> np.ndarray:
    """Boolean N x N mask of HR spectrum pixels touched by at least one pupil window."""
    n, m = geom.hr_size, geom.lr_size
    mask = np.zeros((n, n), dtype=bool)
    disk = np.abs(pupil.values) > 0
    for dr, dc in -src.pixel_offsets:
        r0 = n // 2 + dr - m // 2
        c0 = n // 2 + dc - m // 2
        mask[r0 : r0 + m, c0 : c0 + m] |= disk
    return mask
