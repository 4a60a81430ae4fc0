"""Measurement corruption models: Gaussian, Poisson, speckle, pupil location error.

Every model is deterministic given its seed (numpy PCG64 stream) and
preserves non-negativity of the intensity measurements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from fpmkit.errors import ConfigError
from fpmkit.geometry import IlluminationSource, SystemGeometry, _pixel_offsets_in_bounds

log = logging.getLogger(__name__)

NOISE_KINDS = ("none", "gaussian", "poisson", "speckle")


@dataclass(frozen=True)
class NoiseSpec:
    """One intensity corruption model plus its seed.

    ``gaussian_std_ratio`` is the std of the additive noise divided by the
    maximum of the clean measurements. ``poisson_peak_photons`` is the photon
    count assigned to the brightest clean pixel. ``speckle_amplitude`` is the
    half-width of the uniform multiplicative fluctuation.
    """

    kind: str = "none"
    gaussian_std_ratio: float = 0.0
    poisson_peak_photons: float = 1e5
    speckle_amplitude: float = 0.3
    seed: int = 0
    clamp_negative: bool = True

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.gaussian_std_ratio < 0:
            raise ConfigError("gaussian_std_ratio must be >= 0")
        if self.poisson_peak_photons <= 0:
            raise ConfigError("poisson_peak_photons must be positive")
        if not 0.0 <= self.speckle_amplitude < 1.0:
            raise ConfigError("speckle_amplitude must be in [0, 1)")


@dataclass(frozen=True)
class PupilErrorSpec:
    """Gaussian perturbation of the per-LED illumination wave vectors (rad/meter)."""

    wavevector_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.wavevector_std < 0:
            raise ConfigError("wavevector_std must be >= 0")


def add_gaussian(b: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Additive white Gaussian noise with std = ratio * max(b), clamped at 0."""
    if spec.gaussian_std_ratio == 0.0:
        return b.copy()
    rng = np.random.default_rng(spec.seed)
    std = spec.gaussian_std_ratio * float(b.max())
    c = b + rng.normal(0.0, std, size=b.shape)
    return np.maximum(c, 0.0) if spec.clamp_negative else c


def add_poisson(b: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Poisson shot noise at a photon budget of ``poisson_peak_photons`` at peak."""
    peak = float(b.max())
    if peak == 0.0:
        return b.copy()
    rng = np.random.default_rng(spec.seed)
    s = spec.poisson_peak_photons / peak
    return rng.poisson(s * b).astype(np.float64) / s


def add_speckle(b: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Multiplicative speckle: c = b * (1 + n), n ~ Uniform(-a, a)."""
    if spec.speckle_amplitude == 0.0:
        return b.copy()
    rng = np.random.default_rng(spec.seed)
    a = spec.speckle_amplitude
    return b * (1.0 + rng.uniform(-a, a, size=b.shape))


def apply_noise(b: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Dispatch on ``spec.kind``; ``none`` is the exact identity."""
    if spec.kind == "none":
        return b.copy()
    if spec.kind == "gaussian":
        return add_gaussian(b, spec)
    if spec.kind == "poisson":
        return add_poisson(b, spec)
    return add_speckle(b, spec)


def perturb_wave_vectors(
    src: IlluminationSource, spec: PupilErrorSpec, geom: SystemGeometry
) -> IlluminationSource:
    """Perturbed illumination geometry realizing pupil location error.

    Adds i.i.d. Gaussian noise to each LED's (k_row, k_col) offset and
    re-rounds the pixel offsets. Offsets whose pupil window would leave the
    HR grid are clamped to the admissible range (with a warning). Intended
    for measurement synthesis only; reconstruction keeps the nominal source.
    """
    if spec.wavevector_std == 0.0:
        return src
    rng = np.random.default_rng(spec.seed)
    k = src.k_offsets + rng.normal(0.0, spec.wavevector_std, size=src.k_offsets.shape)
    px = np.round(k / geom.delta_k).astype(np.int64)
    ok = _pixel_offsets_in_bounds(px, geom)
    if not np.all(ok):
        half_slack = geom.hr_size // 2 - geom.lr_size // 2
        log.warning(
            "clamped %d perturbed LED offsets to +/-%d pixels",
            int(np.sum(~ok)),
            half_slack,
        )
        px = np.clip(px, -half_slack, half_slack)
    return IlluminationSource(k_offsets=k, pixel_offsets=px, center_index=src.center_index)
