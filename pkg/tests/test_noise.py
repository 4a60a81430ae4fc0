"""Noise model statistics, determinism and the wave-vector perturbation."""

import numpy as np
import pytest

from fpmkit.errors import ConfigError
from fpmkit.geometry import SystemGeometry, wave_vectors
from fpmkit.noise import (
    NoiseSpec,
    PupilErrorSpec,
    add_gaussian,
    add_poisson,
    add_speckle,
    apply_noise,
    perturb_wave_vectors,
)


@pytest.fixture()
def bright_field(rng):
    # strictly positive intensities with a known maximum
    b = rng.uniform(1.0, 9.0, size=(4, 500, 500))
    b.flat[0] = 10.0
    return b


def test_none_is_identity_copy(bright_field):
    c = apply_noise(bright_field, NoiseSpec(kind="none"))
    np.testing.assert_array_equal(c, bright_field)
    assert c is not bright_field


def test_gaussian_statistics(bright_field):
    spec = NoiseSpec(kind="gaussian", gaussian_std_ratio=2e-3, seed=7, clamp_negative=False)
    c = add_gaussian(bright_field, spec)
    noise = c - bright_field
    # std is the ratio times the max of b, within 2% over 1e6 samples
    assert noise.std() == pytest.approx(2e-3 * 10.0, rel=0.02)
    assert abs(noise.mean()) < 3 * noise.std() / np.sqrt(noise.size)


def test_gaussian_clamps_negative():
    b = np.full((2, 100, 100), 1e-6)
    spec = NoiseSpec(kind="gaussian", gaussian_std_ratio=0.5, seed=1)
    c = add_gaussian(b, spec)
    assert np.all(c >= 0.0)
    unclamped = add_gaussian(b, NoiseSpec(kind="gaussian", gaussian_std_ratio=0.5, seed=1, clamp_negative=False))
    assert np.any(unclamped < 0.0)


def test_gaussian_zero_ratio_is_identity(bright_field):
    c = add_gaussian(bright_field, NoiseSpec(kind="gaussian", gaussian_std_ratio=0.0))
    np.testing.assert_array_equal(c, bright_field)


def test_poisson_mean_and_variance(bright_field):
    peak = 1e4
    spec = NoiseSpec(kind="poisson", poisson_peak_photons=peak, seed=3)
    c = add_poisson(bright_field, spec)
    # photon scaling: counts k ~ Poisson(s*b), c = k/s with s = peak/max(b);
    # so E[c] = b and Var[c] = b/s
    s = peak / bright_field.max()
    err = c - bright_field
    assert abs(err.mean()) < 5e-3 * bright_field.mean()
    assert err.var() == pytest.approx(bright_field.mean() / s, rel=0.02)
    assert np.all(c >= 0)


def test_poisson_zero_input():
    b = np.zeros((1, 4, 4))
    np.testing.assert_array_equal(add_poisson(b, NoiseSpec(kind="poisson")), b)


def test_speckle_bounds_and_mean(bright_field):
    a = 0.3
    spec = NoiseSpec(kind="speckle", speckle_amplitude=a, seed=5)
    c = add_speckle(bright_field, spec)
    assert np.all(c >= bright_field * (1 - a) - 1e-12)
    assert np.all(c <= bright_field * (1 + a) + 1e-12)
    ratio = c / bright_field - 1.0
    assert abs(ratio.mean()) < 1e-3
    # uniform(-a, a) has variance a^2/3
    assert ratio.var() == pytest.approx(a * a / 3.0, rel=0.02)


def test_noise_is_deterministic_per_seed(bright_field):
    for kind in ("gaussian", "poisson", "speckle"):
        spec = NoiseSpec(kind=kind, gaussian_std_ratio=1e-2, seed=11)
        c1 = apply_noise(bright_field, spec)
        c2 = apply_noise(bright_field, spec)
        np.testing.assert_array_equal(c1, c2)
        other = apply_noise(bright_field, NoiseSpec(kind=kind, gaussian_std_ratio=1e-2, seed=12))
        assert np.any(other != c1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "salt"},
        {"kind": "gaussian", "gaussian_std_ratio": -1.0},
        {"kind": "poisson", "poisson_peak_photons": 0.0},
        {"kind": "speckle", "speckle_amplitude": 1.0},
        {"kind": "speckle", "speckle_amplitude": -0.1},
    ],
)
def test_noise_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        NoiseSpec(**kwargs)


def test_pupil_error_spec_validation():
    with pytest.raises(ConfigError):
        PupilErrorSpec(wavevector_std=-1.0)


def test_perturb_zero_std_is_noop(desk_geom):
    src = wave_vectors(desk_geom)
    assert perturb_wave_vectors(src, PupilErrorSpec(wavevector_std=0.0), desk_geom) is src


def test_perturb_pixel_offset_std(desk_geom):
    # aggregate over many seeds: the per-axis pixel-offset deviation std
    # approaches wavevector_std / delta_k
    src = wave_vectors(desk_geom)
    target_px = 1.5
    spec_std = target_px * desk_geom.delta_k
    deltas = []
    for seed in range(40):
        pert = perturb_wave_vectors(src, PupilErrorSpec(wavevector_std=spec_std, seed=seed), desk_geom)
        deltas.append((pert.pixel_offsets - src.pixel_offsets).ravel())
    deltas = np.concatenate(deltas).astype(np.float64)
    # rounding adds ~1/12 variance on top of the Gaussian variance
    assert deltas.std() == pytest.approx(np.sqrt(target_px**2 + 1 / 6), rel=0.1)
    assert abs(deltas.mean()) < 0.1


def test_perturb_is_deterministic(desk_geom):
    src = wave_vectors(desk_geom)
    spec = PupilErrorSpec(wavevector_std=desk_geom.delta_k, seed=42)
    p1 = perturb_wave_vectors(src, spec, desk_geom)
    p2 = perturb_wave_vectors(src, spec, desk_geom)
    np.testing.assert_array_equal(p1.pixel_offsets, p2.pixel_offsets)
    np.testing.assert_array_equal(p1.k_offsets, p2.k_offsets)
    # the nominal source is untouched
    assert np.any(p1.pixel_offsets != src.pixel_offsets)


def test_perturb_clamps_out_of_grid(caplog):
    geom = SystemGeometry(
        wavelength=625e-9,
        na_objective=0.15,
        led_grid=3,
        led_spacing=5e-3,
        led_height=50e-3,
        pixel_size=1e-6,
        hr_size=32,
        lr_size=16,
    )
    src = wave_vectors(geom)
    huge = PupilErrorSpec(wavevector_std=50 * geom.delta_k, seed=0)
    with caplog.at_level("WARNING"):
        pert = perturb_wave_vectors(src, huge, geom)
    half_slack = geom.hr_size // 2 - geom.lr_size // 2
    assert np.all(np.abs(pert.pixel_offsets) <= half_slack)
    assert any("clamped" in r.message for r in caplog.records)
