"""Shared fixtures: small geometries that keep unit tests fast."""

import numpy as np
import pytest

from fpmkit.geometry import SystemGeometry, make_pupil, wave_vectors


@pytest.fixture(scope="session")
def tiny_geom():
    """8x8 spectrum, 4x4 captures, 3x3 LEDs: small enough for dense oracles."""
    return SystemGeometry(
        wavelength=625e-9,
        na_objective=0.16,
        led_grid=3,
        led_spacing=5e-3,
        led_height=50e-3,
        pixel_size=1e-6,
        hr_size=8,
        lr_size=4,
    )


@pytest.fixture(scope="session")
def small_geom():
    """32x32 spectrum, 16x16 captures, 3x3 LEDs: fast but non-degenerate."""
    return SystemGeometry(
        wavelength=625e-9,
        na_objective=0.15,
        led_grid=3,
        led_spacing=5e-3,
        led_height=50e-3,
        pixel_size=1e-6,
        hr_size=32,
        lr_size=16,
    )


@pytest.fixture(scope="session")
def desk_geom():
    """The desk-scale configuration used by the acceptance criteria."""
    return SystemGeometry(
        wavelength=625e-9,
        na_objective=0.10,
        led_grid=9,
        led_spacing=3e-3,
        led_height=84.8e-3,
        pixel_size=0.2e-6,
        hr_size=128,
        lr_size=32,
    )


@pytest.fixture(scope="session")
def small_setup(small_geom):
    return small_geom, wave_vectors(small_geom), make_pupil(small_geom)


@pytest.fixture(scope="session")
def tiny_setup(tiny_geom):
    return tiny_geom, wave_vectors(tiny_geom), make_pupil(tiny_geom)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_spectrum(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def random_stack(rng, leds, m):
    return rng.normal(size=(leds, m, m)) + 1j * rng.normal(size=(leds, m, m))
