"""Serialization round trips for the on-disk formats."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from fpmkit.dataset import (
    read_complex_field,
    read_meta,
    read_raw_stack,
    write_complex_field,
    write_meta,
    write_metrics_csv,
    write_preview,
    write_raw_stack,
)
from fpmkit.errors import ConfigError


def test_raw_stack_round_trip(tmp_path, rng):
    stack = rng.normal(size=(3, 4, 5))
    path = tmp_path / "stack.raw"
    write_raw_stack(path, stack)
    got = read_raw_stack(path)
    np.testing.assert_array_equal(got, stack)
    assert got.dtype == np.float64
    header = path.read_bytes().split(b"\n", 1)[0]
    assert header == b"FPMRAW1 4 5 3"


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_raw_stack_round_trip_random(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    stack = rng.normal(size=(2, 3, 3)) * 10.0 ** rng.integers(-8, 8)
    path = tmp_path_factory.mktemp("raw") / "s.raw"
    write_raw_stack(path, stack)
    np.testing.assert_array_equal(read_raw_stack(path), stack)


def test_raw_stack_rejects_non_3d(tmp_path):
    with pytest.raises(ConfigError):
        write_raw_stack(tmp_path / "x.raw", np.zeros((4, 4)))


def test_raw_stack_header_and_size_errors(tmp_path):
    bad = tmp_path / "bad.raw"
    bad.write_bytes(b"NOPE 1 2 3\n")
    with pytest.raises(ConfigError, match="not a FPMRAW1"):
        read_raw_stack(bad)
    truncated = tmp_path / "short.raw"
    truncated.write_bytes(b"FPMRAW1 4 4 2\n" + b"\x00" * 64)
    with pytest.raises(ConfigError, match="size mismatch"):
        read_raw_stack(truncated)


def test_complex_field_round_trip(tmp_path, rng):
    field = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    path = tmp_path / "f.cfld"
    write_complex_field(path, field)
    got = read_complex_field(path)
    np.testing.assert_array_equal(got, field)
    assert got.dtype == np.complex128


def test_complex_field_errors(tmp_path):
    with pytest.raises(ConfigError):
        write_complex_field(tmp_path / "x.cfld", np.zeros((2, 2, 2)))
    bad = tmp_path / "bad.cfld"
    bad.write_bytes(b"FPMRAW1 2 2\n")
    with pytest.raises(ConfigError, match="not a FPMCFLD1"):
        read_complex_field(bad)


def test_meta_round_trip_exact_floats(tmp_path):
    path = tmp_path / "m.meta"
    items = {
        "wavelength": 625e-9,
        "hr_size": 128,
        "name": "desk",
        "ratio": 0.1 + 0.2,  # not representable exactly in decimal
    }
    write_meta(path, items)
    got = read_meta(path)
    assert float(got["wavelength"]) == 625e-9
    assert int(got["hr_size"]) == 128
    assert got["name"] == "desk"
    assert float(got["ratio"]) == 0.1 + 0.2


def test_meta_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "m.meta"
    path.write_text("# comment\n\nkey = value\n")
    assert read_meta(path) == {"key": "value"}


def test_preview_is_16bit_png(tmp_path, rng):
    path = tmp_path / "p.png"
    write_preview(path, rng.normal(size=(8, 8)))
    img = np.asarray(Image.open(path))
    assert img.shape == (8, 8)
    assert img.min() == 0
    assert img.max() == 65535


def test_preview_constant_image(tmp_path):
    path = tmp_path / "c.png"
    write_preview(path, np.ones((4, 4)))
    assert np.asarray(Image.open(path)).max() == 0


def test_metrics_csv(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, [10, 20], [1.5, 1.25], [0.5, 0.25], [100, 90])
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,objective,re,xi_size"
    assert lines[1] == "10,1.5,0.5,100"
    assert len(lines) == 3
