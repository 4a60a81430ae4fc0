"""End-to-end CLI behavior, including exit codes."""

import json

import pytest
from click.testing import CliRunner

from fpmkit.cli import main

SMALL_GEOMETRY = """
[geometry]
wavelength = 625e-9
na_objective = 0.15
led_grid = 3
led_spacing = 5e-3
led_height = 50e-3
pixel_size = 1e-6
hr_size = 32
lr_size = 16

[sample]
intensity_scale = 1e3
"""

SOLVERS = """
[[solver]]
algorithm = "tpwfp"
iterations = 20

[[solver]]
algorithm = "ap"
iterations = 5
"""


@pytest.fixture()
def runner():
    return CliRunner()


def write_cfg(tmp_path, body, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


def test_synthesize_reconstruct_report_cycle(tmp_path, runner):
    cfg = write_cfg(tmp_path, SMALL_GEOMETRY + SOLVERS)
    ds = str(tmp_path / "ds")
    out = str(tmp_path / "out")

    r = runner.invoke(main, ["synthesize", "--config", cfg, "--out", ds, "--seed", "1"])
    assert r.exit_code == 0, r.output
    assert "dataset written" in r.output

    r = runner.invoke(main, ["reconstruct", "--config", cfg, "--dataset", ds, "--out", out])
    assert r.exit_code == 0, r.output
    assert "tpwfp: 20 iterations" in r.output
    assert "RE" in r.output
    meta = json.loads((tmp_path / "out" / "run_meta.json").read_text())
    assert set(meta) == {"tpwfp", "ap"}


def test_reconstruct_solver_subset(tmp_path, runner):
    cfg = write_cfg(tmp_path, SMALL_GEOMETRY + SOLVERS)
    ds = str(tmp_path / "ds")
    runner.invoke(main, ["synthesize", "--config", cfg, "--out", ds, "--seed", "1"])
    r = runner.invoke(
        main,
        ["reconstruct", "--dataset", ds, "--out", str(tmp_path / "o2"), "--solver", "ap"],
    )
    assert r.exit_code == 0, r.output
    meta = json.loads((tmp_path / "o2" / "run_meta.json").read_text())
    assert set(meta) == {"ap"}


def test_sweep_and_report(tmp_path, runner):
    body = SMALL_GEOMETRY + """
[noise]
kind = "gaussian"
gaussian_std_ratio = 1e-3

[[solver]]
algorithm = "tpwfp"
iterations = 15

[sweep]
parameter = "a_h"
values = [5.0, 1e6]
repeats = 2
base_seed = 3
"""
    cfg = write_cfg(tmp_path, body)
    out = str(tmp_path / "sweep")
    r = runner.invoke(main, ["sweep", "--config", cfg, "--out", out])
    assert r.exit_code == 0, r.output
    assert "tpwfp" in r.output

    r = runner.invoke(main, ["report", "--out", out])
    assert r.exit_code == 0, r.output
    assert "mean RE" in r.output


def test_config_error_exits_2(tmp_path, runner):
    cfg = write_cfg(tmp_path, "[geometry]\nwavelength = -1\n")
    r = runner.invoke(main, ["synthesize", "--config", cfg, "--out", str(tmp_path / "ds")])
    assert r.exit_code == 2
    assert "error:" in r.output


def test_missing_config_exits_2(tmp_path, runner):
    r = runner.invoke(
        main, ["synthesize", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "d")]
    )
    assert r.exit_code == 2


def test_geometry_error_exits_3(tmp_path, runner):
    body = SMALL_GEOMETRY.replace("led_spacing = 5e-3", "led_spacing = 20e-3")
    cfg = write_cfg(tmp_path, body)
    r = runner.invoke(main, ["synthesize", "--config", cfg, "--out", str(tmp_path / "ds")])
    assert r.exit_code == 3


def test_solver_divergence_exits_4(tmp_path, runner):
    body = SMALL_GEOMETRY + """
[[solver]]
algorithm = "wfp"
iterations = 100
step_denominator = 1e-9
"""
    cfg = write_cfg(tmp_path, body)
    ds = str(tmp_path / "ds")
    assert runner.invoke(main, ["synthesize", "--config", cfg, "--out", ds]).exit_code == 0
    r = runner.invoke(
        main, ["reconstruct", "--config", cfg, "--dataset", ds, "--out", str(tmp_path / "out")]
    )
    assert r.exit_code == 4


def test_sweep_without_section_exits_2(tmp_path, runner):
    cfg = write_cfg(tmp_path, SMALL_GEOMETRY + SOLVERS)
    r = runner.invoke(main, ["sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--seed", "1"])
    assert r.exit_code == 2


def test_report_on_empty_dir_exits_2(tmp_path, runner):
    r = runner.invoke(main, ["report", "--out", str(tmp_path)])
    assert r.exit_code == 2
