"""Experiment configuration: TOML schema parsing and validation.

The config file is TOML with sections ``[geometry]``, ``[sample]``,
``[noise]``, ``[pupil_error]``, one or more ``[[solver]]`` tables, an
optional ``[sweep]`` section and ``[output]``. See the repository README
for the full schema.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path

from fpmkit.errors import ConfigError
from fpmkit.geometry import SystemGeometry
from fpmkit.noise import NoiseSpec, PupilErrorSpec
from fpmkit.solvers import SolverConfig

BUILTIN_IMAGES = ("camera", "moon", "coins", "grass", "gravel", "text")


@dataclass(frozen=True)
class SampleSpec:
    """Ground-truth sample construction.

    ``amplitude`` / ``phase`` are image paths or ``builtin:<name>`` where
    name is one of the bundled scikit-image photographs. Amplitude is
    normalized to [0, 1], phase to ``phase_range``. ``bandlimit`` restricts
    the ground-truth spectrum to the region actually probed by the LED
    array, making noiseless recovery well-posed;
    ``bandlimit_margin_px`` additionally erodes that region so pixels only
    grazed by a pupil rim (nearly unobserved, hence ill-conditioned) carry
    no ground-truth content.

    ``intensity_scale`` is the illumination brightness: the complex sample
    field is the [0, 1] amplitude map times sqrt(intensity_scale). The
    residual-truncation threshold is signal dependent and not invariant to
    this scale, so the default puts the stock threshold setting at its
    intended operating point.
    """

    amplitude: str = "builtin:camera"
    phase: str = "builtin:moon"
    phase_range: tuple[float, float] = (0.0, math.pi)
    bandlimit: bool = True
    bandlimit_margin_px: int = 2
    intensity_scale: float = 3e4

    def __post_init__(self):
        lo, hi = self.phase_range
        if hi < lo:
            raise ConfigError("phase_range must be increasing")
        if self.intensity_scale <= 0:
            raise ConfigError("intensity_scale must be positive")
        if self.bandlimit_margin_px < 0:
            raise ConfigError("bandlimit_margin_px must be >= 0")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: values x repeats, deterministically seeded."""

    parameter: str
    values: tuple[float, ...]
    repeats: int = 5
    base_seed: int = 0

    SWEEPABLE = (
        "a_h",
        "gaussian_std_ratio",
        "poisson_peak_photons",
        "speckle_amplitude",
        "wavevector_std",
    )

    def __post_init__(self):
        if self.parameter not in self.SWEEPABLE:
            raise ConfigError(
                f"unknown sweep parameter {self.parameter!r}; expected one of {self.SWEEPABLE}"
            )
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if self.repeats < 1:
            raise ConfigError("sweep repeats must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: SystemGeometry
    sample: SampleSpec = field(default_factory=SampleSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    pupil_error: PupilErrorSpec = field(default_factory=PupilErrorSpec)
    solvers: tuple[SolverConfig, ...] = (SolverConfig(algorithm="tpwfp"),)
    sweep: SweepSpec | None = None
    output_dir: str = "out"


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _build(cls, section: dict, name: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment configuration from a TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if "geometry" not in data:
        raise ConfigError(f"{path}: missing required [geometry] section")
    geometry = _build(SystemGeometry, _section(data, "geometry"), "geometry")

    sample_raw = dict(_section(data, "sample"))
    if "phase_range" in sample_raw:
        sample_raw["phase_range"] = tuple(sample_raw["phase_range"])
    sample = _build(SampleSpec, sample_raw, "sample")
    for role in ("amplitude", "phase"):
        ref = getattr(sample, role)
        if ref.startswith("builtin:"):
            if ref.removeprefix("builtin:") not in BUILTIN_IMAGES:
                raise ConfigError(f"unknown builtin image {ref!r}")
        elif not Path(ref).is_file():
            raise ConfigError(f"{role} image not found: {ref}")

    noise = _build(NoiseSpec, _section(data, "noise"), "noise")
    pupil_error = _build(PupilErrorSpec, _section(data, "pupil_error"), "pupil_error")

    solver_tables = data.get("solver", [{}])
    if isinstance(solver_tables, dict):
        solver_tables = [solver_tables]
    solvers = tuple(_build(SolverConfig, t, "solver") for t in solver_tables)

    sweep = None
    if "sweep" in data:
        sweep_raw = dict(_section(data, "sweep"))
        if "values" in sweep_raw:
            sweep_raw["values"] = tuple(float(v) for v in sweep_raw["values"])
        sweep = _build(SweepSpec, sweep_raw, "sweep")

    output_dir = _section(data, "output").get("directory", "out")
    return ExperimentConfig(
        geometry=geometry,
        sample=sample,
        noise=noise,
        pupil_error=pupil_error,
        solvers=solvers,
        sweep=sweep,
        output_dir=str(output_dir),
    )
