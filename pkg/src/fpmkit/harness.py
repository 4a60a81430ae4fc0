"""Experiment harness: dataset synthesis, reconstruction runs and sweeps.

All randomness flows through explicit seeds; cell seeds in a sweep are a
pure function of (base seed, value index, repeat index), so a whole sweep
is byte-reproducible.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from fpmkit import dataset as dsio
from fpmkit.config import ExperimentConfig, SampleSpec, SweepSpec
from fpmkit.errors import ConfigError, FpmError
from fpmkit.fields import fft2, ifft2
from fpmkit.forward import forward_all
from fpmkit.geometry import (
    IlluminationSource,
    Pupil,
    SystemGeometry,
    adjacent_overlap_fraction,
    coverage_mask,
    make_pupil,
    wave_vectors,
)
from fpmkit.metrics import relative_error
from fpmkit.noise import NoiseSpec, PupilErrorSpec, apply_noise, perturb_wave_vectors
from fpmkit.solvers import ALGORITHMS, SolverConfig, solve

log = logging.getLogger(__name__)

OVERLAP_WARN_THRESHOLD = 0.5

_GEOMETRY_META_FIELDS = (
    "wavelength",
    "na_objective",
    "led_grid",
    "led_spacing",
    "led_height",
    "pixel_size",
    "hr_size",
    "lr_size",
)


def derive_seed(*parts: int) -> int:
    """Pure (base, index...) -> 64-bit seed mapping for sweep cells."""
    return int(np.random.SeedSequence(list(parts)).generate_state(2).view(np.uint64)[0])


def load_sample_image(ref: str, size: int) -> np.ndarray:
    """Load a builtin or on-disk grayscale image, resized to size x size, in [0, 1]."""
    if ref.startswith("builtin:"):
        import skimage.data

        img = np.asarray(getattr(skimage.data, ref.removeprefix("builtin:"))(), dtype=np.float64)
        if img.ndim == 3:
            img = img.mean(axis=2)
    else:
        try:
            img = np.asarray(Image.open(ref).convert("F"), dtype=np.float64)
        except OSError as exc:
            raise ConfigError(f"cannot load sample image {ref}: {exc}") from exc
    pil = Image.fromarray(img.astype(np.float32), mode="F")
    img = np.asarray(pil.resize((size, size), Image.BILINEAR), dtype=np.float64)
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)


def build_ground_truth(
    sample: SampleSpec,
    geom: SystemGeometry,
    src: IlluminationSource,
    pupil: Pupil,
) -> np.ndarray:
    """Ground-truth HR spectrum from the amplitude and phase images."""
    amp = load_sample_image(sample.amplitude, geom.hr_size)
    phase = load_sample_image(sample.phase, geom.hr_size)
    lo, hi = sample.phase_range
    field = amp * np.exp(1j * (lo + phase * (hi - lo))) * math.sqrt(sample.intensity_scale)
    Z = fft2(field)
    if sample.bandlimit:
        mask = coverage_mask(geom, src, pupil)
        r = sample.bandlimit_margin_px
        if r > 0:
            yy, xx = np.indices((2 * r + 1, 2 * r + 1))
            disk = (yy - r) ** 2 + (xx - r) ** 2 <= r * r
            mask = ndimage.binary_erosion(mask, structure=disk)
        Z = Z * mask
    return Z


@dataclass
class SynthesizedData:
    """In-memory synthesis product shared by `synthesize` and sweep cells."""

    geom: SystemGeometry
    src: IlluminationSource
    pupil: Pupil
    ground_truth: np.ndarray
    b: np.ndarray
    c: np.ndarray
    noise: NoiseSpec
    pupil_error: PupilErrorSpec
    overlap: float


def synthesize_arrays(cfg: ExperimentConfig, seed: int | None = None) -> SynthesizedData:
    """Build ground truth, clean measurements b and corrupted measurements c.

    ``seed`` (when given) replaces the configured noise and pupil-error
    seeds with two values derived from it. Pupil location error perturbs
    the synthesis geometry only; the nominal source is what reconstruction
    sees.
    """
    geom = cfg.geometry
    src = wave_vectors(geom)
    pupil = make_pupil(geom)

    noise = cfg.noise
    pupil_error = cfg.pupil_error
    if seed is not None:
        noise = replace(noise, seed=derive_seed(seed, 0))
        pupil_error = replace(pupil_error, seed=derive_seed(seed, 1))

    overlap = adjacent_overlap_fraction(geom, src)
    if overlap < OVERLAP_WARN_THRESHOLD:
        log.warning("adjacent pupil overlap %.1f%% is below 50%%", 100 * overlap)

    truth = build_ground_truth(cfg.sample, geom, src, pupil)
    synth_src = perturb_wave_vectors(src, pupil_error, geom)
    b = forward_all(truth, pupil, synth_src)
    c = apply_noise(b, noise)
    return SynthesizedData(
        geom=geom,
        src=src,
        pupil=pupil,
        ground_truth=truth,
        b=b,
        c=c,
        noise=noise,
        pupil_error=pupil_error,
        overlap=overlap,
    )


def synthesize(cfg: ExperimentConfig, out_dir: str | Path, seed: int | None = None) -> Path:
    """Synthesize a dataset and write it to ``out_dir``. Returns the directory."""
    data = synthesize_arrays(cfg, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    meta = {name: getattr(data.geom, name) for name in _GEOMETRY_META_FIELDS}
    meta.update(
        noise_kind=data.noise.kind,
        gaussian_std_ratio=data.noise.gaussian_std_ratio,
        poisson_peak_photons=data.noise.poisson_peak_photons,
        speckle_amplitude=data.noise.speckle_amplitude,
        noise_seed=data.noise.seed,
        wavevector_std=data.pupil_error.wavevector_std,
        pupil_error_seed=data.pupil_error.seed,
        amplitude_image=cfg.sample.amplitude,
        phase_image=cfg.sample.phase,
        phase_range_lo=cfg.sample.phase_range[0],
        phase_range_hi=cfg.sample.phase_range[1],
        bandlimit=cfg.sample.bandlimit,
        bandlimit_margin_px=cfg.sample.bandlimit_margin_px,
        intensity_scale=cfg.sample.intensity_scale,
        adjacent_overlap=data.overlap,
    )
    dsio.write_meta(out / "geometry.meta", meta)
    dsio.write_raw_stack(out / "b.raw", data.b)
    dsio.write_raw_stack(out / "c.raw", data.c)
    dsio.write_complex_field(out / "ground_truth.cfld", data.ground_truth)
    spatial = ifft2(data.ground_truth)
    dsio.write_preview(out / "ground_truth_amplitude.png", np.abs(spatial))
    dsio.write_preview(out / "ground_truth_phase.png", np.angle(spatial))
    return out


def geometry_from_meta(meta: dict[str, str]) -> SystemGeometry:
    kwargs = {}
    for name in _GEOMETRY_META_FIELDS:
        if name not in meta:
            raise ConfigError(f"geometry.meta is missing {name}")
        raw = meta[name]
        kwargs[name] = int(raw) if name in ("led_grid", "hr_size", "lr_size") else float(raw)
    return SystemGeometry(**kwargs)


def _solver_configs(selection, configured: tuple[SolverConfig, ...]) -> list[SolverConfig]:
    if selection is None:
        return list(configured)
    configs = []
    by_algo = {cfg.algorithm: cfg for cfg in configured}
    for name in selection:
        if isinstance(name, SolverConfig):
            configs.append(name)
        elif name in by_algo:
            configs.append(by_algo[name])
        elif name in ALGORITHMS:
            configs.append(SolverConfig(algorithm=name))
        else:
            raise ConfigError(f"unknown solver {name!r}; expected one of {ALGORITHMS}")
    return configs


def reconstruct(
    dataset_dir: str | Path,
    out_dir: str | Path,
    solvers=None,
    configured: tuple[SolverConfig, ...] = (),
) -> dict[str, dict]:
    """Run solvers on a stored dataset; write per-solver results and run_meta.json.

    ``solvers`` is an iterable of algorithm names or SolverConfig instances;
    defaults to the configs in ``configured`` (or every algorithm's default
    config when that is empty too).
    """
    ds = Path(dataset_dir)
    if not (ds / "geometry.meta").is_file():
        raise ConfigError(f"{ds} is not a dataset directory (missing geometry.meta)")
    meta = dsio.read_meta(ds / "geometry.meta")
    geom = geometry_from_meta(meta)
    src = wave_vectors(geom)
    pupil = make_pupil(geom)
    c = dsio.read_raw_stack(ds / "c.raw")
    truth = None
    if (ds / "ground_truth.cfld").is_file():
        truth = dsio.read_complex_field(ds / "ground_truth.cfld")

    if solvers is None and not configured:
        solvers = list(ALGORITHMS)
    configs = _solver_configs(solvers, configured)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_meta: dict[str, dict] = {}
    for cfg in configs:
        result = solve(c, src, pupil, geom, cfg, ground_truth=truth)
        solver_dir = out / cfg.algorithm
        solver_dir.mkdir(exist_ok=True)
        dsio.write_complex_field(solver_dir / "recovered.cfld", result.spectrum)
        dsio.write_preview(solver_dir / "amplitude.png", np.abs(result.spatial))
        dsio.write_preview(solver_dir / "phase.png", np.angle(result.spatial))
        dsio.write_metrics_csv(
            solver_dir / "metrics.csv",
            result.trace_iterations,
            result.trace_objective,
            result.trace_re,
            result.trace_xi_size,
        )
        entry = {
            "iterations": result.iterations,
            "wall_time_s": result.wall_time,
            "wall_time_per_iteration_s": result.wall_time_per_iteration,
        }
        if truth is not None:
            entry["relative_error"] = relative_error(result.spectrum, truth)
        run_meta[cfg.algorithm] = entry
    (out / "run_meta.json").write_text(json.dumps(run_meta, indent=2, sort_keys=True) + "\n")
    return run_meta


def _apply_sweep_value(cfg: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    if parameter == "a_h":
        solvers = tuple(
            replace(s, a_h=value) if s.algorithm == "tpwfp" else s for s in cfg.solvers
        )
        return replace(cfg, solvers=solvers)
    if parameter == "wavevector_std":
        return replace(cfg, pupil_error=replace(cfg.pupil_error, wavevector_std=value))
    kind = {
        "gaussian_std_ratio": "gaussian",
        "poisson_peak_photons": "poisson",
        "speckle_amplitude": "speckle",
    }[parameter]
    return replace(cfg, noise=replace(cfg.noise, kind=kind, **{parameter: value}))


def _run_sweep_cell(args) -> list[dict]:
    cfg, parameter, value_idx, value, rep = args
    cell_cfg = _apply_sweep_value(cfg, parameter, value)
    seed = derive_seed(cfg.sweep.base_seed, value_idx, rep)
    rows = []
    try:
        data = synthesize_arrays(cell_cfg, seed)
    except FpmError as exc:
        for solver_cfg in cell_cfg.solvers:
            rows.append(_cell_row(parameter, value, rep, seed, solver_cfg.algorithm, error=str(exc)))
        return rows
    for solver_cfg in cell_cfg.solvers:
        t0 = time.perf_counter()
        try:
            result = solve(data.c, data.src, data.pupil, data.geom, solver_cfg)
            re = relative_error(result.spectrum, data.ground_truth)
            rows.append(
                _cell_row(
                    parameter,
                    value,
                    rep,
                    seed,
                    solver_cfg.algorithm,
                    re=re,
                    iterations=result.iterations,
                    wall_time=time.perf_counter() - t0,
                )
            )
        except FpmError as exc:
            rows.append(_cell_row(parameter, value, rep, seed, solver_cfg.algorithm, error=str(exc)))
    return rows


def _cell_row(parameter, value, rep, seed, solver, re=float("nan"), iterations=0, wall_time=0.0, error=""):
    return {
        "parameter": parameter,
        "value": value,
        "repeat": rep,
        "seed": seed,
        "solver": solver,
        "re": re,
        "iterations": iterations,
        "wall_time": wall_time,
        "error": error,
    }


def run_sweep(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Run the configured sweep; write results.csv, summary.csv and sweep_meta.json."""
    if cfg.sweep is None:
        raise ConfigError("config has no [sweep] section")
    sweep = cfg.sweep
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        (cfg, sweep.parameter, vi, value, rep)
        for vi, value in enumerate(sweep.values)
        for rep in range(sweep.repeats)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            cell_rows = list(pool.map(_run_sweep_cell, jobs))
    else:
        cell_rows = [_run_sweep_cell(job) for job in jobs]
    rows = [row for cell in cell_rows for row in cell]

    _write_results_csv(out / "results.csv", rows)
    summary = summarize_rows(rows)
    _write_summary_csv(out / "summary.csv", summary)
    timings = {
        f"{r['solver']}@{r['value']}#{r['repeat']}": r["wall_time"] for r in rows if not r["error"]
    }
    (out / "sweep_meta.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return out


def _write_results_csv(path: Path, rows: list[dict]) -> None:
    # wall times go to sweep_meta.json so numeric outputs stay byte-reproducible
    lines = ["parameter,value,repeat,seed,solver,re,iterations,error"]
    for r in rows:
        lines.append(
            f"{r['parameter']},{r['value']!r},{r['repeat']},{r['seed']},"
            f"{r['solver']},{r['re']!r},{r['iterations']},{r['error']}"
        )
    path.write_text("\n".join(lines) + "\n")


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Mean final RE per (solver, value), ordered by (value, solver)."""
    groups: dict[tuple[float, str], list[float]] = {}
    for r in rows:
        if r["error"]:
            continue
        groups.setdefault((r["value"], r["solver"]), []).append(r["re"])
    summary = []
    for (value, solver), res in sorted(groups.items()):
        summary.append(
            {"value": value, "solver": solver, "mean_re": float(np.mean(res)), "n": len(res)}
        )
    return summary


def _write_summary_csv(path: Path, summary: list[dict]) -> None:
    lines = ["value,solver,mean_re,n"]
    for s in summary:
        lines.append(f"{s['value']!r},{s['solver']},{s['mean_re']!r},{s['n']}")
    path.write_text("\n".join(lines) + "\n")


def read_results_csv(path: str | Path) -> list[dict]:
    rows = []
    lines = Path(path).read_text().splitlines()
    for line in lines[1:]:
        parameter, value, repeat, seed, solver, re, iterations, error = line.split(",", 7)
        rows.append(
            {
                "parameter": parameter,
                "value": float(value),
                "repeat": int(repeat),
                "seed": int(seed),
                "solver": solver,
                "re": float(re),
                "iterations": int(iterations),
                "error": error,
            }
        )
    return rows


def report(sweep_dir: str | Path) -> str:
    """Human-readable mean-RE table for a finished sweep."""
    results = Path(sweep_dir) / "results.csv"
    if not results.is_file():
        raise ConfigError(f"no results.csv in {sweep_dir}")
    rows = read_results_csv(results)
    summary = summarize_rows(rows)
    failures = [r for r in rows if r["error"]]
    lines = [f"{'value':>14}  {'solver':<6}  {'mean RE':>12}  {'n':>3}"]
    for s in summary:
        lines.append(f"{s['value']:>14.6g}  {s['solver']:<6}  {s['mean_re']:>12.4e}  {s['n']:>3}")
    if failures:
        lines.append(f"{len(failures)} failed cells (see results.csv error column)")
    return "\n".join(lines)
