"""Reconstruction engines: AP, WFP, PWFP and TPWFP behind one solver interface.

TPWFP minimizes the Poisson maximum-likelihood objective

    L(z) = sum_i [ |a_i z|^2 - c_i * log(|a_i z|^2) ]

by gradient descent with a per-iteration truncation set that drops
measurement pixels whose residual is implausibly large relative to the mean
residual and the local signal level. PWFP is TPWFP without truncation, WFP
descends the plain intensity least-squares objective, and AP is the classic
alternating-projection spectrum stitcher.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from fpmkit.errors import ConfigError, SolverDivergenceError
from fpmkit.fields import fft2, ifft2
from fpmkit.forward import (
    _fft2_batch,
    _ifft2_batch,
    _window_indices,
    adjoint_all_fields,
    apply_all_fields,
    forward_all,
)
from fpmkit.geometry import IlluminationSource, Pupil, SystemGeometry
from fpmkit.metrics import relative_error

ALGORITHMS = ("ap", "wfp", "pwfp", "tpwfp")

DEFAULT_ITERATIONS = {"ap": 100, "wfp": 1000, "pwfp": 200, "tpwfp": 200}


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm choice plus hyperparameters.

    ``iterations=None`` selects the per-algorithm default budget
    (ap=100, wfp=1000, pwfp=200, tpwfp=200). ``a_h`` is the truncation
    threshold (``inf`` disables truncation; forced to ``inf`` for pwfp).
    ``step_denominator`` divides the ramped step: ``None`` picks an
    operator-scaled value that converges under the orthonormal FFT
    convention, ``"m"`` uses the measurement count, a float is used as-is.
    ``epsilon_floor`` is relative to the mean measured intensity and guards
    log/division at zero-intensity pixels. ``truncation_form`` selects the
    signal factor in the threshold: ``"intensity"`` (|a_i z|^2 / ||z||) or
    the alternative ``"amplitude"`` (|a_i z| / ||z||).
    """

    algorithm: str = "tpwfp"
    iterations: int | None = None
    a_h: float = 25.0
    k0: float = 330.0
    mu_max: float = 0.1
    step_denominator: float | str | None = None
    epsilon_floor: float = 1e-12
    truncation_form: str = "intensity"
    record_trace_every: int = 10
    stop_tol: float | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.a_h <= 0:
            raise ConfigError("a_h must be positive (use inf to disable truncation)")
        if self.k0 <= 0 or self.mu_max <= 0 or self.epsilon_floor <= 0:
            raise ConfigError("k0, mu_max and epsilon_floor must be positive")
        if self.truncation_form not in ("intensity", "amplitude"):
            raise ConfigError("truncation_form must be 'intensity' or 'amplitude'")
        if isinstance(self.step_denominator, str) and self.step_denominator != "m":
            raise ConfigError("step_denominator must be None, 'm' or a positive number")
        if isinstance(self.step_denominator, (int, float)) and self.step_denominator <= 0:
            raise ConfigError("step_denominator must be positive")
        if self.record_trace_every < 1:
            raise ConfigError("record_trace_every must be >= 1")
        if self.algorithm == "pwfp":
            object.__setattr__(self, "a_h", math.inf)

    @property
    def budget(self) -> int:
        return self.iterations if self.iterations is not None else DEFAULT_ITERATIONS[self.algorithm]


@dataclass
class ReconResult:
    """Recovered spectrum plus convergence trace.

    ``trace_objective`` holds the objective before the recorded update,
    ``trace_re`` the relative error after it (NaN without ground truth).
    """

    spectrum: np.ndarray
    spatial: np.ndarray
    algorithm: str
    iterations: int
    wall_time: float
    trace_iterations: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    trace_objective: np.ndarray = field(default_factory=lambda: np.empty(0))
    trace_re: np.ndarray = field(default_factory=lambda: np.empty(0))
    trace_xi_size: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def wall_time_per_iteration(self) -> float:
        return self.wall_time / max(self.iterations, 1)


def max_window_coverage(src: IlluminationSource, pupil: Pupil, hr_size: int) -> int:
    """Largest number of pupil windows covering any single HR spectrum pixel."""
    m = pupil.values.shape[0]
    rows, cols = _window_indices(src, hr_size, m)
    disk = (np.abs(pupil.values) > 0).astype(np.float64)
    count = np.zeros((hr_size, hr_size))
    np.add.at(count, (rows[:, :, None], cols[:, None, :]), np.broadcast_to(disk, (src.n_leds, m, m)))
    return int(count.max())


def step_size(k: int, cfg: SolverConfig, denominator: float = 1.0) -> float:
    """Ramped step mu(k) = min(1 - exp(-k/k0), mu_max) / denominator."""
    if k < 1:
        raise ConfigError("step_size is defined for k >= 1")
    return min(1.0 - math.exp(-k / cfg.k0), cfg.mu_max) / denominator


def _resolve_denominator(
    cfg: SolverConfig,
    kind: str,
    c: np.ndarray,
    pupil: Pupil,
    src: IlluminationSource,
    hr_size: int,
) -> float:
    if isinstance(cfg.step_denominator, (int, float)):
        return float(cfg.step_denominator)
    if cfg.step_denominator == "m":
        return float(c.size)
    # auto: scale by the operator's local curvature so mu_max stays stable
    # under the orthonormal FFT convention; the intensity objective's
    # curvature additionally carries the measured-intensity scale
    cov = max_window_coverage(src, pupil, hr_size)
    if kind == "poisson":
        return float(cov)
    return cov * float(c.max()) / 4.0


def initialize(
    c: np.ndarray, src: IlluminationSource, geom: SystemGeometry, pupil: Pupil
) -> np.ndarray:
    """Starting HR spectrum: upsampled normal-incidence amplitude, zero phase.

    The square root of the center LED's image is bilinearly upsampled from
    M x M to N x N, Fourier transformed, and rescaled so the total energy of
    the predicted measurements matches the total measured energy.
    """
    if src.center_index >= c.shape[0] or tuple(src.pixel_offsets[src.center_index]) != (0, 0):
        raise ConfigError("illumination source has no normal-incidence LED")
    n, m = geom.hr_size, geom.lr_size
    amp = np.sqrt(np.maximum(c[src.center_index], 0.0))
    if n != m:
        amp = ndimage.zoom(amp, n / m, order=1, mode="nearest")
    Z0 = fft2(amp.astype(np.complex128))
    pred = float(np.sum(forward_all(Z0, pupil, src)))
    if pred > 0:
        Z0 *= math.sqrt(float(np.sum(c)) / pred)
    return Z0


def objective_poisson(
    Z: np.ndarray,
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    epsilon_floor: float = 1e-12,
) -> float:
    """Poisson negative log-likelihood sum_i [b_i - c_i log(b_i)], b = |Az|^2."""
    b = forward_all(Z, pupil, src)
    eps = epsilon_floor * float(np.mean(c))
    return float(np.sum(b - c * np.log(np.maximum(b, eps))))


def truncation_set(
    Z: np.ndarray,
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    a_h: float,
    truncation_form: str = "intensity",
) -> np.ndarray:
    """Boolean mask of measurement pixels kept by the residual threshold.

    Pixel i is kept iff |c_i - b_i| <= a_h * mean|c - b| * s_i / ||Z||, where
    s_i is |a_i z|^2 (``intensity`` form) or |a_i z| (``amplitude`` form).
    """
    if math.isinf(a_h):
        return np.ones_like(c, dtype=bool)
    b = forward_all(Z, pupil, src)
    return _truncation_mask(b, c, Z, a_h, truncation_form)


def _truncation_mask(
    b: np.ndarray, c: np.ndarray, Z: np.ndarray, a_h: float, truncation_form: str
) -> np.ndarray:
    resid = np.abs(c - b)
    signal = b if truncation_form == "intensity" else np.sqrt(b)
    z_norm = float(np.linalg.norm(Z))
    return resid <= a_h * float(np.mean(resid)) * signal / z_norm


def gradient_poisson(
    Z: np.ndarray,
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    mask: np.ndarray | None = None,
    epsilon_floor: float = 1e-12,
) -> np.ndarray:
    """Wirtinger gradient of the Poisson objective, optionally truncated.

    Operator form of sum_i 2 (1 - c_i / |a_i z|^2) a_i^H a_i z; ``mask``
    zeroes the excluded measurement pixels.
    """
    psi = apply_all_fields(Z, pupil, src)
    b = np.abs(psi) ** 2
    eps = epsilon_floor * float(np.mean(c))
    w = 2.0 * (1.0 - c / np.maximum(b, eps))
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return adjoint_all_fields(w * psi, pupil, src, Z.shape[0])


def gradient_intensity(
    Z: np.ndarray, c: np.ndarray, src: IlluminationSource, pupil: Pupil
) -> np.ndarray:
    """Wirtinger gradient of the intensity objective sum_i (|a_i z|^2 - c_i)^2."""
    psi = apply_all_fields(Z, pupil, src)
    w = 4.0 * (np.abs(psi) ** 2 - c)
    return adjoint_all_fields(w * psi, pupil, src, Z.shape[0])


def _descent_solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    kind: str,
    ground_truth: np.ndarray | None,
) -> ReconResult:
    t0 = time.perf_counter()
    Z = initialize(c, src, geom, pupil)
    eps = cfg.epsilon_floor * float(np.mean(c))
    denom = _resolve_denominator(cfg, kind, c, pupil, src, geom.hr_size)
    m_total = c.size

    iters, objs, res, xis = [], [], [], []
    prev_obj = None
    n_iters = cfg.budget
    for k in range(1, n_iters + 1):
        # a diverging iterate overflows here on purpose; the non-finite
        # objective check below turns that into SolverDivergenceError
        with np.errstate(over="ignore", invalid="ignore"):
            psi = apply_all_fields(Z, pupil, src)
            b = np.abs(psi) ** 2
            if kind == "poisson":
                if math.isinf(cfg.a_h):
                    xi = m_total
                    w = 2.0 * (1.0 - c / np.maximum(b, eps))
                else:
                    mask = _truncation_mask(b, c, Z, cfg.a_h, cfg.truncation_form)
                    xi = int(np.count_nonzero(mask))
                    w = np.where(mask, 2.0 * (1.0 - c / np.maximum(b, eps)), 0.0)
                obj = float(np.sum(b - c * np.log(np.maximum(b, eps))))
            else:
                xi = m_total
                w = 4.0 * (b - c)
                obj = float(np.sum((b - c) ** 2))
        if not math.isfinite(obj):
            raise SolverDivergenceError(f"{cfg.algorithm} objective became non-finite", k)

        Z = Z - step_size(k, cfg, denom) * adjoint_all_fields(w * psi, pupil, src, geom.hr_size)

        if k % cfg.record_trace_every == 0 or k == n_iters:
            iters.append(k)
            objs.append(obj)
            xis.append(xi)
            res.append(relative_error(Z, ground_truth) if ground_truth is not None else np.nan)
        if cfg.stop_tol is not None and prev_obj is not None:
            if abs(obj - prev_obj) <= cfg.stop_tol * max(abs(prev_obj), 1.0):
                n_iters = k
                break
        prev_obj = obj

    return ReconResult(
        spectrum=Z,
        spatial=ifft2(Z),
        algorithm=cfg.algorithm,
        iterations=n_iters,
        wall_time=time.perf_counter() - t0,
        trace_iterations=np.asarray(iters, dtype=np.int64),
        trace_objective=np.asarray(objs),
        trace_re=np.asarray(res),
        trace_xi_size=np.asarray(xis, dtype=np.int64),
    )


def tpwfp_solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    ground_truth: np.ndarray | None = None,
) -> ReconResult:
    """Truncated Poisson Wirtinger gradient descent."""
    if cfg.algorithm != "tpwfp":
        raise ConfigError(f"tpwfp_solve requires algorithm 'tpwfp', got {cfg.algorithm!r}")
    return _descent_solve(c, src, pupil, geom, cfg, "poisson", ground_truth)


def pwfp_solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    ground_truth: np.ndarray | None = None,
) -> ReconResult:
    """Poisson Wirtinger gradient descent without truncation (a_h = inf)."""
    if cfg.algorithm != "pwfp":
        raise ConfigError(f"pwfp_solve requires algorithm 'pwfp', got {cfg.algorithm!r}")
    result = _descent_solve(c, src, pupil, geom, cfg, "poisson", ground_truth)
    return result


def wfp_solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    ground_truth: np.ndarray | None = None,
) -> ReconResult:
    """Intensity-objective Wirtinger gradient descent."""
    if cfg.algorithm != "wfp":
        raise ConfigError(f"wfp_solve requires algorithm 'wfp', got {cfg.algorithm!r}")
    return _descent_solve(c, src, pupil, geom, cfg, "intensity", ground_truth)


def ap_solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    ground_truth: np.ndarray | None = None,
) -> ReconResult:
    """Alternating projections: amplitude replacement in space, pupil support in frequency.

    One iteration sweeps all LEDs in source order; with a binary pupil the
    frequency-domain update is an exact replacement of the supported window
    entries.
    """
    if cfg.algorithm != "ap":
        raise ConfigError(f"ap_solve requires algorithm 'ap', got {cfg.algorithm!r}")
    t0 = time.perf_counter()
    Z = initialize(c, src, geom, pupil)
    n, m = geom.hr_size, geom.lr_size
    sqrt_c = np.sqrt(np.maximum(c, 0.0))
    support = np.abs(pupil.values) > 0
    pup_sup = pupil.values[support]
    amp_eps = math.sqrt(cfg.epsilon_floor * float(np.mean(c)))
    rows, cols = _window_indices(src, n, m)

    iters, objs, res, xis = [], [], [], []
    n_iters = cfg.budget
    for k in range(1, n_iters + 1):
        for led in range(src.n_leds):
            window = Z[rows[led][:, None], cols[led][None, :]]
            psi = ifft2(pupil.values * window)
            psi = sqrt_c[led] * psi / np.maximum(np.abs(psi), amp_eps)
            new_window = fft2(psi)
            window[support] = new_window[support] / pup_sup
            Z[rows[led][:, None], cols[led][None, :]] = window
        if k % cfg.record_trace_every == 0 or k == n_iters:
            obj = objective_poisson(Z, c, src, pupil, cfg.epsilon_floor)
            if not math.isfinite(obj):
                raise SolverDivergenceError("ap objective became non-finite", k)
            iters.append(k)
            objs.append(obj)
            xis.append(c.size)
            res.append(relative_error(Z, ground_truth) if ground_truth is not None else np.nan)

    return ReconResult(
        spectrum=Z,
        spatial=ifft2(Z),
        algorithm="ap",
        iterations=n_iters,
        wall_time=time.perf_counter() - t0,
        trace_iterations=np.asarray(iters, dtype=np.int64),
        trace_objective=np.asarray(objs),
        trace_re=np.asarray(res),
        trace_xi_size=np.asarray(xis, dtype=np.int64),
    )


_SOLVERS = {"ap": ap_solve, "wfp": wfp_solve, "pwfp": pwfp_solve, "tpwfp": tpwfp_solve}


def solve(
    c: np.ndarray,
    src: IlluminationSource,
    pupil: Pupil,
    geom: SystemGeometry,
    cfg: SolverConfig,
    ground_truth: np.ndarray | None = None,
) -> ReconResult:
    """Run the solver selected by ``cfg.algorithm``."""
    return _SOLVERS[cfg.algorithm](c, src, pupil, geom, cfg, ground_truth)
