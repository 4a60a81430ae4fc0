"""Reconstruction quality metrics and convergence reporting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpmkit.errors import ConfigError


def relative_error(z: np.ndarray, z_hat: np.ndarray) -> float:
    """Global-phase-invariant relative error between two complex fields.

    RE = min over phi of ||exp(-j*phi) z - z_hat||^2 / ||z_hat||^2. The
    minimizing phase rotates the inner product <z, z_hat> onto the positive
    real axis, so the minimum is available in closed form:
    (||z||^2 + ||z_hat||^2 - 2 |<z, z_hat>|) / ||z_hat||^2.

    Not symmetric in its arguments: normalization is by ``z_hat`` only.
    """
    z = np.asarray(z)
    z_hat = np.asarray(z_hat)
    if z.shape != z_hat.shape:
        raise ConfigError(f"shape mismatch: {z.shape} vs {z_hat.shape}")
    ref = float(np.vdot(z_hat, z_hat).real)
    if ref == 0.0:
        raise ConfigError("relative_error is undefined for a zero reference field")
    inner = np.vdot(z_hat, z)  # sum z * conj(z_hat)
    num = float(np.vdot(z, z).real) + ref - 2.0 * float(abs(inner))
    return max(num / ref, 0.0)


def aligned_phase(z: np.ndarray, z_hat: np.ndarray) -> float:
    """Minimizing global phase of :func:`relative_error`, in [0, 2*pi)."""
    phi = float(np.angle(np.vdot(np.asarray(z_hat), np.asarray(z))))
    return phi % (2.0 * np.pi)


@dataclass
class EvalReport:
    """Final quality number plus the per-recorded-iteration convergence trace."""

    relative_error: float
    aligned_phase: float
    iterations: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    objective: np.ndarray = field(default_factory=lambda: np.empty(0))
    re_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    xi_size: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def trace_report(result, ground_truth: np.ndarray | None = None) -> EvalReport:
    """Assemble an :class:`EvalReport` from a solver result.

    When ``ground_truth`` (an HR spectrum) is supplied, the final RE is
    recomputed from the recovered spectrum; otherwise it is NaN.
    """
    if ground_truth is not None:
        re_final = relative_error(result.spectrum, ground_truth)
        phase = aligned_phase(result.spectrum, ground_truth)
    else:
        re_final = float("nan")
        phase = float("nan")
    return EvalReport(
        relative_error=re_final,
        aligned_phase=phase,
        iterations=result.trace_iterations.copy(),
        objective=result.trace_objective.copy(),
        re_trace=result.trace_re.copy(),
        xi_size=result.trace_xi_size.copy(),
    )
