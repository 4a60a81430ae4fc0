"""Fourier ptychographic microscopy simulation and reconstruction toolkit.

Simulates an LED-array FPM setup, corrupts the synthetic measurements with
configurable noise models, and reconstructs the sample's high-resolution
complex spectrum with one of four solvers (AP, WFP, PWFP, TPWFP).
"""

from fpmkit.errors import ConfigError, GeometryError, SolverDivergenceError
from fpmkit.fields import embed_shifted, extract_shifted, fft2, ifft2
from fpmkit.forward import adjoint_field, apply_field, forward_all, forward_one
from fpmkit.geometry import IlluminationSource, Pupil, SystemGeometry, make_pupil, wave_vectors
from fpmkit.metrics import relative_error
from fpmkit.noise import NoiseSpec, PupilErrorSpec, apply_noise, perturb_wave_vectors
from fpmkit.solvers import ReconResult, SolverConfig, initialize, solve

__all__ = [
    "ConfigError",
    "GeometryError",
    "SolverDivergenceError",
    "IlluminationSource",
    "NoiseSpec",
    "Pupil",
    "PupilErrorSpec",
    "ReconResult",
    "SolverConfig",
    "SystemGeometry",
    "adjoint_field",
    "apply_field",
    "apply_noise",
    "embed_shifted",
    "extract_shifted",
    "fft2",
    "forward_all",
    "forward_one",
    "ifft2",
    "initialize",
    "make_pupil",
    "perturb_wave_vectors",
    "relative_error",
    "solve",
    "wave_vectors",
]

__version__ = "0.1.0"
