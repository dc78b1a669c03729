"""Maximal-entropy weighted least squares: polynomial fitting with
entropy-maximized statistical weights, outlier removal, and grayscale image
denoising."""

from .exceptions import (DegenerateRange, DegreeTooHigh, DimensionMismatch,
                         InfeasibleTarget, LengthMismatch, MewfitError,
                         NoConvergence, PgmError, SingularSystem,
                         UnknownScenario)
from .maxent import (FitConfig, FitResult, MemState, entropy,
                     entropy_identity_check, mem_fit, partition_function,
                     solve_beta, uniform_baseline, weights_from_beta)
from .model import (AdaptedDataset, PolynomialModel, RawDataset, Scale, adapt,
                    residuals, unscale, weighted_mse)
from .normal_equations import NormalSystem, assemble, fit_polynomial, solve
from .outliers import OutlierReport, detect, weight_history
from .denoise import (DenoiseConfig, NoiseSpec, denoise, inject_noise, psnr)
from .pgm import read_pgm, write_pgm
from .rng import Rng
from . import experiments

__version__ = "0.1.0"

__all__ = [
    "AdaptedDataset", "DegenerateRange", "DegreeTooHigh", "DenoiseConfig",
    "DimensionMismatch", "FitConfig", "FitResult", "InfeasibleTarget",
    "LengthMismatch", "MemState", "MewfitError", "NoConvergence",
    "NoiseSpec", "NormalSystem", "OutlierReport", "PgmError",
    "PolynomialModel", "RawDataset", "Rng", "Scale", "SingularSystem",
    "UnknownScenario", "adapt", "assemble", "denoise", "detect", "entropy",
    "entropy_identity_check", "experiments", "fit_polynomial", "inject_noise",
    "mem_fit", "partition_function", "psnr", "read_pgm", "residuals",
    "solve", "solve_beta", "unscale", "uniform_baseline", "weight_history",
    "weighted_mse", "weights_from_beta", "write_pgm",
]
