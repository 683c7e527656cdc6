"""Quadratic hedging (LRM and MVH) of contingent claims on exponential Levy models."""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceWarning, DegenerateExponentialWarning, DensityError, GridError,
                     InsufficientDataError, MeasurePositivityError, MomentDivergenceError, QuadHedgeError,
                     StripError)
from .fourier_engine import (ClaimSpec, FourierGrid, StrikeCurves, batch_over_strikes, call_value, compute_I,
                             compute_K, put_value)
from .levy_model import (JumpDiffusion, LevyModel, PureDiffusion, VarianceGamma, char_exponent_P, levy_moments,
                         model_from_dict, validate)
from .mmm_transform import MMMTransform, char_exponent_Pstar, gamma_hat
from .strategies import HedgeReport, ObservedPath, lrm_ratio, mvh_strategies, mvh_strategy

__all__ = [
    "__version__",
    "LevyModel", "VarianceGamma", "JumpDiffusion", "PureDiffusion",
    "levy_moments", "char_exponent_P", "validate", "model_from_dict",
    "MMMTransform", "char_exponent_Pstar", "gamma_hat",
    "FourierGrid", "ClaimSpec", "StrikeCurves", "call_value", "put_value", "compute_I", "compute_K",
    "batch_over_strikes",
    "ObservedPath", "HedgeReport", "lrm_ratio", "mvh_strategy", "mvh_strategies",
    "QuadHedgeError", "StripError", "MomentDivergenceError", "MeasurePositivityError", "GridError",
    "InsufficientDataError", "DensityError", "ConfigError", "ConvergenceWarning", "DegenerateExponentialWarning",
]
