"""ruinlab: Monte Carlo laboratory for finite-time ruin under constant interest,
nonhomogeneous Poisson arrivals and conditionally independent heavy-tailed claims."""

from .montecarlo import EstimateWithCI, derive_seed
from .heavy_tails import (
    Exponential,
    InsensitivityFunction,
    Lognormal,
    Pareto,
    TailDistribution,
    Weibull,
    convolution_tail_ratio,
    insensitivity_check,
)

__version__ = "0.1.0"

__all__ = [
    "EstimateWithCI",
    "derive_seed",
    "TailDistribution",
    "Pareto",
    "Lognormal",
    "Weibull",
    "Exponential",
    "InsensitivityFunction",
    "convolution_tail_ratio",
    "insensitivity_check",
    "__version__",
]
