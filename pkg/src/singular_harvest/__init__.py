"""Optimal harvesting of populations under singular stochastic control.

Closed-form solutions for arithmetic Brownian and stochastic logistic
stocks priced at ``theta * x**-0.5``, a Monte Carlo engine for arbitrary
harvesting policies, and generator-based bounds for general problems.
"""

__version__ = "0.1.0"

from .errors import (
    BoundUnavailableError,
    DomainError,
    EstimationError,
    HarvestError,
    InvalidParameterError,
    NoAnalyticSolutionError,
    NumericError,
    RangeError,
    RegimeError,
)
from .model import (
    ArithmeticBM,
    ConstantPrice,
    DiffusionSpec,
    Extinction,
    GeneralDynamics,
    GeneralPrice,
    Logistic,
    PowerHalf,
    PriceSpec,
    Problem,
    Regime,
    classify_component,
    classify_regime_bm,
    classify_regime_logistic,
)
from .policy import Barrier, Chattering, NoHarvest, Policy, TakeAll
from .specfun import kummer_m, kummer_m_prime, psi

__all__ = [
    "ArithmeticBM",
    "Barrier",
    "BoundUnavailableError",
    "Chattering",
    "ConstantPrice",
    "DiffusionSpec",
    "DomainError",
    "EstimationError",
    "Extinction",
    "GeneralDynamics",
    "GeneralPrice",
    "HarvestError",
    "InvalidParameterError",
    "Logistic",
    "NoAnalyticSolutionError",
    "NoHarvest",
    "NumericError",
    "Policy",
    "PowerHalf",
    "PriceSpec",
    "Problem",
    "RangeError",
    "Regime",
    "RegimeError",
    "TakeAll",
    "classify_component",
    "classify_regime_bm",
    "classify_regime_logistic",
    "kummer_m",
    "kummer_m_prime",
    "psi",
    "__version__",
]
