"""Problem instances: uncontrolled dynamics, density-dependent prices, regimes.

Every component lives on the half line (0, inf); a component is extinct once
its state reaches 0. Components are driven by independent Brownian motions,
so the drift and volatility of component ``i`` depend on ``x_i`` only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InvalidParameterError, NoAnalyticSolutionError

ScalarFn = Callable[[float], float]


def _const_like(x, value: float):
    return np.full(np.shape(x), value) if np.ndim(x) else value


def _finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")


class Regime(str, enum.Enum):
    CHATTER_TO_ZERO = "chatter_to_zero"
    INTERIOR_THRESHOLD = "interior_threshold"


class Extinction(str, enum.Enum):
    # Path dies when any component hits 0.
    JOINT = "joint"
    # Each component is absorbed at 0 on its own.
    COMPONENTWISE = "componentwise"


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArithmeticBM:
    """dX = mu dt + sigma dB."""

    mu: float
    sigma: float

    kind = "bm"

    def __post_init__(self):
        _finite("ArithmeticBM parameters", self.mu, self.sigma)
        if self.sigma == 0:
            raise InvalidParameterError("ArithmeticBM needs sigma != 0")

    def drift(self, x):
        return _const_like(x, self.mu)

    def vol(self, x):
        return _const_like(x, abs(self.sigma))


@dataclass(frozen=True)
class Logistic:
    """dX = mu X (1 - X/K) dt + sigma X dB."""

    mu: float
    K: float
    sigma: float

    kind = "logistic"

    def __post_init__(self):
        _finite("Logistic parameters", self.mu, self.K, self.sigma)
        if not (self.mu > 0 and self.K > 0 and self.sigma > 0):
            raise InvalidParameterError("Logistic needs mu > 0, K > 0, sigma > 0")

    def drift(self, x):
        return self.mu * x * (1.0 - x / self.K)

    def vol(self, x):
        return self.sigma * x


@dataclass(frozen=True)
class GeneralDynamics:
    """Arbitrary scalar drift and volatility; simulation and bounds only."""

    drift_fn: ScalarFn
    vol_fn: ScalarFn

    kind = "general"

    def drift(self, x):
        return self.drift_fn(x)

    def vol(self, x):
        return self.vol_fn(x)


ComponentDynamics = Union[ArithmeticBM, Logistic, GeneralDynamics]


@dataclass(frozen=True)
class DiffusionSpec:
    components: tuple

    def __init__(self, components: Sequence[ComponentDynamics]):
        comps = tuple(components)
        if not comps:
            raise InvalidParameterError("DiffusionSpec needs at least one component")
        for c in comps:
            if not isinstance(c, (ArithmeticBM, Logistic, GeneralDynamics)):
                raise InvalidParameterError(f"unknown component dynamics {c!r}")
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return len(self.components)

    @property
    def default_extinction(self) -> Extinction:
        # Joint killing is the two-population Brownian example's convention;
        # anything else is absorbed component by component.
        if all(isinstance(c, ArithmeticBM) for c in self.components):
            return Extinction.JOINT
        return Extinction.COMPONENTWISE


# ---------------------------------------------------------------------------
# prices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerHalf:
    """pi(x) = theta * x**-0.5."""

    theta: float

    kind = "power_half"

    def __post_init__(self):
        _finite("PowerHalf theta", self.theta)
        if self.theta <= 0:
            raise InvalidParameterError("PowerHalf needs theta > 0")

    def __call__(self, x):
        # (x)^+ clamp: the price is +inf at an empty stock.
        with np.errstate(divide="ignore"):
            return self.theta * np.maximum(x, 0.0) ** -0.5

    def derivative(self, x):
        return -0.5 * self.theta * np.asarray(x, dtype=float) ** -1.5


@dataclass(frozen=True)
class ConstantPrice:
    p: float

    kind = "constant"

    def __post_init__(self):
        _finite("ConstantPrice p", self.p)
        if self.p <= 0:
            raise InvalidParameterError("ConstantPrice needs p > 0")

    def __call__(self, x):
        return _const_like(x, self.p)

    def derivative(self, x):
        return _const_like(x, 0.0)


_PRICE_PROBE = np.geomspace(1e-6, 1e6, 241)


@dataclass(frozen=True)
class GeneralPrice:
    """User supplied nonincreasing, nonnegative price; checked by sampling."""

    pi: ScalarFn
    dpi: ScalarFn | None = None

    kind = "general"

    def __post_init__(self):
        vals = np.array([float(self.pi(float(v))) for v in _PRICE_PROBE])
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise InvalidParameterError("GeneralPrice must be finite and nonnegative on (0, inf)")
        if np.any(np.diff(vals) > 1e-12 * np.maximum(1.0, np.abs(vals[:-1]))):
            raise InvalidParameterError("GeneralPrice must be nonincreasing")

    def __call__(self, x):
        return self.pi(x)

    def derivative(self, x):
        if self.dpi is not None:
            return self.dpi(x)
        # relative step near the eps^(1/3) optimum of a central difference
        h = 6e-6 * abs(x) if x != 0 else 6e-6
        return (self.pi(x + h) - self.pi(x - h)) / (2 * h)


PriceFn = Union[PowerHalf, ConstantPrice, GeneralPrice]


@dataclass(frozen=True)
class PriceSpec:
    rho: float
    components: tuple

    def __init__(self, rho: float, components: Sequence[PriceFn]):
        _finite("rho", rho)
        if rho <= 0:
            raise InvalidParameterError("discount rate rho must be > 0")
        comps = tuple(components)
        if not comps:
            raise InvalidParameterError("PriceSpec needs at least one component")
        object.__setattr__(self, "rho", float(rho))
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class Problem:
    """Dynamics and prices of the same dimension."""

    dynamics: DiffusionSpec
    prices: PriceSpec
    extinction: Extinction = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.dynamics) != len(self.prices):
            raise InvalidParameterError(
                f"{len(self.dynamics)} dynamics components but {len(self.prices)} prices"
            )
        if self.extinction is None:
            object.__setattr__(self, "extinction", self.dynamics.default_extinction)
        else:
            object.__setattr__(self, "extinction", Extinction(self.extinction))

    @property
    def rho(self) -> float:
        return self.prices.rho

    @property
    def n(self) -> int:
        return len(self.dynamics)

    def regimes(self) -> list[Regime]:
        return [classify_component(c, self.rho) for c in self.dynamics.components]


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


def classify_regime_bm(mu: float, sigma: float, rho: float) -> Regime:
    """Regime of an arithmetic Brownian component with price theta*x**-0.5.

    ``mu**2 <= 2*rho*sigma**2`` (boundary included) means chattering down to
    zero is optimal. A nonpositive drift is always in that regime: the
    candidate 2*theta*sqrt(x) then has a strictly negative generator.
    """
    _finite("classify_regime_bm arguments", mu, sigma, rho)
    if sigma == 0:
        raise InvalidParameterError("sigma must be nonzero")
    if rho <= 0:
        raise InvalidParameterError("rho must be > 0")
    if mu <= 0 or mu * mu <= 2.0 * rho * sigma * sigma:
        return Regime.CHATTER_TO_ZERO
    return Regime.INTERIOR_THRESHOLD


def classify_regime_logistic(mu: float, sigma: float, rho: float) -> Regime:
    _finite("classify_regime_logistic arguments", mu, sigma, rho)
    if mu <= 0 or sigma <= 0 or rho <= 0:
        raise InvalidParameterError("logistic regime needs mu, sigma, rho > 0")
    if mu <= 2.0 * rho + 0.25 * sigma * sigma:
        return Regime.CHATTER_TO_ZERO
    return Regime.INTERIOR_THRESHOLD


def classify_component(dyn: ComponentDynamics, rho: float) -> Regime:
    if isinstance(dyn, ArithmeticBM):
        return classify_regime_bm(dyn.mu, dyn.sigma, rho)
    if isinstance(dyn, Logistic):
        return classify_regime_logistic(dyn.mu, dyn.sigma, rho)
    raise NoAnalyticSolutionError("no analytic solution for general dynamics")
