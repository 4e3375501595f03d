"""Chattering lower bound and generator-based upper bound on the optimal yield.

With ``Pi_i(x) = int_0^x pi_i(v) dv`` and

    (G Pi_i)(x) = 0.5 sigma_i(x)^2 pi_i'(x) + b_i(x) pi_i(x) - rho Pi_i(x),

every admissible strategy satisfies

    sum_i Pi_i(x_i) <= sup J <= sum_i Pi_i(x_i) + sum_i (M_i / rho) (1 - E[exp(-rho T)])

where ``M_i = sup_x (G Pi_i)(x)``. Negative ``M_i`` are replaced by 0, which
keeps the bound valid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize_scalar

from .errors import BoundUnavailableError, DomainError
from .model import ArithmeticBM, ConstantPrice, PowerHalf, Problem


def big_pi(price, x: float) -> float:
    """Integral of the price from 0 to ``x``."""
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"big_pi needs a finite x >= 0, got {x}")
    if x == 0:
        return 0.0
    if isinstance(price, PowerHalf):
        return 2.0 * price.theta * math.sqrt(x)
    if isinstance(price, ConstantPrice):
        return price.p * x
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(lambda v: float(price(v)), 0.0, x, epsabs=0.0, epsrel=1e-10, limit=500)
        except (IntegrationWarning, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"price is not integrable on (0, {x}]: {exc}") from None
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise DomainError(f"price is not integrable on (0, {x}] (estimate {val}, error {err})")
    return float(val)


def g_rho_pi(dyn, price, x: float, rho: float) -> float:
    """Discounted generator applied through Pi at ``x``."""
    if not x > 0:
        raise DomainError("g_rho_pi needs x > 0")
    if isinstance(dyn, ArithmeticBM) and isinstance(price, PowerHalf):
        return price.theta * x**-1.5 * (dyn.mu * x - 0.25 * dyn.sigma**2 - 2.0 * rho * x * x)
    sg = float(dyn.vol(x))
    return 0.5 * sg * sg * float(price.derivative(x)) + float(dyn.drift(x)) * float(price(x)) - rho * big_pi(price, x)


def x_tilde_bm(mu: float, sigma: float, rho: float) -> float:
    """Maximiser of ``G Pi`` for a Brownian component with price theta*x^(-1/2)."""
    if not rho > 0:
        raise DomainError("rho must be > 0")
    return (-mu + math.sqrt(mu * mu + 6.0 * sigma * sigma * rho)) / (4.0 * rho)


def g_rho_pi_slope_bm(mu: float, sigma: float, rho: float, theta: float, x: float) -> float:
    """d/dx of ``G Pi`` for the Brownian/power-half case."""
    return theta * x**-2.5 * (-rho * x * x - 0.5 * mu * x + 0.375 * sigma * sigma)


_SCAN = np.geomspace(1e-10, 1e10, 801)


def sup_g_rho_pi(dyn, price, rho: float) -> tuple[float, float]:
    """``(M, x_tilde)``: supremum of ``G Pi`` over ``x > 0`` and where it is attained.

    A supremum approached only at the edge of the scan window is accepted if
    extending the window by three decades changes it by < 1e-6 relative
    (e.g. a constant price near 0); otherwise the generator is treated as
    unbounded above.
    """
    if isinstance(dyn, ArithmeticBM) and isinstance(price, PowerHalf):
        xt = x_tilde_bm(dyn.mu, dyn.sigma, rho)
        return g_rho_pi(dyn, price, xt, rho), xt
    f = lambda v: g_rho_pi(dyn, price, float(v), rho)
    vals = np.array([f(v) for v in _SCAN])
    vals = np.where(np.isnan(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    if k in (0, len(_SCAN) - 1):
        far = _SCAN[k] * (1e-3 if k == 0 else 1e3)
        v_far = f(far)
        if not (math.isfinite(v_far) and abs(v_far - vals[k]) <= 1e-6 * max(1.0, abs(vals[k]))):
            raise BoundUnavailableError("generator through Pi appears unbounded above")
        return float(max(vals[k], v_far)), float(_SCAN[k])
    lo, hi = _SCAN[k - 1], _SCAN[k + 1]
    res = minimize_scalar(lambda v: -f(v), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * hi})
    if -res.fun >= vals[k]:
        return float(-res.fun), float(res.x)
    return float(vals[k]), float(_SCAN[k])


@dataclass(frozen=True)
class ComponentBound:
    Pi_value: float
    M: float
    x_tilde: float


@dataclass(frozen=True)
class BoundsReport:
    lower: float
    upper_conservative: float
    upper_mc: float | None
    per_component: tuple

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper_conservative": self.upper_conservative,
            "upper_mc": self.upper_mc,
            "per_component": [
                {"Pi_value": c.Pi_value, "M": c.M, "x_tilde": c.x_tilde} for c in self.per_component
            ],
        }


def bounds_report(problem: Problem, x0, extinction_discount: float | None = None, s: float = 0.0) -> BoundsReport:
    """Lower and upper bounds on the optimal yield from ``(s, x0)``.

    ``extinction_discount`` is an estimate of ``E[exp(-rho T)]`` in [0, 1];
    pass a value that is low for the bound to stay conservative (for
    example the no-harvest extinction discount with censored paths counted
    as 0: harvesting can only bring extinction forward).
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != problem.n:
        raise DomainError(f"x0 has {x0.shape[0]} components, problem has {problem.n}")
    if np.any(x0 < 0):
        raise DomainError("x0 must be componentwise >= 0")
    rho = problem.rho
    disc = math.exp(-rho * s)
    comps = []
    for dyn, price, xi in zip(problem.dynamics.components, problem.prices.components, x0):
        M, xt = sup_g_rho_pi(dyn, price, rho)
        comps.append(ComponentBound(big_pi(price, float(xi)), M, xt))
    lower = disc * math.fsum(c.Pi_value for c in comps)
    slack = math.fsum(max(c.M, 0.0) for c in comps) / rho
    upper = lower + disc * slack
    upper_mc = None
    if extinction_discount is not None:
        if not 0.0 <= extinction_discount <= 1.0:
            raise DomainError("extinction discount estimate must lie in [0, 1]")
        upper_mc = lower + disc * slack * (1.0 - extinction_discount)
    return BoundsReport(lower, upper, upper_mc, tuple(comps))
