"""Closed-form value functions.

A value function factors as ``exp(-rho*s) * sum_i v_i(x_i)``. Each ``v_i``
is one of three component shapes:

* :class:`ChatterValue` -- ``Pi(x) = 2*theta*sqrt(x)``, chatter straight down to 0;
* :class:`BMThresholdValue` -- exponential pair below ``x*``, ``2 theta sqrt`` above;
* :class:`LogisticThresholdValue` -- scaled ``psi`` below ``x*``, ``2 theta sqrt`` above.

Components carry analytic first and second derivatives so the verifier
does not have to difference a function with a C^2 seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError, NoAnalyticSolutionError
from ..model import ArithmeticBM, Logistic, PowerHalf, Problem, Regime, classify_component
from ..specfun import psi, psi_derivs
from .thresholds import (
    LogisticThreshold,
    ThresholdSolution,
    solve_threshold_bm,
    solve_threshold_logistic,
)


def _nonneg(x) -> np.ndarray:
    xx = np.asarray(x, dtype=float)
    if np.any(xx < 0) or np.any(np.isnan(xx)):
        raise DomainError("value functions are defined for x >= 0 only")
    return xx


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class ChatterValue:
    theta: float

    regime = Regime.CHATTER_TO_ZERO
    x_star = None

    def __call__(self, x):
        return _out(2.0 * self.theta * np.sqrt(_nonneg(x)))

    def d1(self, x):
        return _out(self.theta * _nonneg(x) ** -0.5)

    def d2(self, x):
        return _out(-0.5 * self.theta * _nonneg(x) ** -1.5)


class _SqrtAbove:
    """Shared harvest-region branch ``2 theta (sqrt x - sqrt x*) + A``."""

    theta: float
    x_star: float

    def _above(self, x, A):
        return 2.0 * self.theta * (np.sqrt(x) - math.sqrt(self.x_star)) + A

    def _above_d1(self, x):
        return self.theta * x**-0.5

    def _above_d2(self, x):
        return -0.5 * self.theta * x**-1.5


@dataclass(frozen=True)
class BMThresholdValue(_SqrtAbove):
    sol: ThresholdSolution

    regime = Regime.INTERIOR_THRESHOLD

    @property
    def theta(self):
        return self.sol.theta

    @property
    def x_star(self):
        return self.sol.x_star

    def below(self, x):
        l1, l2 = self.sol.lam.lambda1, self.sol.lam.lambda2
        return self.sol.C * (np.expm1(l1 * x) - np.expm1(l2 * x))

    def below_d1(self, x):
        l1, l2 = self.sol.lam.lambda1, self.sol.lam.lambda2
        return self.sol.C * (l1 * np.exp(l1 * x) - l2 * np.exp(l2 * x))

    def below_d2(self, x):
        l1, l2 = self.sol.lam.lambda1, self.sol.lam.lambda2
        return self.sol.C * (l1 * l1 * np.exp(l1 * x) - l2 * l2 * np.exp(l2 * x))

    def above(self, x):
        return self._above(x, self.sol.A)

    def __call__(self, x):
        xx = _nonneg(x)
        with np.errstate(over="ignore", invalid="ignore"):
            return _out(np.where(xx <= self.x_star, self.below(np.minimum(xx, self.x_star)), self.above(xx)))

    def d1(self, x):
        xx = _nonneg(x)
        with np.errstate(divide="ignore", over="ignore"):
            return _out(np.where(xx <= self.x_star, self.below_d1(np.minimum(xx, self.x_star)), self._above_d1(xx)))

    def d2(self, x):
        xx = _nonneg(x)
        with np.errstate(divide="ignore", over="ignore"):
            return _out(np.where(xx <= self.x_star, self.below_d2(np.minimum(xx, self.x_star)), self._above_d2(xx)))


@dataclass(frozen=True)
class LogisticThresholdValue(_SqrtAbove):
    th: LogisticThreshold
    theta: float = 1.0

    regime = Regime.INTERIOR_THRESHOLD

    @property
    def x_star(self):
        return self.th.x_star

    @property
    def _scale(self):
        x = self.th.x_star
        return self.theta / (math.sqrt(x) * psi_derivs(x, self.th.params)[0])

    @property
    def A(self):
        """Value at x* from the harvest-region closed form."""
        p, x = self.th.params, self.th.x_star
        return self.theta * math.sqrt(x) * (p.mu * (1.0 - x / p.K) - 0.25 * p.sigma**2) / p.rho

    def below(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = self._scale * psi(x[pos], self.th.params)
        return out

    def below_d1(self, x):
        return self._scale * psi_derivs(x, self.th.params)[0]

    def below_d2(self, x):
        return self._scale * psi_derivs(x, self.th.params)[1]

    def above(self, x):
        return self._above(x, self.A)

    def _split(self, x, lo_fn, hi_fn):
        xx = np.atleast_1d(_nonneg(x))
        out = np.empty_like(xx)
        lo = xx < self.x_star
        if lo.any():
            out[lo] = lo_fn(xx[lo])
        if (~lo).any():
            out[~lo] = hi_fn(xx[~lo])
        return _out(out[0]) if np.ndim(x) == 0 else out

    def __call__(self, x):
        return self._split(x, self.below, self.above)

    def d1(self, x):
        return self._split(x, self.below_d1, self._above_d1)

    def d2(self, x):
        return self._split(x, self.below_d2, self._above_d2)


ComponentValue = ChatterValue | BMThresholdValue | LogisticThresholdValue


class ValueFunction:
    """``phi(s, x) = exp(-rho s) * sum_i v_i(x_i)`` with analytic derivatives.

    ``x`` may be a single point of shape ``(n,)`` or a batch ``(..., n)``.
    """

    def __init__(self, components: Sequence[ComponentValue], rho: float):
        self.components = tuple(components)
        self.rho = float(rho)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def regimes(self) -> list[Regime]:
        return [c.regime for c in self.components]

    @property
    def thresholds(self) -> list[float | None]:
        return [c.x_star for c in self.components]

    def _split(self, x):
        xx = np.asarray(x, dtype=float)
        if xx.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} components, got shape {xx.shape}")
        return xx

    def __call__(self, s: float, x):
        xx = self._split(x)
        total = sum(np.asarray(c(xx[..., i])) for i, c in enumerate(self.components))
        return _out(math.exp(-self.rho * s) * total)

    def grad(self, s: float, x):
        xx = self._split(x)
        g = np.stack([np.asarray(c.d1(xx[..., i]), dtype=float) for i, c in enumerate(self.components)], axis=-1)
        return math.exp(-self.rho * s) * g

    def hess_diag(self, s: float, x):
        # Components are separable, so the Hessian is diagonal.
        xx = self._split(x)
        h = np.stack([np.asarray(c.d2(xx[..., i]), dtype=float) for i, c in enumerate(self.components)], axis=-1)
        return math.exp(-self.rho * s) * h

    def in_nonintervention(self, x):
        """Declared no-harvest region: every interior-threshold component below its x*.

        Chatter components have no such region (harvest is immediate).
        """
        xx = self._split(x)
        inside = np.ones(xx.shape[:-1], dtype=bool)
        for i, c in enumerate(self.components):
            if c.x_star is None:
                return np.zeros(xx.shape[:-1], dtype=bool)
            inside &= xx[..., i] < c.x_star
        return inside

    def kinks(self) -> list[float | None]:
        return self.thresholds


@dataclass(frozen=True)
class AnalyticSolution:
    problem: Problem
    regimes: tuple
    thresholds: tuple
    value_fn: ValueFunction

    def value(self, s: float, x) -> float:
        return self.value_fn(s, x)


def _theta(price, i) -> float:
    if not isinstance(price, PowerHalf):
        raise NoAnalyticSolutionError(
            f"component {i}: closed forms exist only for the price theta*x^(-1/2), got {type(price).__name__}"
        )
    return price.theta


def component_value(dyn, price, rho: float, i: int = 0):
    """Closed-form value of one component; also returns its threshold object (or None)."""
    theta = _theta(price, i)
    regime = classify_component(dyn, rho)
    if regime is Regime.CHATTER_TO_ZERO:
        return ChatterValue(theta), None
    if isinstance(dyn, ArithmeticBM):
        sol = solve_threshold_bm(theta, dyn.mu, dyn.sigma, rho)
        return BMThresholdValue(sol), sol
    if isinstance(dyn, Logistic):
        th = solve_threshold_logistic(dyn.mu, dyn.K, dyn.sigma, rho)
        return LogisticThresholdValue(th, theta), th
    raise NoAnalyticSolutionError(f"component {i}: no analytic solution for general dynamics")


def solve(problem: Problem) -> AnalyticSolution:
    """Per-component regimes, thresholds and the additive value function."""
    comps, ths = [], []
    for i, (dyn, price) in enumerate(zip(problem.dynamics.components, problem.prices.components)):
        v, th = component_value(dyn, price, problem.rho, i)
        comps.append(v)
        ths.append(th)
    vf = ValueFunction(comps, problem.rho)
    return AnalyticSolution(problem, tuple(vf.regimes), tuple(ths), vf)


def value_bm(s: float, x_vec, problem: Problem) -> float:
    """Value of the Brownian harvesting problem at ``(s, x_vec)``.

    Mixed regimes compose componentwise: chatter components add
    ``2 theta_i sqrt(x_i)``, threshold components add their two-branch form.
    """
    if not all(isinstance(c, ArithmeticBM) for c in problem.dynamics.components):
        raise NoAnalyticSolutionError("value_bm needs arithmetic Brownian components")
    xx = _nonneg(x_vec)
    return solve(problem).value(s, xx)


def value_logistic(x, problem: Problem):
    """V(x) of the one-dimensional logistic problem (time 0)."""
    if problem.n != 1 or not isinstance(problem.dynamics.components[0], Logistic):
        raise NoAnalyticSolutionError("value_logistic needs a single logistic component")
    v, _ = component_value(problem.dynamics.components[0], problem.prices.components[0], problem.rho)
    return v(_nonneg(x))
