"""Characteristic roots and free-boundary thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from ..errors import DomainError, InvalidParameterError, NumericError, RegimeError
from ..model import Regime, classify_regime_bm, classify_regime_logistic
from ..specfun import Z_MAX, PsiParams, psi, psi_derivs


@dataclass(frozen=True)
class LambdaPair:
    lambda1: float
    lambda2: float

    def residuals(self, mu: float, sigma: float, rho: float) -> tuple[float, float]:
        q = lambda lam: -rho + mu * lam + 0.5 * sigma * sigma * lam * lam
        return abs(q(self.lambda1)), abs(q(self.lambda2))


def lambda_roots(mu: float, sigma: float, rho: float) -> LambdaPair:
    """Roots of ``-rho + mu*l + 0.5*sigma**2*l**2 = 0``, ordered l1 > 0 > l2."""
    for v in (mu, sigma, rho):
        if not math.isfinite(v):
            raise InvalidParameterError("lambda_roots needs finite arguments")
    if sigma == 0 or rho <= 0:
        raise InvalidParameterError("lambda_roots needs sigma != 0 and rho > 0")
    s2 = sigma * sigma
    d = math.sqrt(mu * mu + 2.0 * rho * s2)
    # Cancellation-free pairing: the root with the large numerator is formed
    # directly, the other one through the product l1*l2 = -2 rho / sigma**2.
    if mu >= 0:
        l2 = -(mu + d) / s2
        l1 = 2.0 * rho / (mu + d)
    else:
        l1 = (d - mu) / s2
        l2 = -2.0 * rho / (d - mu)
    return LambdaPair(l1, l2)


@dataclass(frozen=True)
class ThresholdSolution:
    """Interior threshold of a Brownian component and its pasting constants.

    ``residuals`` holds the absolute errors of value matching, first-derivative
    matching and second-derivative matching at ``x_star``;
    ``ratio_residual`` is the error of the reduced one-unknown equation.
    """

    x_star: float
    C: float
    A: float
    lam: LambdaPair
    theta: float
    residuals: tuple[float, float, float]
    ratio_residual: float
    roots: tuple[float, ...] = field(default=())

    def max_residual(self) -> float:
        return max(self.residuals)


def _cleared(x, l1, l2):
    """exp(-l1*x) * (num + 2*x*den): same zeros as the ratio equation, no pole."""
    e = np.exp((l2 - l1) * x)
    return (l1 - l2 * e) + 2.0 * x * (l1 * l1 - l2 * l2 * e)


def _cleared_prime(x, l1, l2):
    e = math.exp((l2 - l1) * x)
    de = (l2 - l1) * e
    return -l2 * de + 2.0 * (l1 * l1 - l2 * l2 * e) - 2.0 * x * l2 * l2 * de


def _sign_changes(f, grid):
    vals = f(grid)
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(vals == 0)[0]
    return idx, exact, vals


def _bm_pasting(x, lam: LambdaPair, theta: float):
    l1, l2 = lam.lambda1, lam.lambda2
    e1, e2 = math.exp(l1 * x), math.exp(l2 * x)
    num = l1 * e1 - l2 * e2
    den = l1 * l1 * e1 - l2 * l2 * e2
    C = theta * x**-0.5 / num
    A = C * (e1 - e2)
    res = (
        abs(C * (e1 - e2) - A),
        abs(C * num - theta * x**-0.5),
        abs(C * den + 0.5 * theta * x**-1.5),
    )
    return C, A, res, abs(num / den + 2.0 * x)


SCAN_LO = 1e-8
SCAN_HI = 1e3
SCAN_POINTS = 4001


def solve_threshold_bm(theta: float, mu: float, sigma: float, rho: float) -> ThresholdSolution:
    """Threshold x* of a Brownian component in the interior-threshold regime.

    x* solves ``(l1 e^{l1 x} - l2 e^{l2 x}) / (l1^2 e^{l1 x} - l2^2 e^{l2 x}) = -2x``.
    That equation has two positive roots; only the larger one makes the
    generator of the ``2*theta*sqrt(x)`` branch nonpositive above x*, so it
    is the one returned (the smaller root is kept in ``roots`` for reference).
    """
    if theta <= 0:
        raise InvalidParameterError("theta must be > 0")
    if classify_regime_bm(mu, sigma, rho) is not Regime.INTERIOR_THRESHOLD:
        raise RegimeError(
            f"mu={mu}, sigma={sigma}, rho={rho} is in the chatter-to-zero regime; no interior threshold"
        )
    lam = lambda_roots(mu, sigma, rho)
    l1, l2 = lam.lambda1, lam.lambda2
    grid = np.geomspace(SCAN_LO, SCAN_HI, SCAN_POINTS)
    idx, exact, _ = _sign_changes(lambda x: _cleared(x, l1, l2), grid)
    roots = [float(grid[i]) for i in exact]
    for i in idx:
        r = bisect(_cleared, grid[i], grid[i + 1], args=(l1, l2), xtol=1e-12, rtol=4 * np.finfo(float).eps)
        roots.append(float(r))
    if not roots:
        raise NumericError(
            f"no sign change of the threshold equation on ({SCAN_LO}, {SCAN_HI}) for mu={mu}, sigma={sigma}, rho={rho}"
        )
    roots.sort()
    x = roots[-1]
    lo_b, hi_b = x - 1e-9 * max(1.0, x), x + 1e-9 * max(1.0, x)
    for _ in range(3):
        g = _cleared(x, l1, l2)
        step = g / _cleared_prime(x, l1, l2)
        cand = x - step
        if lo_b <= cand <= hi_b and abs(_cleared(cand, l1, l2)) <= abs(g):
            x = cand
    roots[-1] = x
    C, A, res, ratio_res = _bm_pasting(x, lam, theta)
    return ThresholdSolution(
        x_star=x, C=C, A=A, lam=lam, theta=theta, residuals=res, ratio_residual=ratio_res, roots=tuple(roots)
    )


def bm_pasting_constants(x_star: float, theta: float, mu: float, sigma: float, rho: float) -> ThresholdSolution:
    """C and A from value and first-derivative matching at a *given* threshold.

    Used to build deliberately mis-placed candidates; for the true x* this
    agrees with :func:`solve_threshold_bm`.
    """
    if x_star <= 0:
        raise DomainError("threshold must be positive")
    lam = lambda_roots(mu, sigma, rho)
    C, A, res, ratio_res = _bm_pasting(x_star, lam, theta)
    return ThresholdSolution(x_star, C, A, lam, theta, res, ratio_res, (x_star,))


# ---------------------------------------------------------------------------
# logistic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticThreshold:
    x_star: float
    residual: float
    params: PsiParams
    sign_changes: int


def logistic_threshold_fn(x, params: PsiParams):
    d1, d2 = psi_derivs(x, params)
    return x * d2 + 0.5 * d1


def solve_threshold_logistic(
    mu: float, K: float, sigma: float, rho: float, scan_points: int = 2001
) -> LogisticThreshold:
    """Unique root of ``x psi''(x) + psi'(x)/2`` for an interior-threshold logistic component."""
    if classify_regime_logistic(mu, sigma, rho) is not Regime.INTERIOR_THRESHOLD:
        raise RegimeError(
            f"mu={mu} <= 2 rho + sigma^2/4 = {2 * rho + sigma * sigma / 4}: chatter-to-zero regime"
        )
    p = PsiParams.from_logistic(mu, K, sigma, rho)
    lo = 1e-8 * K
    hi = min(5.0 * K, Z_MAX / p.z_scale)
    grid = np.geomspace(lo, hi, scan_points)
    idx, exact, _ = _sign_changes(lambda x: logistic_threshold_fn(x, p), grid)
    n_changes = len(idx) + len(exact)
    if n_changes == 0:
        raise NumericError(
            f"x psi'' + psi'/2 has no sign change on ({lo:g}, {hi:g}); "
            f"theta={p.theta_exp:.6g}, b={p.b_param:.6g}, z_scale={p.z_scale:.6g}"
        )
    if len(exact):
        x = float(grid[exact[0]])
    else:
        i = idx[0]
        x = bisect(lambda v: float(logistic_threshold_fn(v, p)), grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return LogisticThreshold(
        x_star=float(x), residual=abs(float(logistic_threshold_fn(x, p))), params=p, sign_changes=n_changes
    )


def logistic_value_at_threshold(th: LogisticThreshold) -> tuple[float, float]:
    """The two closed-form expressions for V(x*) (below/above branch), theta = 1."""
    p, x = th.params, th.x_star
    d1, _ = psi_derivs(x, p)
    below = psi(x, p) / (math.sqrt(x) * d1)
    above = math.sqrt(x) * (p.mu * (1.0 - x / p.K) - 0.25 * p.sigma**2) / p.rho
    return below, above
