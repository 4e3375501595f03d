"""Kummer's confluent hypergeometric function and the logistic fundamental solution.

``psi`` is the increasing solution of

    0.5*sigma**2*x**2*u'' + mu*x*(1 - x/K)*u' - rho*u = 0,

namely ``psi(x) = x**theta * M(theta, 2*theta + 2*mu/sigma**2, (2*mu/(K*sigma**2))*x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError, RangeError

Z_MAX = 50.0
MAX_TERMS = 10_000
_REL_STOP = 1e-16


def _is_nonpositive_int(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _series(a: float, b: float, z: np.ndarray) -> np.ndarray:
    total = np.ones_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(MAX_TERMS):
        term = np.where(active, term * ((a + k) * z / ((b + k) * (k + 1))), 0.0)
        total = total + term
        # Only stop once the terms are past their peak; a tiny early term
        # (small |a|) says nothing about the tail.
        decreasing = np.abs((a + k + 1) * z) < np.abs((b + k + 1) * (k + 2))
        small = np.abs(term) <= _REL_STOP * np.abs(total)
        active &= ~((small & decreasing) | (term == 0.0))
        if not active.any():
            return total
    raise NumericError(f"Kummer series did not converge in {MAX_TERMS} terms (a={a}, b={b})")


def kummer_m(a: float, b: float, z):
    """M(a, b, z) = sum_k (a)_k z**k / ((b)_k k!), vectorised over ``z``.

    Negative arguments go through Kummer's transformation
    ``M(a, b, z) = exp(z) * M(b - a, b, -z)`` so the summed terms never
    alternate in sign (unless ``a`` is a nonpositive integer, when the
    series is a polynomial and is summed directly).
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("kummer_m needs finite a and b")
    if _is_nonpositive_int(b):
        raise DomainError(f"kummer_m undefined for b = {b} (nonpositive integer)")
    zz = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zz)):
        raise DomainError("kummer_m needs finite z")
    if np.any(np.abs(zz) > Z_MAX):
        raise RangeError(f"|z| > {Z_MAX} is outside the supported range of kummer_m")
    scalar = zz.ndim == 0
    zz = np.atleast_1d(zz)
    out = np.empty_like(zz)
    neg = zz < 0
    if _is_nonpositive_int(a):
        out[:] = _series(a, b, zz)
    else:
        if (~neg).any():
            out[~neg] = _series(a, b, zz[~neg])
        if neg.any():
            out[neg] = np.exp(zz[neg]) * _series(b - a, b, -zz[neg])
    return float(out[0]) if scalar else out


def kummer_m_prime(a: float, b: float, z):
    """d/dz M(a, b, z) = (a/b) M(a+1, b+1, z)."""
    return (a / b) * kummer_m(a + 1.0, b + 1.0, z)


@dataclass(frozen=True)
class PsiParams:
    theta_exp: float
    b_param: float
    z_scale: float
    mu: float
    sigma: float
    K: float
    rho: float

    @classmethod
    def from_logistic(cls, mu: float, K: float, sigma: float, rho: float) -> "PsiParams":
        if not (mu > 0 and K > 0 and sigma > 0 and rho > 0):
            raise DomainError("psi needs mu, K, sigma, rho > 0")
        s2 = sigma * sigma
        half = 0.5 - mu / s2
        theta = half + math.sqrt(half * half + 2.0 * rho / s2)
        return cls(
            theta_exp=theta,
            b_param=2.0 * theta + 2.0 * mu / s2,
            z_scale=2.0 * mu / (K * s2),
            mu=mu,
            sigma=sigma,
            K=K,
            rho=rho,
        )


def _check_x(x) -> np.ndarray:
    xx = np.asarray(x, dtype=float)
    if np.any(~(xx > 0)):
        raise DomainError("psi is defined for x > 0 only")
    return xx


def psi(x, params: PsiParams):
    xx = _check_x(x)
    p = params
    val = xx**p.theta_exp * kummer_m(p.theta_exp, p.b_param, p.z_scale * xx)
    return float(val) if np.ndim(val) == 0 else val


def psi_derivs(x, params: PsiParams):
    """Return ``(psi', psi'')`` via term-wise differentiation of the series."""
    xx = _check_x(x)
    p = params
    a, b, c, th = p.theta_exp, p.b_param, p.z_scale, p.theta_exp
    zx = c * xx
    m0 = kummer_m(a, b, zx)
    m1 = (a / b) * kummer_m(a + 1, b + 1, zx)
    m2 = (a * (a + 1) / (b * (b + 1))) * kummer_m(a + 2, b + 2, zx)
    xt = xx**th
    d1 = th * xt / xx * m0 + xt * c * m1
    d2 = th * (th - 1) * xt / (xx * xx) * m0 + 2 * th * xt / xx * c * m1 + xt * c * c * m2
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


def psi_ode_residual(x, params: PsiParams):
    """(A - rho) psi at ``x``; zero up to rounding for the exact solution."""
    xx = np.asarray(x, dtype=float)
    p = params
    d1, d2 = psi_derivs(xx, p)
    return (
        0.5 * p.sigma**2 * xx**2 * d2
        + p.mu * xx * (1.0 - xx / p.K) * d1
        - p.rho * psi(xx, p)
    )
