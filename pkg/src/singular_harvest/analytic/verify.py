"""Grid check of the verification-theorem inequalities for a candidate value.

For a time-homogeneous candidate ``phi(s, x) = exp(-rho s) v(x)`` the full
generator reduces to ``(A - rho) v`` with

    A v = sum_i b_i(x_i) dv/dx_i + 0.5 sum_i sigma_i(x_i)^2 d2v/dx_i^2

(independent components: no mixed second derivatives). Three conditions are
checked pointwise:

(i)   dv/dx_i >= pi_i(x_i)            everywhere on the grid,
(ii)  (A - rho) v <= 0                everywhere on the grid,
(iii) (A - rho) v == 0                on the no-harvest region D.

The remaining conditions of the theorem constrain the strategy and a
transversality limit; they are exercised by the Monte Carlo tests instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError
from ..model import Problem

TOL_I = 1e-7
TOL_II = 1e-7
TOL_III = 1e-6
FD_REL_STEP = 2e-3
SEAM_REL_STEP = 2e-3

# 4th-order stencils (offsets in units of h).
_C1 = (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0)
_C2 = (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0)
_F1 = (np.arange(5), np.array([-25, 48, -36, 16, -3]) / 12.0)
_F2 = (np.arange(6), np.array([45, -154, 214, -156, 61, -10]) / 12.0)


@dataclass
class Grid:
    """Tensor grid, one 1-D axis per component (all points must lie in S)."""

    axes: tuple

    def __init__(self, axes: Sequence):
        ax = tuple(np.asarray(a, dtype=float) for a in axes)
        if not ax or any(a.ndim != 1 or a.size == 0 for a in ax):
            raise DomainError("grid needs one non-empty 1-D axis per component")
        if any(np.any(~(a > 0)) for a in ax):
            raise DomainError("grid points must lie in the open state space x_i > 0")
        self.axes = ax

    @classmethod
    def uniform(cls, lo: Sequence[float], hi: Sequence[float], points: int) -> "Grid":
        if points < 1:
            raise DomainError("points per axis must be >= 1")
        return cls([np.linspace(a, b, points) for a, b in zip(lo, hi)])

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass
class Violation:
    ok: bool
    checked: int
    worst_margin: float
    worst_point: list | None

    def as_dict(self):
        return {
            "pass": self.ok,
            "checked": self.checked,
            "worst_margin": self.worst_margin,
            "worst_point": self.worst_point,
        }


@dataclass
class VerificationReport:
    n_points: int
    n_in_D: int
    n_strict_gradient: int
    cond_i: Violation
    cond_ii: Violation
    cond_iii: Violation
    max_abs_generator_on_D: float
    derivatives: str
    points: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    grad_minus_price: np.ndarray = field(repr=False)
    generator: np.ndarray = field(repr=False)
    in_D: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.cond_i.ok and self.cond_ii.ok and self.cond_iii.ok

    def as_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_in_D": self.n_in_D,
            "n_strict_gradient": self.n_strict_gradient,
            "derivatives": self.derivatives,
            "conditions": {
                "i": self.cond_i.as_dict(),
                "ii": self.cond_ii.as_dict(),
                "iii": self.cond_iii.as_dict(),
            },
            "max_abs_generator_on_D": self.max_abs_generator_on_D,
            "passed": self.passed,
        }


def _stencil_eval(f1d: Callable, x: np.ndarray, h: np.ndarray, offsets, weights, order: int):
    acc = np.zeros_like(x)
    for o, w in zip(offsets, weights):
        acc += w * f1d(x + o * h)
    return acc / h**order


def fd_derivatives(f1d: Callable, x, kink: float | None = None):
    """First and second derivatives of a scalar function by 4th-order differences.

    Stencils that would straddle ``kink`` (a C^2 seam) are replaced by
    one-sided stencils drawn from the side the point lies on.
    """
    x = np.asarray(x, dtype=float)
    h = FD_REL_STEP * np.where(x > 0, x, 1.0)
    d1 = _stencil_eval(f1d, x, h, *_C1, 1)
    d2 = _stencil_eval(f1d, x, h, *_C2, 2)
    if kink is not None:
        near = np.abs(x - kink) < 2.0 * h
        if near.any():
            xn, hn = x[near], h[near]
            sign = np.where(xn <= kink, -1.0, 1.0)
            off1, w1 = _F1
            off2, w2 = _F2
            d1n = np.zeros_like(xn)
            d2n = np.zeros_like(xn)

            def at(o):
                # f1d may be tied to the full grid, so evaluate full-size arrays
                xs = x.copy()
                xs[near] = xn + sign * o * hn
                return np.asarray(f1d(xs))[near]

            for o, w in zip(off1, w1):
                d1n += w * at(o)
            for o, w in zip(off2, w2):
                d2n += w * at(o)
            d1[near] = sign * d1n / hn
            d2[near] = d2n / hn**2
    return d1, d2


def _derivatives(value_fn, pts: np.ndarray, mode: str):
    n = pts.shape[1]
    if mode == "analytic":
        return value_fn.grad(0.0, pts), value_fn.hess_diag(0.0, pts)
    grad = np.empty_like(pts)
    hess = np.empty_like(pts)
    kinks = value_fn.kinks() if hasattr(value_fn, "kinks") else [None] * n
    comps = getattr(value_fn, "components", None)
    for i in range(n):
        if comps is not None:
            # separable: difference the component alone to limit cancellation
            def f1d(xi, c=comps[i]):
                return np.asarray(c(xi), dtype=float)
        else:
            def f1d(xi, i=i):
                q = pts.copy()
                q[:, i] = xi
                return np.asarray(value_fn(0.0, q), dtype=float)

        grad[:, i], hess[:, i] = fd_derivatives(f1d, pts[:, i], kinks[i])
    return grad, hess


def _worst(margin: np.ndarray, mask: np.ndarray, pts: np.ndarray) -> Violation:
    """``margin`` >= 0 means satisfied; report the most negative one."""
    if not mask.any():
        return Violation(True, 0, math.inf, None)
    m = np.where(mask, margin, np.inf)
    k = int(np.argmin(m))
    return Violation(bool(m[k] >= 0), int(mask.sum()), float(m[k]), pts[k].tolist())


def verify_conditions(
    value_fn,
    problem: Problem,
    grid: Grid,
    region: Callable | None = None,
    derivatives: str = "auto",
) -> VerificationReport:
    """Evaluate conditions (i)-(iii) at every grid point.

    ``value_fn(s, x)`` is the candidate. ``region`` is an optional predicate
    marking the no-harvest region D; without it D is the set of points where
    (i) holds strictly for every component. ``derivatives`` is ``"analytic"``
    (needs ``grad``/``hess_diag`` on the candidate), ``"fd"`` or ``"auto"``.
    """
    if len(grid.axes) != problem.n:
        raise DomainError(f"grid has {len(grid.axes)} axes for a {problem.n}-component problem")
    if derivatives == "auto":
        derivatives = "analytic" if hasattr(value_fn, "hess_diag") else "fd"
    if derivatives not in ("analytic", "fd"):
        raise ValueError(f"unknown derivative mode {derivatives!r}")
    pts = grid.points()
    phi = np.asarray(value_fn(0.0, pts), dtype=float)
    grad, hess = _derivatives(value_fn, pts, derivatives)
    rho = problem.rho

    gen = -rho * phi
    gap = np.empty_like(pts)
    price_tol = np.empty_like(pts)
    margin_i = np.full(len(pts), np.inf)
    for i, (dyn, price) in enumerate(zip(problem.dynamics.components, problem.prices.components)):
        xi = pts[:, i]
        b = np.asarray(dyn.drift(xi), dtype=float)
        sg = np.asarray(dyn.vol(xi), dtype=float)
        gen = gen + b * grad[:, i] + 0.5 * sg * sg * hess[:, i]
        pi = np.asarray(price(xi), dtype=float)
        gap[:, i] = grad[:, i] - pi
        price_tol[:, i] = TOL_I * np.maximum(1.0, pi)
        margin_i = np.minimum(margin_i, gap[:, i] + price_tol[:, i])

    scale = rho * np.maximum(1.0, np.abs(phi))
    strict = np.all(gap > price_tol, axis=1)
    in_D = np.asarray(region(pts), dtype=bool) if region is not None else strict
    everywhere = np.ones(len(pts), dtype=bool)

    cond_i = _worst(margin_i, everywhere, pts)
    cond_ii = _worst(TOL_II * scale - gen, everywhere, pts)
    cond_iii = _worst(TOL_III * scale - np.abs(gen), in_D, pts)
    return VerificationReport(
        n_points=len(pts),
        n_in_D=int(in_D.sum()),
        n_strict_gradient=int(strict.sum()),
        cond_i=cond_i,
        cond_ii=cond_ii,
        cond_iii=cond_iii,
        max_abs_generator_on_D=float(np.max(np.abs(gen[in_D]), initial=0.0)),
        derivatives=derivatives,
        points=pts,
        phi=phi,
        grad_minus_price=gap,
        generator=gen,
        in_D=in_D,
    )


@dataclass(frozen=True)
class PastingCheck:
    x_star: float
    d1_left: float
    d1_right: float
    d2_left: float
    d2_right: float
    method: str

    @property
    def rel_d1(self) -> float:
        return abs(self.d1_left - self.d1_right) / max(abs(self.d1_left), abs(self.d1_right))

    @property
    def rel_d2(self) -> float:
        return abs(self.d2_left - self.d2_right) / max(abs(self.d2_left), abs(self.d2_right))

    def ok(self, tol: float = 1e-6) -> bool:
        return self.rel_d1 <= tol and self.rel_d2 <= tol

    def as_dict(self, tol: float = 1e-6) -> dict:
        return {
            "x_star": self.x_star,
            "method": self.method,
            "d1_left": self.d1_left,
            "d1_right": self.d1_right,
            "d2_left": self.d2_left,
            "d2_right": self.d2_right,
            "rel_d1": self.rel_d1,
            "rel_d2": self.rel_d2,
            "pass": self.ok(tol),
        }


def smooth_pasting(component, method: str = "fd") -> PastingCheck:
    """One-sided first and second derivatives of a threshold component at x*.

    ``method="branch"`` differentiates each closed-form branch analytically;
    ``method="fd"`` applies one-sided 4th-order differences to the composite
    function from the left and from the right.
    """
    x = component.x_star
    if x is None:
        raise DomainError("component has no threshold")
    if method == "branch":
        return PastingCheck(
            x,
            float(component.below_d1(x)),
            float(component._above_d1(x)),
            float(component.below_d2(x)),
            float(component._above_d2(x)),
            method,
        )
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    h = SEAM_REL_STEP * max(1.0, x)
    f = lambda v: float(component(v))
    (o1, w1), (o2, w2) = _F1, _F2
    left1 = -sum(w * f(x - o * h) for o, w in zip(o1, w1)) / h
    right1 = sum(w * f(x + o * h) for o, w in zip(o1, w1)) / h
    left2 = sum(w * f(x - o * h) for o, w in zip(o2, w2)) / h**2
    right2 = sum(w * f(x + o * h) for o, w in zip(o2, w2)) / h**2
    return PastingCheck(x, left1, right1, left2, right2, method)
