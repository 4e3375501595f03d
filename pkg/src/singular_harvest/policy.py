"""Harvesting strategies understood by the simulator.

A :class:`Policy` assigns one strategy to each component:

* :class:`NoHarvest` -- never harvest;
* :class:`TakeAll` -- harvest the whole stock in one lump at the start;
* :class:`Chattering` -- ``m`` equal lumps spread over ``[s, s + eta]``,
  emptying the stock; ``eta = 0`` means all lumps at time ``s``;
* :class:`Barrier` -- chatter down to ``x_star`` if above it, then reflect
  the stock at ``x_star`` by harvesting any excess.

Lump ``k`` (1-based) of a chattering strategy removes the fraction
``1/(m - k + 1)`` of the stock present just before it. Without diffusion
between lumps this is exactly ``x/m`` per lump, the schedule whose
left-point price sums converge to ``Pi(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, InvalidParameterError
from .model import ConstantPrice, PowerHalf, PriceFn

NO_HARVEST, TAKE_ALL, CHATTER, BARRIER = 0, 1, 2, 3


@dataclass(frozen=True)
class NoHarvest:
    code = NO_HARVEST

    def params(self):
        return (0.0, 0.0)


@dataclass(frozen=True)
class TakeAll:
    code = TAKE_ALL

    def params(self):
        return (0.0, 0.0)


@dataclass(frozen=True)
class Chattering:
    m: int
    eta: float = 0.0

    code = CHATTER

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParameterError("chattering needs a positive integer number of lumps")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise InvalidParameterError("chattering time span eta must be >= 0")

    def params(self):
        return (float(self.m), float(self.eta))


@dataclass(frozen=True)
class Barrier:
    x_star: float

    code = BARRIER

    def __post_init__(self):
        if not (self.x_star > 0 and math.isfinite(self.x_star)):
            raise InvalidParameterError("barrier level must be a positive finite number")

    def params(self):
        return (float(self.x_star), 0.0)


Strategy = Union[NoHarvest, TakeAll, Chattering, Barrier]


@dataclass(frozen=True)
class Policy:
    components: tuple
    label: str = ""

    def __init__(self, components: Sequence[Strategy], label: str = ""):
        comps = tuple(components)
        for c in comps:
            if not isinstance(c, (NoHarvest, TakeAll, Chattering, Barrier)):
                raise InvalidParameterError(f"unknown strategy {c!r}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "label", label or "+".join(type(c).__name__ for c in comps))

    @classmethod
    def uniform(cls, strategy: Strategy, n: int, label: str = "") -> "Policy":
        return cls([strategy] * n, label)

    def __len__(self):
        return len(self.components)

    def encode(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer codes and a ``(n, 2)`` parameter table for the path kernel."""
        codes = np.array([c.code for c in self.components], dtype=np.int64)
        params = np.array([c.params() for c in self.components], dtype=np.float64).reshape(len(self), 2)
        return codes, params


def chattering_lump_value(price: PriceFn, x_from: float, x_to: float) -> float:
    """Undiscounted value of chattering the stock from ``x_from`` down to ``x_to``.

    Equals the integral of the price over ``[x_to, x_from]``.
    """
    if x_to < 0 or x_to > x_from:
        raise DomainError(f"need 0 <= x_to <= x_from, got x_from={x_from}, x_to={x_to}")
    if x_from == x_to:
        return 0.0
    if isinstance(price, PowerHalf):
        return 2.0 * price.theta * (math.sqrt(x_from) - math.sqrt(x_to))
    if isinstance(price, ConstantPrice):
        return price.p * (x_from - x_to)
    val, _ = quad(lambda v: float(price(v)), x_to, x_from, epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def policy_events(strategy: Strategy, state: float, t: float, dt: float, s: float, lumps_done: int = 0):
    """Harvest lumps a strategy takes during the step ``(t, t + dt]``.

    ``state`` is the post-diffusion stock at the end of the step (for the
    first call use ``t = s - dt`` style bookkeeping via :func:`initial_events`).
    Returns ``[(time, amount), ...]`` in execution order; the amounts chain,
    each computed from the stock left by the previous one.
    """
    if isinstance(strategy, Barrier):
        excess = state - strategy.x_star
        return [(t + dt, excess)] if excess > 0 else []
    if isinstance(strategy, Chattering) and strategy.eta > 0:
        out = []
        x = state
        k = lumps_done
        while k < strategy.m:
            tk = s + (k + 1) * strategy.eta / strategy.m
            if tk > t + dt:
                break
            amount = x / (strategy.m - k)
            out.append((tk, amount))
            x -= amount
            k += 1
        return out
    return []


def initial_events(strategy: Strategy, state: float, s: float):
    """Lumps taken at time ``s`` before any diffusion."""
    if isinstance(strategy, TakeAll):
        return [(s, state)]
    if isinstance(strategy, Barrier):
        return [(s, state - strategy.x_star)] if state > strategy.x_star else []
    if isinstance(strategy, Chattering) and strategy.eta == 0:
        out = []
        x = state
        for k in range(strategy.m):
            amount = x / (strategy.m - k)
            out.append((s, amount))
            x -= amount
        return out
    return []


def chattering_riemann_sum(theta: float, x: float, m: int) -> float:
    """Left-point price sum of ``m`` equal lumps of ``x/m``: sum theta*(x - k x/m)^(-1/2) * x/m, k = 0..m-1."""
    k = np.arange(m, dtype=float)
    return float(math.fsum(theta * (x - k * x / m) ** -0.5 * (x / m)))
