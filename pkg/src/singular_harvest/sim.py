"""Euler-Maruyama simulation of harvested diffusions and Monte Carlo yields.

Each path owns two Philox streams derived from ``(seed, path_index)``: one
for the Gaussian increments (one draw per component per step, dead
components included, so policies compared under the same seed see the same
noise) and one for the Brownian-bridge extinction test. Results therefore do
not depend on how paths are batched or ordered.

Within a step the diffusion increment comes first, then extinction is
checked, then the policy harvests. Lumps scheduled at the start time are
taken before any diffusion.
"""

from __future__ import annotations

import math
import types
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import EstimationError, InvalidParameterError
from .model import (
    ArithmeticBM,
    ConstantPrice,
    Extinction,
    Logistic,
    PowerHalf,
    Problem,
)
from .policy import BARRIER, CHATTER, TAKE_ALL, Policy, chattering_lump_value

LEFT_PRICE = "left"
INTEGRAL_PRICE = "integral"

_DYN_BM, _DYN_LOGISTIC = 0, 1
_PRICE_POWER_HALF, _PRICE_CONSTANT = 0, 1


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_max: float = 30.0
    n_paths: int = 1000
    seed: int = 0
    lump_pricing: str = LEFT_PRICE
    # Brownian-bridge test for crossings of 0 between grid times.
    bridge: bool = True
    extinction: Extinction | None = None

    def __post_init__(self):
        if not (self.dt > 0 and self.t_max > 0 and math.isfinite(self.t_max)):
            raise InvalidParameterError("dt and t_max must be positive and finite")
        if self.dt >= self.t_max:
            raise InvalidParameterError("dt must be smaller than t_max")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidParameterError("n_paths must be a positive integer")
        if self.lump_pricing not in (LEFT_PRICE, INTEGRAL_PRICE):
            raise InvalidParameterError(f"lump_pricing must be '{LEFT_PRICE}' or '{INTEGRAL_PRICE}'")
        if not (0 <= self.seed < 2**64):
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))


@dataclass
class PathResult:
    discounted_yield: float
    extinction_time: float | None  # None: censored at s + t_max
    cumulative_harvest: np.ndarray
    valid: bool = True
    times: np.ndarray | None = field(default=None, repr=False)
    states: np.ndarray | None = field(default=None, repr=False)
    harvest_path: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    ci95: tuple[float, float]

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MCEstimate":
        n = len(samples)
        if n == 0:
            raise EstimationError("no valid paths to estimate from")
        mean = math.fsum(samples) / n
        if n > 1:
            var = math.fsum((samples - mean) ** 2) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        half = 1.959963984540054 * se
        return cls(mean, se, n, (mean - half, mean + half))


@dataclass
class PathBatch:
    """Per-path outputs of a Monte Carlo run (invalid paths kept, flagged)."""

    yields: np.ndarray
    extinction_times: np.ndarray  # nan where censored
    harvest: np.ndarray
    valid: np.ndarray
    s: float
    t_max: float

    @property
    def n_invalid(self) -> int:
        return int((~self.valid).sum())

    @property
    def censored_fraction(self) -> float:
        v = self.valid
        return float(np.isnan(self.extinction_times[v]).mean()) if v.any() else math.nan

    def estimate(self) -> MCEstimate:
        return MCEstimate.from_samples(self.yields[self.valid])


# ---------------------------------------------------------------------------
# coefficient / price callbacks (numba-compiled for the built-in kinds)
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _coef_builtin(i, x, data):
    kinds, par = data
    if kinds[i] == _DYN_BM:
        return par[i, 0], par[i, 1]
    return par[i, 0] * x * (1.0 - x / par[i, 2]), par[i, 1] * x


@numba.njit(cache=True)
def _price_builtin(i, x, data):
    kinds, par = data
    if kinds[i] == _PRICE_POWER_HALF:
        if x <= 0.0:
            return np.inf
        return par[i] / math.sqrt(x)
    return par[i]


@numba.njit(cache=True)
def _price_integral_builtin(i, hi, lo, data):
    kinds, par = data
    if kinds[i] == _PRICE_POWER_HALF:
        return 2.0 * par[i] * (math.sqrt(hi) - math.sqrt(lo))
    return par[i] * (hi - lo)


def _coef_py(i, x, data):
    c = data[i]
    return float(c.drift(x)), float(c.vol(x))


def _price_py(i, x, data):
    return float(data[i](max(x, 0.0))) if x > 0 else float(data[i](1e-300))


def _price_integral_py(i, hi, lo, data):
    return chattering_lump_value(data[i], hi, lo)


# ---------------------------------------------------------------------------
# path kernel
# ---------------------------------------------------------------------------


def _path_kernel(
    gz, gu, x0, s, dt, n_steps, rho, pol_kind, pol_par, joint, integral, bridge,
    harvest, states, gammas, cdata, pdata,
):
    """Simulate one path. Returns (discounted yield, extinction time or -1, valid).

    ``harvest`` (n,) receives cumulative harvests; ``states``/``gammas`` of
    shape (n_steps + 1, n) receive the trajectory when they are non-empty.
    ``_COEF``, ``_PRICE`` and ``_INTEGRAL`` are bound per engine by
    :func:`_bind_kernel`.
    """
    n = x0.shape[0]
    record = states.shape[0] > 0
    x = x0.copy()
    alive = np.ones(n, dtype=np.bool_)
    lumps_done = np.zeros(n, dtype=np.int64)
    death = np.full(n, -1.0)
    y = 0.0
    sqdt = math.sqrt(dt)

    # lumps at the start time, before any diffusion
    disc = math.exp(-rho * s)
    for i in range(n):
        kind = pol_kind[i]
        if kind == TAKE_ALL:
            amt = x[i]
            if integral:
                y += disc * _INTEGRAL(i, amt, 0.0, pdata)
            else:
                y += disc * _PRICE(i, x[i], pdata) * amt
            harvest[i] += amt
            x[i] = 0.0
        elif kind == BARRIER and x[i] > pol_par[i, 0]:
            b = pol_par[i, 0]
            y += disc * _INTEGRAL(i, x[i], b, pdata)
            harvest[i] += x[i] - b
            x[i] = b
        elif kind == CHATTER and pol_par[i, 1] == 0.0:
            m = int(pol_par[i, 0])
            for k in range(m):
                amt = x[i] / (m - k) if k < m - 1 else x[i]
                if integral:
                    y += disc * _INTEGRAL(i, x[i], x[i] - amt, pdata)
                elif amt > 0.0:
                    y += disc * _PRICE(i, x[i], pdata) * amt
                harvest[i] += amt
                x[i] -= amt
            x[i] = 0.0
            lumps_done[i] = m
    if record:
        states[0, :] = x
        gammas[0, :] = harvest
    n_dead = 0
    for i in range(n):
        if x[i] <= 0.0:
            alive[i] = False
            death[i] = s
            n_dead += 1
    if n_dead > 0 and (joint or n_dead == n):
        return y, s, True

    for j in range(n_steps):
        t0 = s + j * dt
        t1 = t0 + dt
        # diffusion
        t_first = np.inf
        for i in range(n):
            z = gz.standard_normal()
            if not alive[i]:
                continue
            b, sg = _COEF(i, x[i], cdata)
            xn = x[i] + b * dt + sg * sqdt * z
            if not math.isfinite(xn):
                return y, -1.0, False
            td = -1.0
            if xn <= 0.0:
                td = t0 + dt * x[i] / (x[i] - xn)
            elif bridge and sg != 0.0:
                expo = 2.0 * x[i] * xn / (sg * sg * dt)
                if expo < 745.0 and gu.random() < math.exp(-expo):
                    td = t0 + 0.5 * dt
            if td >= 0.0:
                alive[i] = False
                death[i] = td
                x[i] = 0.0
                n_dead += 1
                if td < t_first:
                    t_first = td
            else:
                x[i] = xn
        if n_dead > 0 and joint:
            if record:
                states[j + 1, :] = x
                gammas[j + 1, :] = harvest
                states[j + 2:, :] = np.nan
                gammas[j + 2:, :] = np.nan
            return y, t_first, True
        # harvesting
        for i in range(n):
            if not alive[i]:
                continue
            kind = pol_kind[i]
            if kind == BARRIER:
                bar = pol_par[i, 0]
                if x[i] > bar:
                    y += math.exp(-rho * t1) * _INTEGRAL(i, x[i], bar, pdata)
                    harvest[i] += x[i] - bar
                    x[i] = bar
            elif kind == CHATTER:
                m = int(pol_par[i, 0])
                eta = pol_par[i, 1]
                while lumps_done[i] < m:
                    k = lumps_done[i]
                    tk = s + (k + 1) * eta / m
                    if tk > t1:
                        break
                    amt = x[i] / (m - k) if k < m - 1 else x[i]
                    if integral:
                        y += math.exp(-rho * tk) * _INTEGRAL(i, x[i], x[i] - amt, pdata)
                    elif amt > 0.0:
                        y += math.exp(-rho * tk) * _PRICE(i, x[i], pdata) * amt
                    harvest[i] += amt
                    x[i] -= amt
                    lumps_done[i] = k + 1
                    if k == m - 1:
                        x[i] = 0.0
                        alive[i] = False
                        death[i] = tk
                        n_dead += 1
                        if tk < t_first:
                            t_first = tk
        if record:
            states[j + 1, :] = x
            gammas[j + 1, :] = harvest
        if n_dead > 0 and joint:
            if record:
                states[j + 2:, :] = np.nan
                gammas[j + 2:, :] = np.nan
            return y, t_first, True
        if n_dead == n:
            last = death[0]
            for i in range(1, n):
                if death[i] > last:
                    last = death[i]
            if record:
                states[j + 2:, :] = np.nan
                gammas[j + 2:, :] = np.nan
            return y, last, True
    return y, -1.0, True


def _bind_kernel(coef, price, integral):
    """Copy of the kernel whose callback globals point at the given functions.

    Binding through globals rather than arguments keeps the compiled
    signature free of function types, so numba can reuse its on-disk cache.
    """
    g = dict(globals(), _COEF=coef, _PRICE=price, _INTEGRAL=integral)
    return types.FunctionType(_path_kernel.__code__, g, "_path_kernel")


_path_kernel_jit = numba.njit(cache=True)(_bind_kernel(_coef_builtin, _price_builtin, _price_integral_builtin))
_path_kernel_py_builtin = _bind_kernel(_coef_builtin.py_func, _price_builtin.py_func, _price_integral_builtin.py_func)
_path_kernel_py = _bind_kernel(_coef_py, _price_py, _price_integral_py)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def _builtin_data(problem: Problem):
    dyn_kind, dyn_par, pr_kind, pr_par = [], [], [], []
    for c in problem.dynamics.components:
        if isinstance(c, ArithmeticBM):
            dyn_kind.append(_DYN_BM)
            dyn_par.append((c.mu, abs(c.sigma), 0.0))
        elif isinstance(c, Logistic):
            dyn_kind.append(_DYN_LOGISTIC)
            dyn_par.append((c.mu, c.sigma, c.K))
        else:
            return None
    for p in problem.prices.components:
        if isinstance(p, PowerHalf):
            pr_kind.append(_PRICE_POWER_HALF)
            pr_par.append(p.theta)
        elif isinstance(p, ConstantPrice):
            pr_kind.append(_PRICE_CONSTANT)
            pr_par.append(p.p)
        else:
            return None
    cdata = (np.array(dyn_kind, dtype=np.int64), np.array(dyn_par, dtype=np.float64))
    pdata = (np.array(pr_kind, dtype=np.int64), np.array(pr_par, dtype=np.float64))
    return cdata, pdata


def path_generators(seed: int, path_index: int):
    """(normal stream, bridge-uniform stream) for one path."""
    mk = lambda stream: np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path_index, stream)))
    )
    return mk(0), mk(1)


class _Runner:
    def __init__(self, problem: Problem, policy: Policy, x0, s: float, config: SimConfig, engine: str = "auto"):
        if len(policy) != problem.n:
            raise InvalidParameterError(f"policy has {len(policy)} components, problem has {problem.n}")
        x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        if x0.shape[0] != problem.n:
            raise InvalidParameterError(f"x0 has {x0.shape[0]} components, problem has {problem.n}")
        if np.any(~(x0 > 0)) or not np.all(np.isfinite(x0)):
            raise InvalidParameterError("x0 must be componentwise positive and finite")
        self.x0 = x0
        self.s = float(s)
        self.cfg = config
        self.rho = problem.rho
        self.codes, self.params = policy.encode()
        ext = config.extinction or problem.extinction
        self.joint = Extinction(ext) is Extinction.JOINT
        self.integral = config.lump_pricing == INTEGRAL_PRICE
        builtin = _builtin_data(problem)
        if engine == "auto":
            engine = "numba" if builtin is not None else "python"
        if engine == "numba":
            if builtin is None:
                raise InvalidParameterError("the compiled engine supports only built-in dynamics and prices")
            self.kernel = _path_kernel_jit
            self.cdata, self.pdata = builtin
        elif engine == "python":
            if builtin is not None:
                self.kernel = _path_kernel_py_builtin
                self.cdata, self.pdata = builtin
            else:
                self.kernel = _path_kernel_py
                self.cdata = problem.dynamics.components
                self.pdata = problem.prices.components
        else:
            raise InvalidParameterError(f"unknown engine {engine!r}")
        self.engine = engine

    def run(self, path_index: int, record: bool = False):
        cfg = self.cfg
        n = len(self.x0)
        gz, gu = path_generators(cfg.seed, path_index)
        harvest = np.zeros(n)
        if record:
            states = np.full((cfg.n_steps + 1, n), np.nan)
            gammas = np.full((cfg.n_steps + 1, n), np.nan)
        else:
            states = np.empty((0, n))
            gammas = np.empty((0, n))
        y, ext, valid = self.kernel(
            gz, gu, self.x0, self.s, cfg.dt, cfg.n_steps, self.rho, self.codes, self.params,
            self.joint, self.integral, cfg.bridge, harvest, states, gammas, self.cdata, self.pdata,
        )
        return y, ext, valid, harvest, states, gammas


def simulate_path(
    problem: Problem,
    policy: Policy,
    x0,
    s: float,
    config: SimConfig,
    path_index: int = 0,
    record: bool = False,
    engine: str = "auto",
) -> PathResult:
    """Simulate the harvested path with counter-derived index ``path_index``."""
    r = _Runner(problem, policy, x0, s, config, engine)
    y, ext, valid, harvest, states, gammas = r.run(path_index, record)
    times = r.s + config.dt * np.arange(config.n_steps + 1) if record else None
    return PathResult(
        discounted_yield=float(y),
        extinction_time=None if ext < 0 else float(ext),
        cumulative_harvest=harvest,
        valid=bool(valid),
        times=times,
        states=states if record else None,
        harvest_path=gammas if record else None,
    )


def run_paths(problem: Problem, policy: Policy, x0, s: float, config: SimConfig, engine: str = "auto") -> PathBatch:
    r = _Runner(problem, policy, x0, s, config, engine)
    N = config.n_paths
    yields = np.empty(N)
    ext = np.empty(N)
    valid = np.empty(N, dtype=bool)
    harvest = np.empty((N, problem.n))
    for k in range(N):
        y, e, v, h, _, _ = r.run(k)
        yields[k] = y
        ext[k] = np.nan if e < 0 else e
        valid[k] = v
        harvest[k] = h
    return PathBatch(yields, ext, harvest, valid, r.s, config.t_max)


def monte_carlo(problem: Problem, policy: Policy, x0, s: float, config: SimConfig, engine: str = "auto") -> MCEstimate:
    """Mean discounted yield of ``policy`` from ``(s, x0)`` over ``config.n_paths`` paths."""
    batch = run_paths(problem, policy, x0, s, config, engine)
    if not batch.valid.any():
        raise EstimationError(f"all {config.n_paths} paths were invalid (non-finite state)")
    return batch.estimate()


@dataclass(frozen=True)
class ExtinctionDiscount:
    """Bracket for E[exp(-rho T)]: censored paths counted as 0 (lo) or exp(-rho (s + t_max)) (hi)."""

    lo: MCEstimate
    hi: MCEstimate
    censored_fraction: float


def extinction_discount_from_batch(batch: PathBatch, rho: float) -> ExtinctionDiscount:
    v = batch.valid
    if not v.any():
        raise EstimationError("all paths were invalid (non-finite state)")
    T = batch.extinction_times[v]
    cens = np.isnan(T)
    base = np.where(cens, 0.0, np.exp(-rho * np.where(cens, 0.0, T)))
    hi = np.where(cens, math.exp(-rho * (batch.s + batch.t_max)), base)
    return ExtinctionDiscount(MCEstimate.from_samples(base), MCEstimate.from_samples(hi), float(cens.mean()))


def estimate_extinction_discount(
    problem: Problem, policy: Policy, x0, config: SimConfig, s: float = 0.0, engine: str = "auto"
) -> ExtinctionDiscount:
    """Monte Carlo bracket for ``E[exp(-rho T)]`` under ``policy``."""
    return extinction_discount_from_batch(run_paths(problem, policy, x0, s, config, engine), problem.rho)


def common_random_numbers(
    problem: Problem, policies: Sequence[Policy], x0, s: float, config: SimConfig
) -> list[PathBatch]:
    """Run several policies on identical per-path noise (same seed and path indices)."""
    return [run_paths(problem, p, x0, s, config) for p in policies]
