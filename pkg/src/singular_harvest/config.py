"""JSON problem configuration, validated with pydantic.

Validation errors are reported with dotted field paths (``prices.rho``,
``dynamics.1.sigma``) so the CLI can point at the offending entry.
"""

from __future__ import annotations

import ast
import json
import math
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import InvalidParameterError
from .model import (
    ArithmeticBM,
    ConstantPrice,
    DiffusionSpec,
    Extinction,
    GeneralDynamics,
    Logistic,
    PowerHalf,
    PriceSpec,
    Problem,
)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Config file unreadable or invalid; ``field`` is the dotted path of the first bad entry."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BMConfig(_Strict):
    kind: Literal["bm"]
    mu: float
    sigma: float = Field(allow_inf_nan=False)

    @field_validator("sigma")
    @classmethod
    def _nonzero(cls, v):
        if v == 0:
            raise ValueError("sigma must be nonzero")
        return v


class LogisticConfig(_Strict):
    kind: Literal["logistic"]
    mu: float = Field(gt=0, allow_inf_nan=False)
    K: float = Field(gt=0, allow_inf_nan=False)
    sigma: float = Field(gt=0, allow_inf_nan=False)


# Names usable in general drift/volatility expressions of ``x``.
_EXPR_NAMES = {
    "x": None,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "pi": math.pi,
}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_expression(src: str):
    """Arithmetic expression in ``x`` to a vectorised callable."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {src!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ValueError(f"expression {src!r} uses unsupported syntax {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _EXPR_NAMES:
            raise ValueError(f"expression {src!r} uses unknown name {node.id!r}")
    code = compile(tree, "<expr>", "eval")
    env = {k: v for k, v in _EXPR_NAMES.items() if k != "x"}

    def f(x):
        return eval(code, {"__builtins__": {}}, {**env, "x": np.asarray(x, dtype=float)})

    return f


class GeneralConfig(_Strict):
    kind: Literal["general"]
    drift: str
    vol: str

    @field_validator("drift", "vol")
    @classmethod
    def _parse(cls, v):
        compile_expression(v)
        return v


DynamicsConfig = Annotated[Union[BMConfig, LogisticConfig, GeneralConfig], Field(discriminator="kind")]


class PowerHalfConfig(_Strict):
    kind: Literal["power_half"] = "power_half"
    theta: float = Field(gt=0, allow_inf_nan=False)


class ConstantPriceConfig(_Strict):
    kind: Literal["constant"]
    p: float = Field(gt=0, allow_inf_nan=False)


PriceConfig = Annotated[Union[PowerHalfConfig, ConstantPriceConfig], Field(discriminator="kind")]


class PricesConfig(_Strict):
    rho: float = Field(gt=0, allow_inf_nan=False)
    components: list[PriceConfig] = Field(min_length=1)


class SimSettings(_Strict):
    dt: float = Field(1e-3, gt=0, allow_inf_nan=False)
    t_max: float = Field(30.0, gt=0, allow_inf_nan=False)
    n_paths: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    lump_pricing: Literal["left", "integral"] = "left"
    bridge: bool = True
    chatter_m: int = Field(10_000, ge=1)


class VerifySettings(_Strict):
    lo: list[float] | None = None
    hi: list[float] | None = None
    points: int = 200
    perturb_x_star: float = Field(0.0, allow_inf_nan=False)
    derivatives: Literal["auto", "analytic", "fd"] = "auto"

    @field_validator("points")
    @classmethod
    def _points(cls, v):
        if v < 1:
            raise ValueError("grid needs at least one point per axis")
        return v


class ProblemConfig(_Strict):
    schema_: Literal[1] = Field(1, alias="schema")
    dynamics: list[DynamicsConfig] = Field(min_length=1)
    prices: PricesConfig
    x0: list[float]
    s: float = Field(0.0, allow_inf_nan=False)
    extinction: Literal["joint", "componentwise"] | None = None
    sim: SimSettings = SimSettings()
    verify: VerifySettings = VerifySettings()

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("x0")
    @classmethod
    def _x0(cls, v):
        if any(not (math.isfinite(x) and x >= 0) for x in v):
            raise ValueError("initial stocks must be finite and >= 0")
        return v

    @model_validator(mode="after")
    def _dims(self):
        n = len(self.dynamics)
        if len(self.prices.components) != n:
            raise ValueError(f"prices.components has {len(self.prices.components)} entries, dynamics has {n}")
        if len(self.x0) != n:
            raise ValueError(f"x0 has {len(self.x0)} entries, dynamics has {n}")
        for name in ("lo", "hi"):
            v = getattr(self.verify, name)
            if v is not None and len(v) != n:
                raise ValueError(f"verify.{name} has {len(v)} entries, dynamics has {n}")
        return self

    @property
    def n(self) -> int:
        return len(self.dynamics)

    def to_problem(self) -> Problem:
        try:
            dyn = [_build_dynamics(d) for d in self.dynamics]
            prices = [_build_price(p) for p in self.prices.components]
            return Problem(DiffusionSpec(dyn), PriceSpec(self.prices.rho, prices), self.extinction and Extinction(self.extinction))
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None


def _build_dynamics(d):
    if isinstance(d, BMConfig):
        return ArithmeticBM(d.mu, d.sigma)
    if isinstance(d, LogisticConfig):
        return Logistic(d.mu, d.K, d.sigma)
    return GeneralDynamics(compile_expression(d.drift), compile_expression(d.vol))


def _build_price(p):
    if isinstance(p, PowerHalfConfig):
        return PowerHalf(p.theta)
    return ConstantPrice(p.p)


def _field_path(loc) -> str:
    # Drop discriminator tags pydantic inserts into union locations.
    parts = [str(x) for x in loc if x not in ("bm", "logistic", "general", "power_half", "constant")]
    return ".".join(parts)


def parse_config(data) -> ProblemConfig:
    try:
        return ProblemConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = _field_path(err["loc"])
        raise ConfigError(f"{path or '<root>'}: {err['msg']}", path) from None


def load_config(path) -> ProblemConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    return parse_config(data)


def config_json_schema() -> dict:
    schema = ProblemConfig.model_json_schema(by_alias=True)
    schema["title"] = "singular-harvest problem config"
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", **schema}
