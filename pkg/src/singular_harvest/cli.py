"""Command-line front end: ``singular-harvest {solve,simulate,verify,bounds,sweep}``.

Exit codes: 0 success, 1 configuration or usage error, 2 unsupported
request (e.g. no closed form for the given dynamics), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .analytic import (
    BMThresholdValue,
    lambda_roots,
    LogisticThreshold,
    LogisticThresholdValue,
    ThresholdSolution,
    ValueFunction,
    bm_pasting_constants,
    smooth_pasting,
    solve,
    verify_conditions,
)
from .analytic.thresholds import logistic_threshold_fn
from .analytic.verify import Grid
from .bounds import bounds_report
from .config import SCHEMA_VERSION, ConfigError, ProblemConfig, load_config
from .errors import (
    BoundUnavailableError,
    DomainError,
    EstimationError,
    InvalidParameterError,
    NoAnalyticSolutionError,
    NumericError,
    RangeError,
    RegimeError,
)
from .model import ArithmeticBM, Extinction, classify_component
from .policy import Barrier, Chattering, NoHarvest, Policy, TakeAll

EXIT_OK, EXIT_CONFIG, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 1, 2, 3
MAX_GRID_POINTS = 4_000_000

SIMULATE_COLUMNS = (
    "policy", "extinction", "mean", "std_error", "ci_lo", "ci_hi", "n_paths", "n_invalid", "dt", "t_max", "seed",
    "lump_pricing", "extinction_discount_lo", "extinction_discount_hi", "censored_fraction",
)
SWEEP_COLUMNS = (
    "param", "value", "component", "regime", "x_star", "phi", "lower", "upper_conservative",
    "regime_boundary", "mc_mean", "mc_std_error", "note",
)
SOLVE_COLUMNS = ("component", "dynamics", "regime", "x_star", "C", "A", "max_residual", "phi")
BOUNDS_COLUMNS = ("component", "Pi_value", "M", "x_tilde", "lower", "upper_conservative", "upper_mc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _num(v):
    """JSON-safe float: non-finite values become null."""
    if v is None:
        return None
    f = float(v)
    return f if math.isfinite(f) else None


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _envelope(command: str, body: dict, meta: bool) -> dict:
    out = {"schema": SCHEMA_VERSION, "command": command, **body}
    if meta:
        out["meta"] = {
            "version": __version__,
            "generated_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }
    return _clean(out)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _dump_csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _component_record(i, dyn, price, comp, th) -> dict:
    rec = {
        "index": i,
        "dynamics": dyn.kind,
        "regime": comp.regime.value,
        "theta": price.theta,
        "x_star": comp.x_star,
    }
    if isinstance(th, ThresholdSolution):
        rec.update(
            lambda1=th.lam.lambda1,
            lambda2=th.lam.lambda2,
            C=th.C,
            A=th.A,
            residuals={
                "value_matching": th.residuals[0],
                "first_derivative": th.residuals[1],
                "second_derivative": th.residuals[2],
                "threshold_equation": th.ratio_residual,
            },
            other_roots=[r for r in th.roots if r != th.x_star],
        )
    elif isinstance(th, LogisticThreshold):
        p = th.params
        rec.update(
            psi={"theta_exp": p.theta_exp, "b": p.b_param, "z_scale": p.z_scale},
            C=comp._scale,
            A=comp.A,
            residuals={"threshold_equation": th.residual},
            sign_changes=th.sign_changes,
        )
    return rec


def cmd_solve(cfg: ProblemConfig, args) -> str:
    problem = cfg.to_problem()
    sol = solve(problem)
    comps = []
    for i, (dyn, price, comp, th) in enumerate(
        zip(problem.dynamics.components, problem.prices.components, sol.value_fn.components, sol.thresholds)
    ):
        rec = _component_record(i, dyn, price, comp, th)
        if isinstance(dyn, ArithmeticBM) and th is None:
            lam = lambda_roots(dyn.mu, dyn.sigma, problem.rho)
            rec.update(lambda1=lam.lambda1, lambda2=lam.lambda2)
        rec["component_value"] = float(comp(cfg.x0[i])) * math.exp(-problem.rho * cfg.s)
        comps.append(rec)
    phi = float(sol.value(cfg.s, np.array(cfg.x0)))
    if args.format == "csv":
        rows = []
        for r in comps:
            res = r.get("residuals")
            rows.append(
                {
                    "component": r["index"],
                    "dynamics": r["dynamics"],
                    "regime": r["regime"],
                    "x_star": r["x_star"],
                    "C": r.get("C"),
                    "A": r.get("A"),
                    "max_residual": max(res.values()) if res else None,
                    "phi": phi,
                }
            )
        return _dump_csv(SOLVE_COLUMNS, rows)
    body = {"rho": problem.rho, "s": cfg.s, "x0": list(cfg.x0), "value": phi, "components": comps}
    return _dump_json(_envelope("solve", body, not args.no_meta))


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------


def _parse_opts(parts: list[str], token: str) -> dict:
    opts = {}
    for p in parts:
        if "=" not in p:
            raise UsageError(f"policy {token!r}: option {p!r} must look like key=value")
        k, v = p.split("=", 1)
        opts[k.strip()] = v.strip()
    return opts


def _float_list(v: str, n: int, token: str) -> list[float]:
    try:
        vals = [float(t) for t in v.split("/")]
    except ValueError:
        raise UsageError(f"policy {token!r}: {v!r} is not a number or a/b/... list") from None
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise UsageError(f"policy {token!r}: expected 1 or {n} values, got {len(vals)}")
    return vals


def parse_policy(token: str, cfg: ProblemConfig, thresholds) -> Policy:
    """``no_harvest``, ``take_all``, ``chatter[:m=M][:eta=E]``,
    ``barrier[:scale=S | :x=a/b/...]`` or ``optimal``."""
    name, *rest = token.strip().split(":")
    opts = _parse_opts(rest, token)
    n = cfg.n
    m_default = cfg.sim.chatter_m

    def _m():
        try:
            m = int(opts.pop("m", m_default))
        except ValueError:
            raise UsageError(f"policy {token!r}: m must be an integer") from None
        return m

    try:
        if name == "no_harvest":
            pol = Policy.uniform(NoHarvest(), n, token)
        elif name == "take_all":
            pol = Policy.uniform(TakeAll(), n, token)
        elif name == "chatter":
            m = _m()
            eta = float(opts.pop("eta", 0.0))
            pol = Policy.uniform(Chattering(m, eta), n, token)
        elif name == "barrier":
            if "x" in opts:
                xs = _float_list(opts.pop("x"), n, token)
            else:
                scale = float(opts.pop("scale", 1.0))
                xs = []
                for i, th in enumerate(thresholds()):
                    if th is None:
                        raise UsageError(
                            f"policy {token!r}: component {i} has no interior threshold; give levels with x=a/b"
                        )
                    xs.append(scale * th)
            pol = Policy([Barrier(x) for x in xs], token)
        elif name == "optimal":
            m = _m()
            pol = Policy([Chattering(m) if th is None else Barrier(th) for th in thresholds()], token)
        else:
            raise UsageError(f"unknown policy {name!r}")
    except ValueError as exc:
        raise UsageError(f"policy {token!r}: {exc}") from None
    if opts:
        raise UsageError(f"policy {token!r}: unknown option(s) {sorted(opts)}")
    return pol


def _threshold_getter(problem):
    cache = {}

    def get():
        if "t" not in cache:
            cache["t"] = solve(problem).value_fn.thresholds
        return cache["t"]

    return get


def _sim_config(cfg: ProblemConfig, args, extinction=None):
    from .sim import SimConfig

    s = cfg.sim
    seed = s.seed if getattr(args, "seed", None) is None else args.seed
    n_paths = s.n_paths if getattr(args, "n_paths", None) is None else args.n_paths
    return SimConfig(
        dt=s.dt, t_max=s.t_max, n_paths=n_paths, seed=seed, lump_pricing=s.lump_pricing, bridge=s.bridge,
        extinction=extinction,
    )


def cmd_simulate(cfg: ProblemConfig, args) -> str:
    from .sim import extinction_discount_from_batch, run_paths

    problem = cfg.to_problem()
    if any(x <= 0 for x in cfg.x0):
        raise UsageError("simulate needs every initial stock x0 > 0")
    sc = _sim_config(cfg, args)
    get_th = _threshold_getter(problem)
    tokens = [t for t in args.policy.split(",") if t.strip()]
    if not tokens:
        raise UsageError("--policy is empty")
    policies = [parse_policy(t, cfg, get_th) for t in tokens]
    if args.extinction == "both":
        modes = [Extinction.JOINT, Extinction.COMPONENTWISE]
    else:
        modes = [Extinction(args.extinction) if args.extinction else problem.extinction]
    rows = []
    for mode, pol in ((m, p) for p in policies for m in modes):
        sc = _sim_config(cfg, args, mode)
        batch = run_paths(problem, pol, np.array(cfg.x0), cfg.s, sc)
        est = batch.estimate()
        ed = extinction_discount_from_batch(batch, problem.rho)
        rows.append(
            {
                "policy": pol.label,
                "extinction": mode.value,
                "mean": est.mean,
                "std_error": est.std_error,
                "ci_lo": est.ci95[0],
                "ci_hi": est.ci95[1],
                "n_paths": sc.n_paths,
                "n_invalid": batch.n_invalid,
                "dt": sc.dt,
                "t_max": sc.t_max,
                "seed": sc.seed,
                "lump_pricing": sc.lump_pricing,
                "extinction_discount_lo": ed.lo.mean,
                "extinction_discount_hi": ed.hi.mean,
                "censored_fraction": ed.censored_fraction,
            }
        )
    if args.format == "json":
        body = {"s": cfg.s, "x0": list(cfg.x0), "rows": rows}
        return _dump_json(_envelope("simulate", body, not args.no_meta))
    return _dump_csv(SIMULATE_COLUMNS, rows)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _perturbed(comp, dyn, rho, factor):
    if comp.x_star is None or factor == 0:
        return comp
    x = comp.x_star * (1.0 + factor)
    if isinstance(comp, BMThresholdValue):
        return BMThresholdValue(bm_pasting_constants(x, comp.theta, dyn.mu, dyn.sigma, rho))
    th = comp.th
    moved = LogisticThreshold(x, abs(float(logistic_threshold_fn(x, th.params))), th.params, th.sign_changes)
    return LogisticThresholdValue(moved, comp.theta)


def _default_axis(comp):
    if comp.x_star is not None:
        # Reach well below x*: the threshold candidates can fail (i) near 0.
        return 1e-4 * comp.x_star, 2.0 * comp.x_star
    return 1e-2, 10.0


def cmd_verify(cfg: ProblemConfig, args) -> str:
    problem = cfg.to_problem()
    sol = solve(problem)
    v = cfg.verify
    comps = [
        _perturbed(c, d, problem.rho, v.perturb_x_star)
        for c, d in zip(sol.value_fn.components, problem.dynamics.components)
    ]
    vf = ValueFunction(comps, problem.rho)
    defaults = [_default_axis(c) for c in sol.value_fn.components]
    lo = v.lo if v.lo is not None else [a for a, _ in defaults]
    hi = v.hi if v.hi is not None else [b for _, b in defaults]
    if any(not (0 < a <= b) for a, b in zip(lo, hi)):
        raise UsageError("verify grid needs 0 < lo <= hi on every axis")
    if v.points ** problem.n > MAX_GRID_POINTS:
        raise UsageError(f"verify grid has {v.points}^{problem.n} points, limit is {MAX_GRID_POINTS}")
    grid = Grid.uniform(lo, hi, v.points)
    rep = verify_conditions(vf, problem, grid, region=vf.in_nonintervention, derivatives=v.derivatives)
    pasting = []
    for c in comps:
        pasting.append(smooth_pasting(c, "fd").as_dict() if c.x_star is not None else None)
    pasting_ok = all(p is None or p["pass"] for p in pasting)
    if args.grid_csv:
        cols = [f"x_{i}" for i in range(problem.n)] + ["phi", "generator", "in_D"] + [
            f"grad_minus_price_{i}" for i in range(problem.n)
        ]
        rows = []
        for k in range(rep.n_points):
            r = {f"x_{i}": float(rep.points[k, i]) for i in range(problem.n)}
            r.update(phi=float(rep.phi[k]), generator=float(rep.generator[k]), in_D=bool(rep.in_D[k]))
            r.update({f"grad_minus_price_{i}": float(rep.grad_minus_price[k, i]) for i in range(problem.n)})
            rows.append(r)
        _emit(_dump_csv(cols, rows), args.grid_csv)
    body = {
        "grid": {"lo": lo, "hi": hi, "points": v.points},
        "perturb_x_star": v.perturb_x_star,
        "x_star": [c.x_star for c in comps],
        "report": rep.as_dict(),
        "smooth_pasting": pasting,
        "passed": rep.passed and pasting_ok,
    }
    return _dump_json(_envelope("verify", body, not args.no_meta))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _mc_extinction(cfg: ProblemConfig, problem, args):
    from .sim import estimate_extinction_discount

    if any(x <= 0 for x in cfg.x0):
        raise UsageError("--with-mc needs every initial stock x0 > 0")
    sc = _sim_config(cfg, args)
    pol = Policy.uniform(NoHarvest(), problem.n, "no_harvest")
    ed = estimate_extinction_discount(problem, pol, np.array(cfg.x0), sc, s=cfg.s)
    # Without harvesting extinction comes last, so this discount is the
    # smallest over all strategies; shading it down by 2 SE keeps the bound safe.
    used = max(0.0, ed.lo.mean - 2.0 * ed.lo.std_error)
    info = {
        "policy": "no_harvest",
        "lo": ed.lo.mean,
        "lo_std_error": ed.lo.std_error,
        "hi": ed.hi.mean,
        "censored_fraction": ed.censored_fraction,
        "used": used,
        "n_paths": sc.n_paths,
        "seed": sc.seed,
    }
    return used, info


def cmd_bounds(cfg: ProblemConfig, args) -> str:
    problem = cfg.to_problem()
    disc, info = (None, None)
    if args.with_mc:
        disc, info = _mc_extinction(cfg, problem, args)
    rep = bounds_report(problem, np.array(cfg.x0), disc, s=cfg.s)
    if args.format == "csv":
        rows = [
            {
                "component": i,
                "Pi_value": c.Pi_value,
                "M": c.M,
                "x_tilde": c.x_tilde,
                "lower": rep.lower,
                "upper_conservative": rep.upper_conservative,
                "upper_mc": rep.upper_mc,
            }
            for i, c in enumerate(rep.per_component)
        ]
        return _dump_csv(BOUNDS_COLUMNS, rows)
    body = {"s": cfg.s, "x0": list(cfg.x0), **rep.as_dict(), "extinction_discount": info}
    return _dump_json(_envelope("bounds", body, not args.no_meta))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_PARAMS = ("mu", "sigma", "K", "theta", "rho")


def _parse_range(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"--range must look like lo:hi:n, got {text!r}") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("--range needs finite bounds and n >= 1")
    if n == 1:
        if lo != hi:
            raise UsageError("a single-point --range needs lo == hi")
        return np.array([lo])
    return np.linspace(lo, hi, n)


def _with_param(cfg: ProblemConfig, param: str, value: float, targets: list[int]) -> ProblemConfig:
    if param == "rho":
        return cfg.model_copy(update={"prices": cfg.prices.model_copy(update={"rho": value})})
    if param == "theta":
        comps = list(cfg.prices.components)
        for i in targets:
            if not hasattr(comps[i], "theta"):
                raise UsageError(f"component {i} price has no theta")
            comps[i] = comps[i].model_copy(update={"theta": value})
        return cfg.model_copy(update={"prices": cfg.prices.model_copy(update={"components": comps})})
    dyn = list(cfg.dynamics)
    for i in targets:
        if not hasattr(dyn[i], param):
            raise UsageError(f"component {i} ({dyn[i].kind}) has no parameter {param!r}")
        dyn[i] = dyn[i].model_copy(update={param: value})
    return cfg.model_copy(update={"dynamics": dyn})


def _regime_at(cfg, param, value, targets, i):
    p = _with_param(cfg, param, value, targets).to_problem()
    return classify_component(p.dynamics.components[i], p.rho)


def _boundary(cfg, param, a, b, targets, i):
    ra = _regime_at(cfg, param, a, targets, i)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if _regime_at(cfg, param, mid, targets, i) is ra:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def cmd_sweep(cfg: ProblemConfig, args) -> str:
    param = args.param
    if param not in SWEEP_PARAMS:
        raise UsageError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    values = _parse_range(args.range)
    targets = list(range(cfg.n)) if args.component is None else [args.component]
    if any(not 0 <= i < cfg.n for i in targets):
        raise UsageError(f"--component must lie in [0, {cfg.n})")
    cases = []
    for v in values:
        c = _with_param(cfg, param, float(v), targets)
        problem = c.to_problem()
        regimes = [classify_component(d, problem.rho) for d in problem.dynamics.components]
        try:
            sol, note = solve(problem), None
        except (RangeError, NumericError) as exc:
            # keep the sweep going; the row records why this point has no value
            sol, note = None, str(exc)
        rep = bounds_report(problem, np.array(c.x0), None, s=c.s)
        mc = None
        if args.with_mc and sol is not None:
            from .sim import monte_carlo

            pol = parse_policy("optimal", c, lambda: sol.value_fn.thresholds)
            mc = monte_carlo(problem, pol, np.array(c.x0), c.s, _sim_config(c, args))
        cases.append((float(v), c, sol, rep, mc, regimes, note))
    # Regime boundaries: bisect between adjacent sweep values whose regime differs.
    boundaries = {i: [] for i in range(cfg.n)}
    for k in range(len(cases) - 1):
        for i in range(cfg.n):
            if cases[k][5][i] is not cases[k + 1][5][i]:
                boundaries[i].append(_boundary(cfg, param, cases[k][0], cases[k + 1][0], targets, i))
    rows = []
    for v, c, sol, rep, mc, regimes, note in cases:
        phi = float(sol.value(c.s, np.array(c.x0))) if sol is not None else None
        for i, regime in enumerate(regimes):
            b = boundaries[i]
            rows.append(
                {
                    "param": param,
                    "value": v,
                    "component": i,
                    "regime": regime.value,
                    "x_star": sol.value_fn.components[i].x_star if sol is not None else None,
                    "phi": phi,
                    "lower": rep.lower,
                    "upper_conservative": rep.upper_conservative,
                    "regime_boundary": "/".join(repr(x) for x in b) if b else None,
                    "mc_mean": mc.mean if mc else None,
                    "mc_std_error": mc.std_error if mc else None,
                    "note": note,
                }
            )
    if args.format == "json":
        body = {
            "param": param,
            "components": targets,
            "regime_boundaries": [{"component": i, "values": b} for i, b in boundaries.items() if b],
            "rows": rows,
        }
        return _dump_json(_envelope("sweep", body, not args.no_meta))
    return _dump_csv(SWEEP_COLUMNS, rows)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="problem config (JSON)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--no-meta", action="store_true", help="omit version/timestamp block (byte-stable output)")
    mc = _Parser(add_help=False)
    mc.add_argument("--seed", type=int, help="override sim.seed")
    mc.add_argument("--n-paths", type=int, help="override sim.n_paths")

    p = _Parser(prog="singular-harvest", description="Optimal harvesting under singular control.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="closed-form regimes, thresholds and value")
    s.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("simulate", parents=[common, mc], help="Monte Carlo value of harvesting policies")
    s.add_argument("--policy", default="optimal", metavar="NAME[,NAME...]")
    s.add_argument(
        "--extinction",
        choices=("joint", "componentwise", "both"),
        help="extinction convention (default: config value, else joint for all-Brownian problems)",
    )
    s.add_argument("--format", choices=("json", "csv"), default="csv")

    s = sub.add_parser("verify", parents=[common], help="grid check of the optimality conditions")
    s.add_argument("--format", choices=("json",), default="json")
    s.add_argument("--grid-csv", metavar="PATH", help="also write per-grid-point values as CSV")
    s.add_argument("--perturb", type=float, metavar="FRACTION", help="move every threshold by this relative amount")
    s.add_argument("--points", type=int, help="override verify.points")

    s = sub.add_parser("bounds", parents=[common, mc], help="lower and upper bounds on the optimal value")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--with-mc", action="store_true", help="refine the upper bound with a Monte Carlo extinction estimate")

    s = sub.add_parser("sweep", parents=[common, mc], help="solve across a parameter range")
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--range", required=True, metavar="LO:HI:N")
    s.add_argument("--component", type=int, help="sweep only this component (default: all)")
    s.add_argument("--with-mc", action="store_true", help="add a Monte Carlo estimate of the optimal policy")
    s.add_argument("--format", choices=("json", "csv"), default="csv")
    return p


_COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "sweep": cmd_sweep,
}


def _apply_overrides(cfg: ProblemConfig, args) -> ProblemConfig:
    upd = {}
    if getattr(args, "perturb", None) is not None:
        upd["perturb_x_star"] = args.perturb
    if getattr(args, "points", None) is not None:
        if args.points < 1:
            raise UsageError("--points must be >= 1")
        upd["points"] = args.points
    if upd:
        cfg = cfg.model_copy(update={"verify": cfg.verify.model_copy(update=upd)})
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        text = _COMMANDS[args.command](cfg, args)
        _emit(text, args.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, InvalidParameterError, DomainError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoAnalyticSolutionError, RegimeError, BoundUnavailableError) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (NumericError, EstimationError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_exit()
