"""Command-line front end.

Subcommands::

    gammais estimate --method gamma-is --dist weibull --param k=1.5 --n 12 --gamma 0.5
    gammais sweep    --method gamma-is --method exp-twist --dist weibull --param k=1.5 \\
                     --gamma 0.5 --sweep-var n --sweep-values 2..12
    gammais compare  --method exp-twist --method ln-gamma-kstar --dist lognormal --n 9 --gamma 0.5
    gammais oracle   --dist exponential --param k=1 --n 4 --gamma 1

Exit status: 0 ok, 2 invalid configuration, 3 estimator or oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

from .distributions import DistributionSpec, DistributionValidationError, Family, make_distribution
from .engine import (
    METHODS,
    ExperimentPlan,
    PlanValidationError,
    Sweep,
    convolution_oracle,
    recommended_samples,
    run,
)

__all__ = ["ExperimentPlan", "CSV_COLUMNS", "main", "build_parser", "parse_values", "format_row"]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

CSV_COLUMNS = (
    "method", "family", "n", "gamma", "samples", "seed", "estimate", "scv",
    "ci95_half_width", "wall_seconds", "wnrv", "biased", "bias_bound", "adjusted_wnrv",
)
_METRICS = ("estimate", "scv", "ci95_half_width", "wall_seconds", "wnrv", "biased", "bias_bound", "adjusted_wnrv")
ORACLE_MAX_N = 16


class ConfigError(Exception):
    def __init__(self, message: str, flag: Optional[str] = None):
        super().__init__(message)
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# parsing helpers


def parse_values(text: str) -> list[float]:
    """``"2,3,5"``, ``"2..12"`` (unit step) or ``"0.6..1.4:0.1"``."""
    out: list[float] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ".." in part:
            rng, _, step_s = part.partition(":")
            lo_s, hi_s = rng.split("..", 1)
            lo, hi = float(lo_s), float(hi_s)
            step = float(step_s) if step_s else 1.0
            if not step > 0 or hi < lo:
                raise ValueError(f"bad range {part!r}")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            digits = max(_decimals(lo_s), _decimals(step_s or "1"))
            out.extend(round(lo + i * step, digits) for i in range(count))
        else:
            out.append(float(part))
    return out


def _decimals(s: str) -> int:
    s = s.strip()
    return len(s.split(".", 1)[1]) if "." in s else 0


def _parse_params(items: Sequence[str]) -> dict[str, float]:
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value, got {item!r}", "--param")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"parameter {key.strip()!r} is not a number: {val!r}", "--param") from None
    return params


def _read_config(path: str) -> dict[str, Any]:
    """JSON object, or ``key = value`` lines (``param.k = 1.5``, ``method = a, b``)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "--config") from None
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", "--config") from None
    data: dict[str, Any] = {}
    params: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key = value", "--config")
        key, val = key.strip().replace("-", "_"), val.strip()
        if key.startswith("param."):
            params[key[6:]] = val
        else:
            data[key] = val
    flat: dict[str, Any] = {}
    if "method" in data:
        flat["method"] = [m.strip() for m in data.pop("method").split(",")]
    if "dist" in data or params:
        flat["dist"] = {"family": data.pop("dist", "exponential"), "params": params}
    if "sweep_var" in data:
        flat["sweep"] = {"variable": data.pop("sweep_var"), "values": parse_values(data.pop("sweep_values", ""))}
    flat.update(data)
    return flat


# ---------------------------------------------------------------------------
# plan assembly


def _pick(args, name, cfg, default):
    val = getattr(args, name, None)
    return val if val is not None else cfg.get(name, default)


def _merge(args: argparse.Namespace) -> dict[str, Any]:
    cfg: dict[str, Any] = _read_config(args.config) if args.config else {}
    methods = cfg.get("method")
    if isinstance(methods, str):
        methods = [methods]
    if getattr(args, "method", None):
        methods = args.method
    dist = cfg.get("dist") or {}
    family = args.dist if args.dist is not None else dist.get("family")
    params = {k: float(v) for k, v in (dist.get("params") or {}).items()}
    params.update(_parse_params(args.param or []))
    merged = {
        "methods": methods,
        "family": family,
        "params": params,
        "n": args.n if args.n is not None else cfg.get("n"),
        "gamma": args.gamma if args.gamma is not None else cfg.get("gamma"),
        "samples": _pick(args, "samples", cfg, 100_000),
        "epsilon": _pick(args, "epsilon", cfg, 0.05),
        "seed": _pick(args, "seed", cfg, 0),
    }
    sweep = cfg.get("sweep") or {}
    var = getattr(args, "sweep_var", None) or sweep.get("variable")
    values = sweep.get("values")
    if getattr(args, "sweep_values", None) is not None:
        try:
            values = parse_values(args.sweep_values)
        except ValueError as exc:
            raise ConfigError(str(exc), "--sweep-values") from None
    merged["sweep"] = (var, values) if var is not None or values is not None else None
    return merged


def _build_spec(family, params) -> DistributionSpec:
    if family is None:
        raise ConfigError("missing required --dist", "--dist")
    try:
        spec = DistributionSpec(Family.parse(str(family)), params)
        make_distribution(spec)
    except DistributionValidationError as exc:
        raise ConfigError(str(exc), "--param" if params else "--dist") from None
    return spec


def _number(value, flag, kind):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{flag} must be a number, got {value!r}", flag) from None
    if kind is int:
        if x != int(x):
            raise ConfigError(f"{flag} must be an integer", flag)
        return int(x)
    return x


def plans_from_args(args: argparse.Namespace, *, need_sweep: bool) -> list[ExperimentPlan]:
    m = _merge(args)
    if not m["methods"]:
        raise ConfigError("missing required --method", "--method")
    bad = [x for x in m["methods"] if x not in METHODS]
    if bad:
        raise ConfigError(f"unknown method {bad[0]!r} (expected one of {', '.join(METHODS)})", "--method")
    spec = _build_spec(m["family"], m["params"])
    sweep = None
    if m["sweep"] is not None:
        var, values = m["sweep"]
        if var is None:
            raise ConfigError("missing required --sweep-var", "--sweep-var")
        if not values:
            raise ConfigError("sweep axis has no values", "--sweep-values")
        try:
            sweep = Sweep(var, tuple(values))
        except PlanValidationError as exc:
            raise ConfigError(str(exc), "--sweep-var") from None
    elif need_sweep:
        raise ConfigError("missing required --sweep-var", "--sweep-var")
    axis = sweep.variable if sweep else None
    for flag, key in (("--n", "n"), ("--gamma", "gamma")):
        if m[key] is None and axis != key:
            raise ConfigError(f"missing required {flag}", flag)
    n = _number(m["n"], "--n", int) if m["n"] is not None else int(sweep.values[0])
    gamma = _number(m["gamma"], "--gamma", float) if m["gamma"] is not None else float(sweep.values[0])
    plans = []
    for method in m["methods"]:
        try:
            plans.append(
                ExperimentPlan(
                    method=method,
                    dist=spec,
                    n=n,
                    gamma=gamma,
                    samples=_number(m["samples"], "--samples", int),
                    epsilon=_number(m["epsilon"], "--epsilon", float),
                    seed=_number(m["seed"], "--seed", int),
                    sweep=sweep,
                )
            )
        except PlanValidationError as exc:
            raise ConfigError(str(exc), _flag_for(str(exc))) from None
    return plans


def _flag_for(message: str) -> Optional[str]:
    for word, flag in (("method", "--method"), ("samples", "--samples"), ("epsilon", "--epsilon"),
                       ("gamma", "--gamma"), ("n ", "--n")):
        if message.startswith(word) or f" {word}" in message:
            return flag
    return None


def dump_config(plans: Sequence[ExperimentPlan]) -> dict:
    out = plans[0].to_dict()
    if len(plans) > 1:
        out["method"] = [p.method for p in plans]
    return out


# ---------------------------------------------------------------------------
# output


def _json_number(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def result_json(plan: ExperimentPlan, result) -> dict:
    out = {"method": plan.method, "family": plan.dist.family.value, "n": plan.n, "gamma": plan.gamma}
    out.update(result.to_dict())
    out["recommended_samples"] = _json_number(recommended_samples(result, plan.epsilon))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".10g") if math.isfinite(x) else ""
    return str(x)


def format_row(plan: ExperimentPlan, result) -> list[str]:
    base = [plan.method, plan.dist.family.value, plan.n, plan.gamma, plan.samples, plan.seed]
    if result is None:
        return [_fmt(v) for v in base] + [""] * len(_METRICS)
    adjusted = 4.0 * result.wnrv if plan.method == "ln-biased" else result.wnrv
    metrics = [result.estimate, result.scv, result.ci95_half_width, result.wall_seconds,
               result.wnrv, result.biased, result.bias_bound, adjusted]
    return [_fmt(v) for v in base + metrics]


def _emit(text: str, out_path: Optional[str]):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(message: str, flag: Optional[str], kind: str) -> str:
    err = {"type": kind, "message": message}
    if flag:
        err["flag"] = flag
    return json.dumps({"error": err})


# ---------------------------------------------------------------------------
# commands


def cmd_estimate(args) -> int:
    plans = plans_from_args(args, need_sweep=False)
    if len(plans) != 1:
        raise ConfigError("estimate takes exactly one --method", "--method")
    plan = plans[0]
    if args.dump_config:
        _emit(json.dumps(dump_config(plans), indent=2) + "\n", args.out)
        return EXIT_OK
    try:
        result = run(plan, workers=args.workers)
    except Exception as exc:  # estimator failures are reported, not raised
        print(_error(str(exc), None, type(exc).__name__))
        return EXIT_RUNTIME
    _emit(json.dumps(result_json(plan, result)) + "\n", args.out)
    return EXIT_OK


def _run_rows(plans: Sequence[ExperimentPlan], variable: str, values, workers, out_path) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    ok = 0
    for plan in plans:
        for value in values:
            row_plan = plan.with_axis(variable, value)
            try:
                result = run(row_plan, workers=workers)
                ok += 1
            except Exception as exc:
                print(f"row {row_plan.method} {variable}={value:g} failed: {type(exc).__name__}: {exc}",
                      file=sys.stderr)
                result = None
            writer.writerow(format_row(row_plan, result))
    _emit(buf.getvalue(), out_path)
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    plans = plans_from_args(args, need_sweep=True)
    if args.dump_config:
        _emit(json.dumps(dump_config(plans), indent=2) + "\n", args.out)
        return EXIT_OK
    sweep = plans[0].sweep
    if sweep.variable == "n":
        for v in sweep.values:
            if v != int(v) or v < 1:
                raise ConfigError(f"n axis values must be positive integers, got {v:g}", "--sweep-values")
    elif any(not v > 0 for v in sweep.values):
        raise ConfigError("gamma axis values must be > 0", "--sweep-values")
    return _run_rows(plans, sweep.variable, sweep.values, args.workers, args.out)


def cmd_compare(args) -> int:
    plans = plans_from_args(args, need_sweep=False)
    if len(plans) < 2:
        raise ConfigError("compare needs at least two --method flags", "--method")
    if args.dump_config:
        _emit(json.dumps(dump_config(plans), indent=2) + "\n", args.out)
        return EXIT_OK
    return _run_rows(plans, "n", (plans[0].n,), args.workers, args.out)


def cmd_oracle(args) -> int:
    m = _merge(args)
    spec = _build_spec(m["family"], m["params"])
    for flag, key in (("--n", "n"), ("--gamma", "gamma")):
        if m[key] is None:
            raise ConfigError(f"missing required {flag}", flag)
    n = _number(m["n"], "--n", int)
    gamma = _number(m["gamma"], "--gamma", float)
    if not 1 <= n <= ORACLE_MAX_N:
        raise ConfigError(f"oracle supports 1 <= n <= {ORACLE_MAX_N}, got {n}", "--n")
    if not gamma > 0:
        raise ConfigError("gamma must be > 0", "--gamma")
    grid = args.grid
    if grid < 1024 or grid & (grid - 1):
        raise ConfigError("grid must be a power of two >= 1024", "--grid")
    try:
        res = convolution_oracle(make_distribution(spec), gamma, n, grid)
    except Exception as exc:
        print(_error(str(exc), None, type(exc).__name__))
        return EXIT_RUNTIME
    out = {"family": spec.family.value, "n": n, "gamma": gamma}
    out.update(res.to_dict())
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gammais", description="Rare-event estimation of P(X_1 + ... + X_N <= gamma).")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, *, methods=True):
        if methods:
            p.add_argument("--method", action="append", help=f"one of {', '.join(METHODS)}; repeatable")
        p.add_argument("--dist", help="distribution family")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="distribution parameter; repeatable")
        p.add_argument("--n", type=float, help="number of summands")
        p.add_argument("--gamma", type=float, help="threshold")
        p.add_argument("--config", help="JSON or key = value file; flags override it")
        p.add_argument("--out", help="write output here instead of standard output")
        p.add_argument("--workers", type=int, help="worker threads (default from GAMMAIS_WORKERS, else 1)")
        if methods:
            p.add_argument("--samples", type=float, help="Monte Carlo replicates M (default 100000)")
            p.add_argument("--epsilon", type=float, help="target relative error (default 0.05)")
            p.add_argument("--seed", type=int, help="root seed (default 0)")
            p.add_argument("--dump-config", action="store_true", help="print the resolved plan as JSON and exit")

    p = sub.add_parser("estimate", help="one estimate as JSON")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="CSV over an n or gamma axis")
    common(p)
    p.add_argument("--sweep-var", choices=("n", "gamma"))
    p.add_argument("--sweep-values", help="comma list, a..b, or a..b:step")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="CSV with several methods at one (n, gamma)")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="deterministic convolution value as JSON")
    common(p, methods=False)
    p.add_argument("--grid", type=int, default=4096, help="grid cells on [0, gamma] (power of two)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("missing subcommand (estimate, sweep, compare, oracle)")
        return args.func(args)
    except ConfigError as exc:
        print(_error(str(exc), exc.flag, "ConfigError"))
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
