"""Command-line front end.

Subcommands:
  price   corrected price for one parameter set (closed form, MC or PCE)
  table   reproduction grid for one of the published tables
  check   built-in invariant and oracle checks

Exit codes: 0 success, 1 numerical failure or failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .models import DomainError, Exponential, ExtrapolationWarning, JumpParams, MarketParams, Polynomial, validate_params
from .montecarlo import MCConfig
from .pricing import price_closed, price_generic_o1

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2

DEFAULTS = {
    "model": "exp",
    "coeffs": "0.3,0.5",
    "alpha": 0.1,
    "jumps": False,
    "lambda": 2.0,
    "gamma": 0.05,
    "delta": 0.02,
    "s0": 100.0,
    "strike": 100.0,
    "rate": 0.03,
    "maturity": 0.5,
    "sigma0": 0.25,
    "sigma1": 0.15,
    "eps": 0.1,
    "order": 1,
    "method": "closed",
    "paths": 10_000,
    "steps": 64,
    "seed": 0,
    "degree": 15,
    "paper_literal": False,
    "format": "json",
    "out": None,
}
_FLOAT_KEYS = ("alpha", "lambda", "gamma", "delta", "s0", "strike", "rate", "maturity", "sigma0", "sigma1", "eps")
_INT_KEYS = ("order", "paths", "steps", "seed", "degree")
_CHOICES = {"model": ("exp", "linear", "poly"), "method": ("closed", "mc", "pce"), "format": ("json", "csv")}


class ConfigError(Exception):
    """Invalid user configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _json_number(x: float) -> str:
    if not math.isfinite(x):
        raise FloatingPointError(f"non-finite value {x!r} in output")
    return format(x, ".17g")


def dump_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if obj is None or isinstance(obj, str) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _json_number(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dump_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    return str(value)


def dump_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise ConfigError(f"out: cannot write {out!r}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


def load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path!r}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    if isinstance(data.get("coeffs"), list):
        data["coeffs"] = ",".join(str(c) for c in data["coeffs"])
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key in _FLOAT_KEYS:
        try:
            cfg[key] = float(cfg[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a number, got {cfg[key]!r}") from exc
    for key in _INT_KEYS:
        value = cfg[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        cfg[key] = int(value)
    for key, choices in _CHOICES.items():
        if cfg[key] not in choices:
            raise ConfigError(f"{key}: expected one of {list(choices)}, got {cfg[key]!r}")
    for key in ("jumps", "paper_literal"):
        if not isinstance(cfg[key], bool):
            raise ConfigError(f"{key}: expected true or false, got {cfg[key]!r}")
    return cfg


def _parse_coeffs(text: str) -> tuple[float, ...]:
    try:
        coeffs = tuple(float(c) for c in str(text).split(",") if c.strip())
    except ValueError as exc:
        raise ConfigError(f"coeffs: expected comma-separated numbers, got {text!r}") from exc
    if not coeffs:
        raise ConfigError("coeffs: at least one coefficient is needed")
    return coeffs


def build_context(cfg: dict):
    if cfg["model"] == "exp":
        model = Exponential(cfg["alpha"])
    else:
        model = Polynomial(_parse_coeffs(cfg["coeffs"]))
        if cfg["model"] == "linear" and not model.is_linear:
            raise ConfigError("coeffs: the linear model takes exactly two coefficients a0,a1")
    params = MarketParams(
        s0=cfg["s0"],
        strike=cfg["strike"],
        rate=cfg["rate"],
        maturity=cfg["maturity"],
        sigma0=cfg["sigma0"],
        sigma1=cfg["sigma1"],
        eps=cfg["eps"],
    )
    jumps = JumpParams(cfg["lambda"], cfg["gamma"], cfg["delta"]) if cfg["jumps"] else None
    try:
        return validate_params(params, model, jumps)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _check_consistency(cfg: dict, ctx) -> None:
    if cfg["order"] not in (1, 2):
        raise ConfigError(f"order: expected 1 or 2, got {cfg['order']}")
    if cfg["order"] == 2 and (cfg["method"] != "closed" or cfg["model"] != "exp" or cfg["jumps"]):
        raise ConfigError("order: second order is only available for the exponential closed form without jumps")
    linear = isinstance(ctx.model, Polynomial) and ctx.model.is_linear
    if cfg["method"] == "pce" and not (isinstance(ctx.model, Exponential) or linear):
        raise ConfigError("method: pce supports the exponential and linear models only")
    if cfg["method"] == "closed" and not (isinstance(ctx.model, Exponential) or linear):
        raise ConfigError("method: no closed form for a general polynomial; use --method mc")
    if cfg["paths"] < 2 or cfg["steps"] < 1:
        raise ConfigError("paths must be at least 2 and steps at least 1")
    if not 0 <= cfg["degree"] <= 30:
        raise ConfigError(f"degree: expected 0..30, got {cfg['degree']}")


def _model_echo(ctx, cfg: dict) -> dict:
    if isinstance(ctx.model, Exponential):
        return {"kind": "exp", "alpha": ctx.model.alpha}
    return {"kind": cfg["model"], "coeffs": list(ctx.model.coeffs)}


def _params_echo(ctx) -> dict:
    p = ctx.params
    out = {name: getattr(p, name) for name in p.__dataclass_fields__}
    if ctx.jumps is not None:
        out.update({"lambda": ctx.jumps.lam, "gamma": ctx.jumps.gamma, "delta": ctx.jumps.delta})
    return out


def run_price(cfg: dict) -> dict:
    """Price one configuration and return the report dictionary."""
    ctx = build_context(cfg)
    _check_consistency(cfg, ctx)
    literal = cfg["paper_literal"]
    start = time.perf_counter()
    estimate = None
    try:
        if cfg["method"] == "closed":
            breakdown = price_closed(ctx, cfg["order"], literal)
        else:
            mc = MCConfig(n_paths=cfg["paths"], n_steps=cfg["steps"], seed=cfg["seed"])
            breakdown, estimate = price_generic_o1(ctx, cfg["method"], mc, cfg["degree"], literal)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    runtime_ms = 1e3 * (time.perf_counter() - start)
    report = {
        "model": _model_echo(ctx, cfg),
        "params": _params_echo(ctx),
        "mode": "paper-literal" if literal else "default",
        "method": cfg["method"],
        "order": cfg["order"],
        "price": breakdown.as_dict(),
    }
    if estimate is not None:
        report["estimate"] = estimate.as_dict()
    report["runtime_ms"] = runtime_ms
    values = [breakdown.base, breakdown.total] + [t.value for t in breakdown.terms]
    if not all(math.isfinite(v) for v in values):
        raise FloatingPointError("non-finite price")
    return report


PRICE_CSV_KEYS = ("model", "s0", "strike", "rate", "maturity", "sigma0", "sigma1", "eps", "mode", "method", "order")
PRICE_CSV_VALUES = ("base", "correction", "total", "mean", "se", "n", "runtime_ms")


def price_csv(report: dict) -> str:
    row = {k: report["params"].get(k) for k in PRICE_CSV_KEYS}
    row.update(model=report["model"]["kind"], mode=report["mode"], method=report["method"], order=report["order"])
    price = report["price"]
    row.update(base=price["base"], total=price["total"], correction=price["total"] - price["base"])
    row.update(report.get("estimate", {}))
    row["runtime_ms"] = report["runtime_ms"]
    return dump_csv(PRICE_CSV_KEYS + PRICE_CSV_VALUES, [row])


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_price_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=_CHOICES["model"])
    p.add_argument("--coeffs", help="polynomial coefficients a0,a1,... (lowest degree first)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--jumps", action="store_const", const=True, help="add compound Poisson jumps")
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--s0", type=float)
    p.add_argument("--strike", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--maturity", type=float)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--sigma1", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--method", choices=_CHOICES["method"])
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--paper-literal", dest="paper_literal", action="store_const", const=True)
    p.add_argument("--format", choices=_CHOICES["format"])
    p.add_argument("--out")
    p.add_argument("--config", help="flat JSON file with the same keys; flags override it")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lvexpand", description="Small-noise expansion prices for local-volatility models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    price = sub.add_parser("price", help="price one parameter set")
    _add_price_flags(price)

    table = sub.add_parser("table", help="reproduce a published table as CSV or JSON")
    table.add_argument("table_id", type=int)
    table.add_argument("--paths", type=int, default=10_000)
    table.add_argument("--steps", type=int, default=64)
    table.add_argument("--seed", type=int, default=0)
    table.add_argument("--degree", type=int, default=15)
    table.add_argument("--format", choices=_CHOICES["format"], default="csv")
    table.add_argument("--out")

    check = sub.add_parser("check", help="run built-in checks")
    check.add_argument("suite", nargs="?", default="all", choices=("invariants", "oracles", "all"))
    check.add_argument("--out")
    return parser


def _cmd_price(args) -> int:
    cfg = resolve_config(args)
    report = run_price(cfg)
    text = dump_json(report) if cfg["format"] == "json" else price_csv(report)
    _emit(text, cfg["out"])
    return EXIT_OK


def _cmd_table(args) -> int:
    from .tables import COLUMNS, TABLE_SPECS, TableOptions, run_table

    if args.table_id not in TABLE_SPECS:
        raise ConfigError(f"table_id: unknown table {args.table_id}; valid ids: {sorted(TABLE_SPECS)}")
    if args.paths < 2 or args.steps < 1 or not 0 <= args.degree <= 30:
        raise ConfigError("paths must be at least 2, steps at least 1 and degree in 0..30")
    opts = TableOptions(mc=MCConfig(n_paths=args.paths, n_steps=args.steps, seed=args.seed), degree=args.degree)
    rows = run_table(args.table_id, opts)
    text = dump_json(rows) if args.format == "json" else dump_csv(COLUMNS, rows)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_check(args) -> int:
    from .checks import run_suite

    results = run_suite(args.suite)
    passed = all(r.passed for r in results)
    report = {"suite": args.suite, "passed": passed, "checks": [r.as_dict() for r in results]}
    _emit(dump_json(report), args.out)
    return EXIT_OK if passed else EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"price": _cmd_price, "table": _cmd_table, "check": _cmd_check}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", ExtrapolationWarning)
            return handlers[args.command](args)
    except ConfigError as exc:
        print(f"lvexpand: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lvexpand: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
