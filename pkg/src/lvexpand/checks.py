"""Self-checks runnable from the command line.

Each check returns a :class:`CheckResult` carrying the measured quantities, so
the report is useful even when a check passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import quadrature as qd
from .expansion import (
    ctx_exp_constants,
    eval_direct,
    eval_x1,
    eval_x1_exp,
    eval_x1_linear,
    eval_x2_exp,
    eval_x2_linear,
    ctx_linear_betas,
)
from .models import Exponential, JumpParams, MarketParams, Polynomial, ValidatedContext, validate_params
from .montecarlo import MCConfig, block_stream, euler_paths, mc_correction, simulate_brownian
from .pce import pce_correction, pce_mean, pce_project, split_elements
from .pricing import bs_price, price_closed

TABLE1_EXP = Exponential(0.1)
TABLE8_LINEAR = Polynomial((0.3, 0.5))
TABLE_JUMPS = JumpParams(2.0, 0.05, 0.02)
REMAINDER_EPS = (0.1, 0.05, 0.025, 0.0125)


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "measured": self.measured}


def table1_context(s0=100.0, sigma0=0.25, eps=0.1, jumps=None) -> ValidatedContext:
    return validate_params(MarketParams(s0, 100.0, 0.03, 0.5, sigma0, 0.15, eps), TABLE1_EXP, jumps)


def table8_context(s0=100.0, sigma0=0.25, eps=0.1, jumps=None) -> ValidatedContext:
    return validate_params(MarketParams(s0, 100.0, 0.03, 0.5, sigma0, 0.1, eps), TABLE8_LINEAR, jumps)


def random_context(rng: np.random.Generator, model_kind: str, jumps: bool) -> ValidatedContext:
    params = MarketParams(
        s0=rng.uniform(60, 140),
        strike=rng.uniform(60, 140),
        rate=rng.uniform(0.0, 0.08),
        maturity=rng.uniform(0.1, 2.0),
        sigma0=rng.uniform(0.05, 0.6),
        sigma1=rng.uniform(0.01, 0.3),
        eps=rng.uniform(0.0, 0.3),
    )
    if model_kind == "exp":
        model = Exponential(rng.choice([-1, 1]) * rng.uniform(0.05, 1.0))
    else:
        model = Polynomial((rng.uniform(-1, 1), rng.uniform(-1, 1)))
    jp = JumpParams(rng.uniform(0.1, 3), rng.uniform(-0.1, 0.1), rng.uniform(0.0, 0.1)) if jumps else None
    return validate_params(params, model, jp)


def remainder_study(
    ctx: ValidatedContext,
    eps_grid=REMAINDER_EPS,
    n_paths: int = 100,
    n_steps: int = 2**12,
    seed: int = 0,
) -> dict:
    """Sup over common paths of |X^eps_T - expansion| for the full Euler SDE.

    Returns first- and second-order errors per eps, the fitted log-log slope of
    the first-order error (reduced X1) and the same slope with the
    direct-system X1, which shares the Euler left-point rule.
    """
    p = ctx.params
    path = simulate_brownian(p.maturity, n_steps, block_stream(seed, 0), n_paths)
    x0 = ctx.x0 + ctx.mu * p.maturity + p.sigma0 * path.terminal
    if isinstance(ctx.model, Exponential):
        consts = ctx_exp_constants(ctx)
        x1, x2 = eval_x1_exp(path, ctx, consts), eval_x2_exp(path, ctx, consts)
    else:
        x1, x2 = eval_x1_linear(path, ctx, ctx_linear_betas(ctx)), eval_x2_linear(path, ctx)
    x1_direct, _ = eval_direct(path, ctx, order=1)
    err1, err2, err_direct = [], [], []
    for eps in eps_grid:
        xe = euler_paths(ctx, path, eps)
        err1.append(float(np.max(np.abs(xe - x0 - eps * x1))))
        err2.append(float(np.max(np.abs(xe - x0 - eps * x1 - eps * eps * x2))))
        err_direct.append(float(np.max(np.abs(xe - x0 - eps * x1_direct))))
    log_eps = np.log(eps_grid)
    return {
        "eps": list(eps_grid),
        "err_first": err1,
        "err_second": err2,
        "slope": float(np.polyfit(log_eps, np.log(err1), 1)[0]),
        "slope_direct": float(np.polyfit(log_eps, np.log(err_direct), 1)[0]),
    }


def reduction_errors(ctx: ValidatedContext, steps=(2**8, 2**10, 2**12), n_paths: int = 100, seed: int = 1) -> dict:
    """Max |reduced - direct| for X1 and X2 on refinements of one set of paths."""
    p = ctx.params
    fine = simulate_brownian(p.maturity, max(steps), block_stream(seed, 0), n_paths)
    out = {"steps": list(steps), "x1": [], "x2": []}
    for n in steps:
        path = fine.subsample(max(steps) // n)
        d1, d2 = eval_direct(path, ctx)
        if isinstance(ctx.model, Exponential):
            consts = ctx_exp_constants(ctx)
            r1, r2 = eval_x1_exp(path, ctx, consts), eval_x2_exp(path, ctx, consts)
        else:
            r1, r2 = eval_x1(path, ctx), eval_x2_linear(path, ctx)
        out["x1"].append(float(np.max(np.abs(r1 - d1))))
        out["x2"].append(float(np.max(np.abs(r2 - d2))))
    return out


@dataclass(frozen=True, slots=True)
class _Tagged:
    total: float
    literal: bool


def _closed_pricers(ctx: ValidatedContext) -> list[_Tagged]:
    out = [_Tagged(price_closed(ctx).total, False), _Tagged(price_closed(ctx, literal=True).total, True)]
    if isinstance(ctx.model, Exponential) and ctx.jumps is None:
        out += [
            _Tagged(price_closed(ctx, order=2).total, False),
            _Tagged(price_closed(ctx, order=2, literal=True).total, True),
        ]
    return out


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------


def check_determinism() -> CheckResult:
    ctx = table1_context(jumps=TABLE_JUMPS)
    runs = [mc_correction(ctx, MCConfig(n_paths=20_000, seed=11, workers=w)) for w in (1, 4, 8)]
    same = all(r == runs[0] for r in runs)
    return CheckResult("mc_determinism_workers", same, {"means": [r.mean for r in runs]})


def check_remainder() -> CheckResult:
    study = remainder_study(table1_context())
    improves = all(b < a for a, b in zip(study["err_first"], study["err_second"]))
    return CheckResult("remainder_order", study["slope"] >= 1.8 and improves, study)


def collapse_deviations(n: int = 50, seed: int = 2024) -> dict:
    """Max relative deviation from bs_price at eps = 0 and at sigma1 = 0.

    The printed linear beta3 carries a term without a sigma1 factor, so the
    literal linear price does not collapse at sigma1 = 0; it is measured
    separately and not part of ``gated``.
    """
    rng = np.random.default_rng(seed)
    gated = 0.0
    literal_linear = 0.0
    for i in range(n):
        ctx = random_context(rng, ("exp", "linear")[i % 2], jumps=False)
        base = bs_price(ctx)
        for br in _closed_pricers(ctx.with_params(eps=0.0)):
            gated = max(gated, abs(br.total / base - 1.0))
        zero = ctx.with_params(sigma1=0.0)
        for br in _closed_pricers(zero):
            dev = abs(br.total / base - 1.0)
            if isinstance(ctx.model, Polynomial) and br.literal:
                literal_linear = max(literal_linear, dev)
            else:
                gated = max(gated, dev)
    return {"gated": gated, "literal_linear_sigma1_zero": literal_linear}


def check_collapse(n: int = 50) -> CheckResult:
    dev = collapse_deviations(n)
    return CheckResult("collapse_identities", dev["gated"] <= 1e-12, dev)


def check_sigma1_scaling() -> CheckResult:
    path = simulate_brownian(0.5, 256, block_stream(5, 0), 50)
    worst = 0.0
    for ctx in (table1_context(), table8_context()):
        c = 1.7
        scaled = ctx.with_params(sigma1=c * ctx.params.sigma1)
        for k, fn in ((1, lambda cx: eval_direct(path, cx)[0]), (2, lambda cx: eval_direct(path, cx)[1])):
            a, b = fn(ctx), fn(scaled)
            worst = max(worst, float(np.max(np.abs(b - c**k * a) / np.maximum(np.abs(b), 1e-300))))
    return CheckResult("sigma1_scaling", worst < 1e-12, {"max_rel_dev": worst})


def check_pce_refinement() -> CheckResult:
    ratios = []
    for theta in (-1.0, 0.0, 1.0):
        sigma = 0.25
        exact = math.exp(0.5 * sigma * sigma) * ndtr(sigma - theta)

        def g(xi, theta=theta):
            return np.where(xi[0] > theta, np.exp(sigma * xi[0]), 0.0)

        one = abs(pce_mean(pce_project(g, 1, 15)) - exact)
        two = abs(pce_mean(pce_project(g, 1, 15, split_elements(1, 0, [theta]))) - exact)
        ratios.append(one / max(two, 1e-300))
    return CheckResult("pce_element_refinement", min(ratios) >= 10.0, {"ratios": ratios})


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def check_quadrature_mgf() -> CheckResult:
    exp_ctx, lin_ctx = table1_context(), table8_context()
    alpha = exp_ctx.model.alpha
    pairs = {
        "I1": (qd.integral_I1(exp_ctx, alpha, indicator=False), qd.mgf_I1(exp_ctx, alpha)),
        "I2": (qd.integral_I2(exp_ctx, indicator=False), qd.mgf_I2(exp_ctx)),
        "I3": (qd.integral_I3(exp_ctx, indicator=False), qd.mgf_I3(exp_ctx)),
        "I": (qd.integral_I(lin_ctx, indicator=False), qd.mgf_I(lin_ctx)),
    }
    rel = {k: abs(a / b - 1.0) for k, (a, b) in pairs.items()}
    return CheckResult("quadrature_mgf", max(rel.values()) <= 1e-8, rel)


def check_reduction() -> CheckResult:
    measured = {}
    ok = True
    for name, ctx in (("exp", table1_context()), ("linear", table8_context())):
        res = reduction_errors(ctx)
        measured[name] = res
        for key in ("x1", "x2"):
            errs = res[key]
            ok &= errs[-1] < 1e-3 and errs[-1] < errs[0]
    return CheckResult("reduction_vs_direct", ok, measured)


def check_closed_vs_mc(n_paths: int = 50_000) -> CheckResult:
    measured = {}
    ok = True
    for name, ctx in (
        ("exp", table1_context()),
        ("linear", table8_context()),
        ("exp_jump", table1_context(jumps=TABLE_JUMPS)),
        ("linear_jump", table8_context(jumps=TABLE_JUMPS)),
    ):
        p = ctx.params
        closed = math.exp(p.rate * p.maturity) * price_closed(ctx).correction() / p.eps
        est = mc_correction(ctx, MCConfig(n_paths=n_paths, seed=3))
        z = (est.mean - closed) / est.std_error
        measured[name] = {"closed": closed, "mc": est.mean, "se": est.std_error, "z": z}
        ok &= abs(z) <= 3.0
    return CheckResult("closed_vs_mc", ok, measured)


def check_pce_vs_closed() -> CheckResult:
    measured = {}
    for name, ctx in (("exp", table1_context()), ("linear", table8_context())):
        p = ctx.params
        closed = math.exp(p.rate * p.maturity) * price_closed(ctx).correction() / p.eps
        measured[name] = abs(pce_correction(ctx) / closed - 1.0)
    return CheckResult("pce_vs_closed", max(measured.values()) <= 1e-8, measured)


SUITES: dict[str, list[Callable[[], CheckResult]]] = {
    "invariants": [check_determinism, check_remainder, check_collapse, check_sigma1_scaling, check_pce_refinement],
    "oracles": [check_quadrature_mgf, check_reduction, check_closed_vs_mc, check_pce_vs_closed],
}


def run_suite(name: str) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    return [check() for suite in names for check in SUITES[suite]]
