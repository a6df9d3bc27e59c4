"""Closed-form corrected call prices.

All corrections are expectations of the form e^{-rT} E[1{X0_T > ln K} e^{X0_T} Y]
for functionals Y of the Gaussian path. Terminal functionals reduce to normal
CDF values; time-integral functionals go through :mod:`lvexpand.quadrature`.

Two modes are available. The default uses the formulas that follow from the
expansion system and agree with Monte Carlo. ``literal=True`` evaluates the
formulas exactly as printed in the source, including their inconsistencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import ndtr

from . import quadrature as qd
from .expansion import (
    LinearBetas,
    ctx_exp_constants,
    ctx_linear_betas,
)
from .models import DomainError, Exponential, Polynomial, ValidatedContext


def _npdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@dataclass(frozen=True, slots=True)
class PriceTerm:
    """A correction term; it contributes eps**order * coeff to the total."""

    label: str
    order: int
    coeff: float
    value: float


@dataclass(frozen=True, slots=True)
class PriceBreakdown:
    base: float
    terms: tuple[PriceTerm, ...] = field(default_factory=tuple)
    total: float = 0.0

    def correction(self, order: int | None = None) -> float:
        """Sum of term values, optionally restricted to one order."""
        return math.fsum(t.value for t in self.terms if order is None or t.order == order)

    def as_dict(self) -> dict:
        return {
            "base": self.base,
            "terms": [
                {"label": t.label, "order": t.order, "coeff": t.coeff, "value": t.value}
                for t in self.terms
            ],
            "total": self.total,
        }


def _breakdown(base: float, eps: float, items: list[tuple[str, int, float]]) -> PriceBreakdown:
    terms = tuple(PriceTerm(lbl, order, coeff, eps**order * coeff) for lbl, order, coeff in items)
    total = base + math.fsum(t.value for t in terms)
    return PriceBreakdown(base, terms, total)


# ---------------------------------------------------------------------------
# Black-Scholes building blocks
# ---------------------------------------------------------------------------


def d_of(ctx: ValidatedContext, a: float) -> float:
    """(ln(s0/K) + (r - sigma0^2 a / 2) T) / (sigma0 sqrt(T)).

    d(1) is the textbook d2 and d(-1) the textbook d1. Uses |sigma0|.
    """
    p = ctx.params
    return (math.log(p.s0 / p.strike) + (p.rate - 0.5 * p.sigma0**2 * a) * p.maturity) / (
        abs(p.sigma0) * math.sqrt(p.maturity)
    )


def d1(ctx: ValidatedContext) -> float:
    return d_of(ctx, 1.0)


def d2(ctx: ValidatedContext) -> float:
    return d_of(ctx, 1.0) + abs(ctx.params.sigma0) * math.sqrt(ctx.params.maturity)


def bs_price(ctx: ValidatedContext) -> float:
    """European call under the unperturbed model (volatility |sigma0|)."""
    p = ctx.params
    return p.s0 * ndtr(d_of(ctx, -1.0)) - p.strike * math.exp(-p.rate * p.maturity) * ndtr(
        d_of(ctx, 1.0)
    )


def _p_one(ctx: ValidatedContext) -> float:
    """e^{-rT} E[1_D e^{X0_T}]."""
    return ctx.params.s0 * ndtr(d_of(ctx, -1.0))


def _p_exp_terminal(ctx: ValidatedContext, b: float) -> float:
    """e^{-rT} E[1_D e^{X0_T} e^{b X0_T}]."""
    p = ctx.params
    t = p.maturity
    return (
        p.s0 ** (1 + b)
        * math.exp(b * p.rate * t + 0.5 * p.sigma0**2 * t * b * (b + 1))
        * ndtr(d_of(ctx, -1.0 - 2.0 * b))
    )


def _truncated_moments(ctx: ValidatedContext) -> tuple[float, float]:
    """E~[1_D W_T] and E~[1_D W_T^2] under the measure with density e^{X0_T}/E[e^{X0_T}]."""
    p = ctx.params
    t = p.maturity
    st = math.sqrt(t)
    c = d_of(ctx, -1.0)
    n, ph = ndtr(c), _npdf(c)
    m1 = p.sigma0 * t * n + st * ph
    m2 = p.sigma0**2 * t**2 * n + 2 * p.sigma0 * t * st * ph + t * (n - c * ph)
    return m1, m2


# ---------------------------------------------------------------------------
# Exponential model
# ---------------------------------------------------------------------------


def require_positive_sigma0(ctx: ValidatedContext) -> None:
    """The closed forms integrate over {W_T > theta}, which assumes sigma0 > 0."""
    if ctx.params.sigma0 < 0:
        raise DomainError("closed-form and PCE corrections need sigma0 > 0; use method mc")


def _require_exp(ctx: ValidatedContext) -> float:
    require_positive_sigma0(ctx)
    if not isinstance(ctx.model, Exponential):
        raise DomainError("this pricer needs an exponential model")
    return ctx.model.alpha


def _exp_o1_items(
    ctx: ValidatedContext,
    literal: bool,
    n_time: int,
    n_space: int,
    unit_offset: bool,
) -> list[tuple[str, int, float]]:
    alpha = _require_exp(ctx)
    p = ctx.params
    t = p.maturity
    s0 = p.s0
    if literal:
        consts = ctx_exp_constants(ctx, literal=True)
        i1 = qd.integral_I1(ctx, alpha, n_time, n_space, literal=True)
        k1 = consts.k_alpha * math.exp(-0.5 * p.sigma0**2 * t)
        k2 = consts.q
        k3 = consts.q * math.exp(0.5 * p.sigma0**2 * t * alpha * (alpha + 1) + alpha * p.rate * t)
        return [
            ("K1*I1", 1, k1 * s0 ** (alpha + 1) * i1),
            ("-K2*N(d1)", 1, -k2 * s0 * ndtr(d1(ctx))),
            ("K3*N(d(2a+1))", 1, k3 * s0 ** (alpha + 1) * ndtr(d_of(ctx, 2 * alpha + 1))),
        ]
    consts = ctx_exp_constants(ctx, x0=0.0 if unit_offset else None)
    i1 = qd.integral_I1(ctx, alpha, n_time, n_space)
    return [
        ("K*A", 1, consts.k_alpha * s0 ** (1 + alpha) * math.exp(-0.5 * p.sigma0**2 * t) * i1),
        ("-q*E0", 1, -consts.q * consts.offset * _p_one(ctx)),
        ("q*E_T", 1, consts.q * _p_exp_terminal(ctx, alpha)),
    ]


def price_exp_o1(
    ctx: ValidatedContext,
    literal: bool = False,
    n_time: int = qd.N_TIME,
    n_space: int = qd.N_SPACE,
    unit_offset: bool = False,
) -> PriceBreakdown:
    """First-order corrected price for f(x) = exp(alpha x).

    ``unit_offset`` keeps the default formulas but subtracts 1 instead of
    exp(alpha x0) in X1, a variant reported alongside the tables.
    """
    items = _exp_o1_items(ctx, literal, n_time, n_space, unit_offset)
    return _breakdown(bs_price(ctx), ctx.params.eps, items)


def price_exp_o2(
    ctx: ValidatedContext,
    literal: bool = False,
    n_time: int = qd.N_TIME,
    n_space: int = qd.N_SPACE,
) -> PriceBreakdown:
    """Second-order price: adds eps^2 e^{-rT} E[Phi'(X0_T) (X2_T + (X1_T)^2 / 2)].

    Only the regular part of Phi'' = 1{x > ln K} e^x enters; the Dirac part is
    dropped, as in the source.
    """
    alpha = _require_exp(ctx)
    p = ctx.params
    t = p.maturity
    s0 = p.s0
    sig2t = p.sigma0**2 * t
    items = _exp_o1_items(ctx, literal, n_time, n_space, False)
    i1a = qd.integral_I1(ctx, alpha, n_time, n_space, literal=literal)
    i1b = qd.integral_I1(ctx, 2 * alpha, n_time, n_space, literal=literal)
    i2 = qd.integral_I2(ctx, n_time, n_space)
    i3 = qd.integral_I3(ctx, n_time, n_space)

    if literal:
        consts = ctx_exp_constants(ctx, literal=True)
        k, q = consts.k_alpha, consts.q
        c1, c2, c3, c4, c5, c6, c7 = consts.c
        ek = math.exp(-0.5 * sig2t)
        k4 = (c1 + 2 * k * q) * ek
        k5 = c2 * math.exp(alpha * p.rate * t - 0.5 * sig2t * (alpha + 1))
        k6 = (c3 + 2 * k * q) * ek
        k7 = (c4 + 2 * k**2) * ek
        k8 = c5 * math.exp(0.5 * sig2t * alpha * (2 * alpha + 1) + 2 * alpha * p.rate * t)
        k9 = (c6 + q) * math.exp(0.5 * sig2t * alpha * (alpha + 1) + alpha * p.rate * t)
        k10 = c7 - q
        items += [
            ("K4*I1(2a)", 2, k4 * s0 ** (2 * alpha + 1) * i1b),
            ("K5*I2", 2, k5 * s0 ** (2 * alpha + 1) * i2),
            ("K6*I1(a)", 2, k6 * s0 ** (alpha + 1) * i1a),
            ("K7*I3", 2, k7 * s0 ** (2 * alpha + 1) * i3),
            ("K8*N(d(-3-4a))", 2, k8 * s0 ** (2 * alpha + 1) * ndtr(d_of(ctx, -3 - 4 * alpha))),
            ("K9*N(d(-1-2a))", 2, k9 * s0 ** (alpha + 1) * ndtr(d_of(ctx, -1 - 2 * alpha))),
            ("K10*N(d(1))", 2, k10 * s0 * ndtr(d_of(ctx, 1.0))),
        ]
        return _breakdown(bs_price(ctx), p.eps, items)

    consts = ctx_exp_constants(ctx)
    k, q, e0 = consts.k_alpha, consts.q, consts.offset
    c1, c2, c3, c4, c5, c6, c7 = consts.c
    ek = math.exp(-0.5 * sig2t)
    p_g = s0 ** (1 + 2 * alpha) * ek * i1b
    p_ea = s0 ** (1 + 2 * alpha) * math.exp(alpha * p.rate * t - 0.5 * (1 + alpha) * sig2t) * i2
    p_a = s0 ** (1 + alpha) * ek * i1a
    p_h = s0 ** (1 + 2 * alpha) * ek * i3
    items += [
        ("G", 2, c1 * p_g),
        ("E_T*A", 2, (c2 + k * q) * p_ea),
        ("A", 2, (c3 - k * q * e0) * p_a),
        ("H", 2, (c4 + k * k) * p_h),
        ("F_T", 2, (c5 + 0.5 * q * q) * _p_exp_terminal(ctx, 2 * alpha)),
        ("E_T", 2, (c6 - q * q * e0) * _p_exp_terminal(ctx, alpha)),
        ("1", 2, (c7 + 0.5 * q * q * e0 * e0) * _p_one(ctx)),
    ]
    return _breakdown(bs_price(ctx), p.eps, items)


def _jump_items(ctx: ValidatedContext, literal: bool) -> list[tuple[str, int, float]]:
    require_positive_sigma0(ctx)
    jp = ctx.jumps
    if jp is None:
        raise DomainError("this pricer needs jump parameters")
    p = ctx.params
    t = p.maturity
    if literal:
        n = ndtr(d1(ctx))
        return [
            ("T*N(d1)*kappa", 1, t * p.s0 * n * jp.mean_jump_factor),
            ("T*N(d1)*delta*lambda", 1, t * p.s0 * n * jp.delta * jp.lam),
        ]
    n1 = _p_one(ctx)
    return [
        ("compensator", 1, n1 * jp.compensator * t),
        ("jump mean", 1, n1 * jp.lam * t * jp.gamma),
    ]


def price_exp_jump_o1(
    ctx: ValidatedContext,
    literal: bool = False,
    n_time: int = qd.N_TIME,
    n_space: int = qd.N_SPACE,
    unit_offset: bool = False,
) -> PriceBreakdown:
    items = _exp_o1_items(ctx, literal, n_time, n_space, unit_offset) + _jump_items(ctx, literal)
    return _breakdown(bs_price(ctx), ctx.params.eps, items)


# ---------------------------------------------------------------------------
# Linear model
# ---------------------------------------------------------------------------


def _require_linear(ctx: ValidatedContext) -> None:
    require_positive_sigma0(ctx)
    if not (isinstance(ctx.model, Polynomial) and ctx.model.is_linear):
        raise DomainError("this pricer needs a linear model (two coefficients)")


def _linear_items(
    ctx: ValidatedContext,
    literal: bool,
    n_time: int,
    n_space: int,
    betas: LinearBetas | None,
) -> list[tuple[str, int, float]]:
    _require_linear(ctx)
    p = ctx.params
    t = p.maturity
    st = math.sqrt(t)
    s0 = p.s0
    sig = p.sigma0
    b = betas or ctx_linear_betas(ctx, literal)
    i = qd.integral_I(ctx, n_time, n_space)
    if literal:
        d = d1(ctx)
        n = ndtr(d)
        return [
            ("(b1+s0*b3+b4)T", 1, s0 * (b.beta1 + sig * b.beta3 + b.beta4) * t * n),
            ("(b2+s0^2*b4)T^2", 1, s0 * (b.beta2 + sig**2 * b.beta4) * t**2 * n),
            ("(b3+2s0*b4*T+T*b5)", 1, s0 * (b.beta3 + 2 * sig * b.beta4 * t + t * b.beta5) * st * _npdf(-d)),
            ("-b4*T*d1", 1, -s0 * b.beta4 * t * d * _npdf(d)),
            ("b5*T^4", 1, s0 * t**2 * b.beta5 * sig * t**2 * n),
            ("-b6*I", 1, -s0 * math.exp(0.5 * sig**2 * t) * b.beta6 * i),
        ]
    n = ndtr(d_of(ctx, -1.0))
    m1, m2 = _truncated_moments(ctx)
    return [
        ("b1*T", 1, s0 * b.beta1 * t * n),
        ("b2*T^2", 1, s0 * b.beta2 * t**2 * n),
        ("b3*W_T", 1, s0 * b.beta3 * m1),
        ("b4*W_T^2", 1, s0 * b.beta4 * m2),
        ("b5*T*W_T", 1, s0 * b.beta5 * t * m1),
        ("-b6*int W", 1, -s0 * math.exp(-0.5 * sig**2 * t) * b.beta6 * i),
    ]


def price_linear_o1(
    ctx: ValidatedContext,
    literal: bool = False,
    n_time: int = qd.N_TIME,
    n_space: int = qd.N_SPACE,
    betas: LinearBetas | None = None,
) -> PriceBreakdown:
    """First-order corrected price for f(x) = a0 + a1 x.

    ``betas`` overrides the coefficients of X1 (for variant studies).
    """
    items = _linear_items(ctx, literal, n_time, n_space, betas)
    return _breakdown(bs_price(ctx), ctx.params.eps, items)


def price_linear_jump_o1(
    ctx: ValidatedContext,
    literal: bool = False,
    n_time: int = qd.N_TIME,
    n_space: int = qd.N_SPACE,
) -> PriceBreakdown:
    items = _linear_items(ctx, literal, n_time, n_space, None) + _jump_items(ctx, literal)
    return _breakdown(bs_price(ctx), ctx.params.eps, items)


# ---------------------------------------------------------------------------
# Dispatch and estimator-based prices
# ---------------------------------------------------------------------------


def price_closed(ctx: ValidatedContext, order: int = 1, literal: bool = False) -> PriceBreakdown:
    """Closed-form price for the context's model."""
    model = ctx.model
    if isinstance(model, Exponential):
        if order == 2:
            if ctx.jumps is not None:
                raise DomainError("second order is only available without jumps")
            return price_exp_o2(ctx, literal)
        if ctx.jumps is not None:
            return price_exp_jump_o1(ctx, literal)
        return price_exp_o1(ctx, literal)
    if order != 1:
        raise DomainError("second order is only available for the exponential model")
    if isinstance(model, Polynomial) and model.is_linear:
        if ctx.jumps is not None:
            return price_linear_jump_o1(ctx, literal)
        return price_linear_o1(ctx, literal)
    raise DomainError("no closed form for a general polynomial; use method mc")


def price_generic_o1(
    ctx: ValidatedContext,
    method: str = "mc",
    cfg=None,
    degree: int = 15,
    literal: bool = False,
):
    """Base plus eps e^{-rT} times an estimate of E[1_D e^{X0_T} X1_T].

    Returns ``(PriceBreakdown, estimate)``; ``estimate`` is an MCEstimate for
    ``method="mc"`` and None for ``method="pce"``.
    """
    p = ctx.params
    disc = math.exp(-p.rate * p.maturity)
    base = bs_price(ctx)
    if method == "mc":
        from .montecarlo import MCConfig, mc_correction

        est = mc_correction(ctx, cfg or MCConfig(), literal=literal)
        br = _breakdown(base, p.eps, [("MC E[Phi' X1]", 1, disc * est.mean)])
        return br, est
    if method == "pce":
        from .pce import pce_correction

        val = pce_correction(ctx, degree=degree, literal=literal)
        return _breakdown(base, p.eps, [("PCE E[Phi' X1]", 1, disc * val)]), None
    raise DomainError(f"unknown method {method!r}")
