"""Small-noise asymptotic expansions of local-volatility option prices.

Closed-form first- and second-order corrections to Black-Scholes for
exponential and polynomial volatility corrections, with and without compound
Poisson jumps, cross-checked by Monte Carlo and multi-element polynomial chaos.
"""

from .expansion import (
    BrownianPath,
    JumpPath,
    compose_coeffs,
    eval_direct,
    eval_x1,
    eval_x2_exp,
    eval_x2_linear,
    exp_constants,
    linear_betas,
    poly_constants,
)
from .models import (
    DomainError,
    Exponential,
    ExtrapolationWarning,
    JumpParams,
    MarketParams,
    Polynomial,
    ValidatedContext,
    risk_neutral_drift,
    validate_params,
)
from .montecarlo import MCConfig, MCEstimate, euler_full_sde, mc_correction, mc_estimate
from .pce import PCEApprox, hermite_eval, pce_correction, pce_mean, pce_project
from .pricing import (
    PriceBreakdown,
    bs_price,
    price_closed,
    price_exp_jump_o1,
    price_exp_o1,
    price_exp_o2,
    price_generic_o1,
    price_linear_jump_o1,
    price_linear_o1,
)

__version__ = "0.1.0"

__all__ = [
    "BrownianPath",
    "DomainError",
    "Exponential",
    "ExtrapolationWarning",
    "JumpParams",
    "JumpPath",
    "MCConfig",
    "MCEstimate",
    "MarketParams",
    "PCEApprox",
    "Polynomial",
    "PriceBreakdown",
    "ValidatedContext",
    "bs_price",
    "compose_coeffs",
    "euler_full_sde",
    "eval_direct",
    "eval_x1",
    "eval_x2_exp",
    "eval_x2_linear",
    "exp_constants",
    "hermite_eval",
    "linear_betas",
    "mc_correction",
    "mc_estimate",
    "pce_correction",
    "pce_mean",
    "pce_project",
    "poly_constants",
    "price_closed",
    "price_exp_jump_o1",
    "price_exp_o1",
    "price_exp_o2",
    "price_generic_o1",
    "price_linear_jump_o1",
    "price_linear_o1",
    "risk_neutral_drift",
    "validate_params",
]
