"""Domain types, validation and derived quantities shared across the package."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

EPS_WARN_THRESHOLD = 0.5


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a formula."""


class ExtrapolationWarning(UserWarning):
    """Emitted when the expansion parameter is large enough to make results doubtful."""


@dataclass(frozen=True, slots=True)
class MarketParams:
    """Market and contract inputs. Times in years, rates and vols annualized."""

    s0: float
    strike: float
    rate: float
    maturity: float
    sigma0: float
    sigma1: float
    eps: float

    @property
    def x0(self) -> float:
        return math.log(self.s0)

    def replace(self, **changes: float) -> "MarketParams":
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields.update(changes)
        return MarketParams(**fields)


@dataclass(frozen=True, slots=True)
class Exponential:
    """Correction f(x) = exp(alpha * x)."""

    alpha: float

    def f(self, x):
        return np.exp(self.alpha * x)

    def df(self, x):
        return self.alpha * np.exp(self.alpha * x)


@dataclass(frozen=True, slots=True)
class Polynomial:
    """Correction f(x) = sum_i coeffs[i] * x**i."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_linear(self) -> bool:
        return len(self.coeffs) == 2

    def f(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def df(self, x):
        if len(self.coeffs) == 1:
            return np.zeros_like(np.asarray(x, dtype=float))
        der = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(x, der)


VolModel = Union[Exponential, Polynomial]


@dataclass(frozen=True, slots=True)
class JumpParams:
    """Compound Poisson jumps with N(gamma, delta^2) sizes arriving at rate lam."""

    lam: float
    gamma: float
    delta: float

    @property
    def mean_jump_factor(self) -> float:
        """E[e^J] - 1 for a single jump."""
        return math.expm1(self.gamma + 0.5 * self.delta**2)

    @property
    def compensator(self) -> float:
        """Compensator rate lam * (E[e^J] - 1)."""
        return self.lam * self.mean_jump_factor


@dataclass(frozen=True, slots=True)
class DerivedParams:
    x0: float
    mu: float


@dataclass(frozen=True, slots=True)
class ValidatedContext:
    params: MarketParams
    model: VolModel
    jumps: JumpParams | None
    derived: DerivedParams

    @property
    def x0(self) -> float:
        return self.derived.x0

    @property
    def mu(self) -> float:
        return self.derived.mu

    def with_params(self, **changes: float) -> "ValidatedContext":
        return validate_params(self.params.replace(**changes), self.model, self.jumps)

    def with_model(self, model: VolModel) -> "ValidatedContext":
        return validate_params(self.params, model, self.jumps)

    def with_jumps(self, jumps: JumpParams | None) -> "ValidatedContext":
        return validate_params(self.params, self.model, jumps)


def risk_neutral_drift(params: MarketParams) -> float:
    """Log drift making exp(X0_T) a discounted martingale: r - sigma0^2 / 2."""
    return params.rate - 0.5 * params.sigma0**2


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def validate_params(
    params: MarketParams, model: VolModel, jumps: JumpParams | None = None
) -> ValidatedContext:
    for name in params.__dataclass_fields__:
        _finite(name, float(getattr(params, name)))
    if params.s0 <= 0:
        raise DomainError(f"s0 must be positive, got {params.s0}")
    if params.strike <= 0:
        raise DomainError(f"strike must be positive, got {params.strike}")
    if params.maturity <= 0:
        raise DomainError(f"maturity must be positive, got {params.maturity}")
    if params.sigma0 == 0:
        raise DomainError("sigma0 must be nonzero")
    if params.eps < 0:
        raise DomainError(f"eps must be non-negative, got {params.eps}")
    if params.eps > EPS_WARN_THRESHOLD:
        warnings.warn(
            f"eps={params.eps} exceeds {EPS_WARN_THRESHOLD}; the expansion is asymptotic "
            "and results may be unreliable",
            ExtrapolationWarning,
            stacklevel=2,
        )

    if isinstance(model, Exponential):
        _finite("alpha", float(model.alpha))
        if model.alpha == 0:
            raise DomainError("alpha must be nonzero for the exponential model")
    elif isinstance(model, Polynomial):
        if len(model.coeffs) == 0:
            raise DomainError("polynomial coeffs must be non-empty")
        for i, c in enumerate(model.coeffs):
            _finite(f"coeffs[{i}]", c)
    else:
        raise DomainError(f"unsupported model {model!r}")

    if jumps is not None:
        _finite("lambda", jumps.lam)
        _finite("gamma", jumps.gamma)
        _finite("delta", jumps.delta)
        if jumps.lam <= 0:
            raise DomainError(f"lambda must be positive, got {jumps.lam}")
        if jumps.delta <= 0:
            raise DomainError(f"delta must be positive, got {jumps.delta}")
        _finite("jump compensator", jumps.compensator)

    x0 = math.log(params.s0)
    _finite("x0", x0)
    derived = DerivedParams(x0=x0, mu=risk_neutral_drift(params))
    return ValidatedContext(params=params, model=model, jumps=jumps, derived=derived)
