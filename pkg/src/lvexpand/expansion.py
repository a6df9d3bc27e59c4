"""Expansion coefficients X0, X1, X2 of the perturbed log-return SDE.

The log-return solves

    dX = (r - s(X)^2 / 2) dt + s(X) dW + eps dJ,   s(x) = sigma0 + eps * sigma1 * f(x),

with J_t = c t + Z_t, Z a compound Poisson sum and c its compensator rate.
Writing X = X0 + eps X1 + eps^2 X2 + ... gives the recursive system

    X0 = x0 + mu t + sigma0 W
    dX1 = -sigma0 sigma1 f(X0) dt + sigma1 f(X0) dW + dJ
    dX2 = -(sigma1^2 f(X0)^2 / 2 + sigma0 sigma1 f'(X0) X1) dt + sigma1 f'(X0) X1 dW

which :func:`eval_direct` discretizes verbatim. The other evaluators use the
Ito-reduced closed forms, in which every stochastic integral has been
rewritten through pathwise Riemann integrals and terminal values.

Every evaluator accepts a single path (1-D ``values``) or a batch of paths
(2-D ``values`` of shape ``(n_paths, n_nodes)``) and returns a scalar or an
array of per-path values. Riemann integrals use the trapezoidal rule on the
path grid; Ito integrals use left-point sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .models import (
    DomainError,
    Exponential,
    JumpParams,
    Polynomial,
    ValidatedContext,
)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class BrownianPath:
    """Brownian values on a shared grid; ``values`` may carry a leading batch axis."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("times must be a 1-D grid with at least two nodes")
        if times[0] != 0.0:
            raise DomainError("grid must start at 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("grid must be strictly increasing")
        if values.shape[-1] != times.size:
            raise DomainError("values and times have mismatched lengths")
        if np.any(values[..., 0] != 0.0):
            raise DomainError("Brownian path must start at 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    @property
    def terminal(self) -> np.ndarray:
        return self.values[..., -1]

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    def subsample(self, stride: int) -> "BrownianPath":
        """Coarser path using every ``stride``-th node (the last node is kept)."""
        if self.n_steps % stride:
            raise DomainError("stride must divide the number of steps")
        return BrownianPath(self.times[::stride], self.values[..., ::stride])


@dataclass(frozen=True, slots=True, eq=False)
class JumpPath:
    """Jump times and sizes. Batches are padded with time=inf and size=0."""

    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        sizes = np.asarray(self.sizes, dtype=float)
        if times.shape != sizes.shape:
            raise DomainError("jump times and sizes must have the same shape")
        if times.size and np.any(times[..., 1:] < times[..., :-1]):
            raise DomainError("jump times must be sorted")
        if times.size and np.any(times <= 0):
            raise DomainError("jump times must be positive")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", np.where(np.isfinite(times), sizes, 0.0))

    @property
    def count(self) -> np.ndarray:
        return np.sum(np.isfinite(self.times), axis=-1)

    @property
    def total(self) -> np.ndarray:
        return np.sum(self.sizes, axis=-1)

    @classmethod
    def empty(cls, batch_shape: tuple[int, ...] = ()) -> "JumpPath":
        return cls(np.zeros(batch_shape + (0,)), np.zeros(batch_shape + (0,)))


def _node_increments(path: BrownianPath, jumps: JumpPath) -> np.ndarray:
    """Sum of jump sizes falling in each grid interval (t_i, t_{i+1}]."""
    times = path.times
    batch = np.broadcast_shapes(path.values.shape[:-1], jumps.times.shape[:-1])
    out = np.zeros(batch + (times.size - 1,))
    jt = np.broadcast_to(jumps.times, batch + jumps.times.shape[-1:])
    js = np.broadcast_to(jumps.sizes, batch + jumps.sizes.shape[-1:])
    finite = np.isfinite(jt) & (jt <= times[-1] * (1 + 1e-14))
    idx = np.searchsorted(times, np.where(finite, jt, times[-1]), side="left") - 1
    idx = np.clip(idx, 0, times.size - 2)
    if out.ndim == 1:
        np.add.at(out, idx[finite], js[finite])
    else:
        rows = np.broadcast_to(np.arange(out.shape[0])[:, None], jt.shape)
        np.add.at(out, (rows[finite], idx[finite]), js[finite])
    return out


def _interp_grid(times: np.ndarray, values: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Linear interpolation of per-path grid values at per-path query times."""
    q = np.clip(np.where(np.isfinite(query), query, times[-1]), times[0], times[-1])
    k = np.clip(np.searchsorted(times, q, side="right") - 1, 0, times.size - 2)
    w = (q - times[k]) / (times[k + 1] - times[k])
    lo = np.take_along_axis(values, k, axis=-1) if values.ndim > 1 else values[k]
    hi = np.take_along_axis(values, k + 1, axis=-1) if values.ndim > 1 else values[k + 1]
    return lo + w * (hi - lo)


def augment_with_jumps(
    path: BrownianPath, jumps: JumpPath, rng: np.random.Generator
) -> BrownianPath:
    """Insert every jump time into the grid, sampling W there by Brownian bridge."""
    new = np.unique(jumps.times[np.isfinite(jumps.times)])
    new = new[(new > 0) & (new < path.maturity)]
    new = new[~np.isin(new, path.times)]
    times = path.times
    values = path.values
    for tau in new:
        k = int(np.searchsorted(times, tau))
        ta, tb = times[k - 1], times[k]
        wa, wb = values[..., k - 1], values[..., k]
        lam = (tau - ta) / (tb - ta)
        sd = math.sqrt((tau - ta) * (tb - tau) / (tb - ta))
        w = wa + lam * (wb - wa) + sd * rng.standard_normal(np.shape(wa))
        times = np.insert(times, k, tau)
        values = np.insert(values, k, w, axis=-1)
    return BrownianPath(times, values)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ExpConstants:
    """Constants of the exponential model.

    ``c`` holds C1..C7 (coefficients of G, E_T*A, A, H, F_T, E_T and 1, see
    :func:`eval_x2_exp`). ``offset`` is the value subtracted from exp(alpha X0_T)
    in X1 and ``q`` is sigma1 / (alpha sigma0).
    """

    k_alpha: float
    c: tuple[float, float, float, float, float, float, float]
    q: float
    offset: float
    alpha: float
    literal: bool = False
    c8: float | None = None
    c9: float | None = None


def exp_constants(
    sigma0: float,
    sigma1: float,
    alpha: float,
    mu: float | None = None,
    x0: float = 0.0,
    literal: bool = False,
) -> ExpConstants:
    """Constants of the exponential model.

    ``mu`` defaults to -sigma0^2/2, the drift written in the unperturbed
    system without interest rate; pricing passes r - sigma0^2/2. In literal
    mode the printed formulas are returned and ``mu``/``x0`` only enter C8.
    """
    if sigma0 == 0:
        raise DomainError("sigma0 must be nonzero")
    if alpha == 0:
        raise DomainError("alpha must be nonzero")
    if mu is None:
        mu = -0.5 * sigma0**2
    q = sigma1 / (alpha * sigma0)
    c8, c9 = exp_jump_constants(sigma0, sigma1, alpha, mu)

    if literal:
        k = sigma1 * (sigma0 / 2 - alpha * sigma0 / 2 - sigma0)
        c = (
            -(sigma1**2) * (2.0 + alpha) - sigma1 * k / sigma0,
            k * sigma1 / sigma0,
            -(sigma1**2) * (0.5 + alpha / 2 + 2.0),
            -k * sigma1 * alpha * (2 * sigma0 - sigma0 / 2 + alpha * sigma0 / 2),
            sigma1**2 / (2 * alpha * sigma0**2),
            -(sigma1**2) / (alpha * sigma0**2),
            sigma1**2 / (2 * alpha * sigma0**2),
        )
        return ExpConstants(k, c, q, 1.0, alpha, True, c8, c9)

    e0 = math.exp(alpha * x0)
    k = -sigma1 * (sigma0 + mu / sigma0 + alpha * sigma0 / 2)
    c = (
        sigma1**2 * (0.5 + mu / sigma0**2) + k * sigma1 / sigma0,
        k * sigma1 / sigma0,
        -k * sigma1 * e0 / sigma0,
        alpha * k**2,
        sigma1**2 / (2 * alpha * sigma0**2),
        -(sigma1**2) * e0 / (alpha * sigma0**2),
        sigma1**2 * e0**2 / (2 * alpha * sigma0**2),
    )
    return ExpConstants(k, c, q, e0, alpha, False, c8, c9)


def exp_jump_constants(
    sigma0: float, sigma1: float, alpha: float, mu: float
) -> tuple[float, float]:
    """Printed jump-coupling constants (C8, C9); C9 = -C8."""
    if sigma0 == 0:
        raise DomainError("sigma0 must be nonzero")
    c8 = (sigma1 / sigma0) * alpha * mu + (sigma0 * sigma1 / 2) * alpha**2 - 2 * sigma0 * sigma1 * alpha
    return c8, -c8


def ctx_exp_constants(ctx: ValidatedContext, literal: bool = False, x0: float | None = None) -> ExpConstants:
    if not isinstance(ctx.model, Exponential):
        raise DomainError("exponential constants need an exponential model")
    p = ctx.params
    return exp_constants(
        p.sigma0, p.sigma1, ctx.model.alpha, ctx.mu, ctx.x0 if x0 is None else x0, literal
    )


@dataclass(frozen=True, slots=True)
class LinearBetas:
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    beta6: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.beta1, self.beta2, self.beta3, self.beta4, self.beta5, self.beta6)


def linear_betas(
    sigma0: float,
    sigma1: float,
    a0: float,
    a1: float,
    x0: float,
    mu: float,
    literal: bool = False,
) -> LinearBetas:
    """Coefficients of X1 for f(x) = a0 + a1 x.

    Only beta3 differs between modes: the printed value a1 sigma0 + x0 sigma1 a1
    does not follow from the system, which gives sigma1 (a0 + a1 x0).
    """
    if sigma0 == 0:
        raise DomainError("sigma0 must be nonzero")
    s01 = sigma0 * sigma1
    beta3 = a1 * sigma0 + x0 * sigma1 * a1 if literal else sigma1 * (a0 + a1 * x0)
    return LinearBetas(
        beta1=-s01 * a0 - s01 * a1 * x0 - s01 * a1 / 2,
        beta2=-s01 * a1 * mu / 2,
        beta3=beta3,
        beta4=s01 * a1 / 2,
        beta5=sigma1 * a1 * mu,
        beta6=sigma1 * a1 * mu + sigma0**2 * sigma1 * a1,
    )


def ctx_linear_betas(ctx: ValidatedContext, literal: bool = False) -> LinearBetas:
    model = ctx.model
    if not (isinstance(model, Polynomial) and model.is_linear):
        raise DomainError("linear betas need a polynomial model with two coefficients")
    p = ctx.params
    a0, a1 = model.coeffs
    return linear_betas(p.sigma0, p.sigma1, a0, a1, ctx.x0, ctx.mu, literal)


@dataclass(frozen=True, slots=True, eq=False)
class PolyConstants:
    """Polynomial-model constants; the C-arrays are only filled in literal mode."""

    k: np.ndarray
    ktilde: np.ndarray
    literal: bool = False
    c1: np.ndarray | None = None
    c3: np.ndarray | None = None
    c4: np.ndarray | None = None
    c5: np.ndarray | None = None


def poly_constants(
    sigma0: float,
    sigma1: float,
    mu: float,
    coeffs: Sequence[float],
    literal: bool = False,
) -> PolyConstants:
    if sigma0 == 0:
        raise DomainError("sigma0 must be nonzero")
    a = np.asarray(coeffs, dtype=float)
    if a.size == 0:
        raise DomainError("coeffs must be non-empty")
    n = a.size - 1
    ap = np.append(a, 0.0)
    i = np.arange(n + 1)
    k = (
        sigma0 * sigma1 * a
        + np.where(i >= 1, (sigma1 / sigma0) * mu * a, 0.0)
        + (sigma0 * sigma1 / 2) * (i + 1) * ap[1:]
    )
    # index 0 is unused (no K~_0); kept so that ktilde[i] pairs with a[i]
    ktilde = (sigma1 / sigma0) * a / (i + 1)
    ktilde[0] = 0.0
    if not literal:
        return PolyConstants(k, ktilde)

    c1 = _poly_c1_literal(sigma0, sigma1, mu, a, ktilde)
    c3 = np.zeros((n + 1, n + 1))
    c4 = np.zeros((n + 1, n + 1))
    for ii in range(1, n + 1):
        for j in range(n + 1):
            if ii == 1 and j == 0:
                c3[ii, j] = -(sigma1 / sigma0) * a[1] * k[0]
            else:
                c3[ii, j] = -(
                    (sigma1 / sigma0) * ii * a[ii] * k[j]
                    + (sigma0 * sigma1 / 2) * ii * a[ii] * k[j] * (ii - 1)
                )
            c4[ii, j] = (sigma1 / sigma0) * a[ii] * k[j]
    c5 = np.zeros(max(n, 0))
    for ii in range(n):
        if ii == 0:
            c5[ii] = sigma0**2 * sigma1 * ap[2] if n >= 2 else 0.0
            c5[ii] += 2 * sigma0 * sigma1 * a[1]
        elif ii == n - 1:
            c5[ii] = a[n] * sigma1 * n * mu + 2 * sigma0 * sigma1 * n * ap[n + 1]
        else:
            c5[ii] = (
                sigma1 * mu * a[ii + 1] * (ii + 1)
                + (sigma0**2 / 2) * (ii + 2) * (ii + 1)
                + 4 * sigma0 * sigma1 * a[ii + 1]
            )
    return PolyConstants(k, ktilde, True, c1, c3, c4, c5)


def _poly_c1_literal(sigma0, sigma1, mu, a, ktilde) -> np.ndarray:
    """C1_k = gamma1_k + gamma2_k + gamma3_k for k = 1..2N+1 (index 0 unused)."""
    n = a.size - 1
    out = np.zeros(2 * n + 2)
    for kk in range(1, 2 * n + 2):
        if kk == 1:
            g1 = sigma0 / 2
        elif kk == 2 * n:
            g1 = mu * (sigma1 / sigma0) * n * a[n] * (sigma0 * sigma1 * a[n] + (sigma1 / sigma0) * mu * a[n])
        else:
            g1 = sum(
                mu * i * a[i] + sigma1 / sigma0 - (sigma0 / 2) * (i + j + 1)
                for i in range(n + 1)
                for j in range(n + 1)
                if i + j + 1 == kk
            )
        g2 = ((-1) ** kk + 1) / 2 * sigma1**2 / 2 * a[kk] ** 2 if 1 <= kk <= n else 0.0
        g3 = sum(
            2 * sigma0 * sigma1 * a[i] * i * ktilde[j]
            for i in range(n + 1)
            for j in range(1, n + 1)
            if i + j == kk - 1
        )
        out[kk] = g1 + g2 + g3
    return out


def ctx_poly_constants(ctx: ValidatedContext, literal: bool = False) -> PolyConstants:
    if not isinstance(ctx.model, Polynomial):
        raise DomainError("polynomial constants need a polynomial model")
    p = ctx.params
    return poly_constants(p.sigma0, p.sigma1, ctx.mu, ctx.model.coeffs, literal)


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------


def eval_x0(t, w, ctx: ValidatedContext):
    return ctx.x0 + ctx.mu * np.asarray(t) + ctx.params.sigma0 * np.asarray(w)


def _x0_path(path: BrownianPath, ctx: ValidatedContext) -> np.ndarray:
    return eval_x0(path.times, path.values, ctx)


def _exp_pieces(path: BrownianPath, ctx: ValidatedContext):
    alpha = ctx.model.alpha
    e = np.exp(alpha * _x0_path(path, ctx))
    a = trapezoid(e, path.times, axis=-1)
    return e, a


def eval_x1_exp(path: BrownianPath, ctx: ValidatedContext, consts: ExpConstants):
    e, a = _exp_pieces(path, ctx)
    return consts.k_alpha * a + consts.q * (e[..., -1] - consts.offset)


def eval_x2_exp(path: BrownianPath, ctx: ValidatedContext, consts: ExpConstants):
    """C1 G + C2 E_T A + C3 A + C4 H + C5 F_T + C6 E_T + C7.

    E = exp(alpha X0), A and G are the time integrals of E and E^2, F = E^2,
    and H is the nested integral of E, which equals A^2 / 2.
    """
    e, a = _exp_pieces(path, ctx)
    g = trapezoid(e * e, path.times, axis=-1)
    h = 0.5 * a * a
    et = e[..., -1]
    c1, c2, c3, c4, c5, c6, c7 = consts.c
    return c1 * g + c2 * et * a + c3 * a + c4 * h + c5 * et * et + c6 * et + c7


def eval_x1_exp_jump(
    path: BrownianPath,
    jumps: JumpPath,
    ctx: ValidatedContext,
    consts: ExpConstants,
    jp: JumpParams,
):
    return eval_x1_exp(path, ctx, consts) + jp.compensator * path.maturity + jumps.total


def eval_x2_exp_jump(
    path: BrownianPath,
    jumps: JumpPath,
    ctx: ValidatedContext,
    consts: ExpConstants,
    jp: JumpParams,
):
    """X2 with the jump-coupled terms added to :func:`eval_x2_exp`.

    Jump times off the grid are handled by linear interpolation of the
    running integral and of exp(alpha X0); augment the grid for exactness.
    """
    base = eval_x2_exp(path, ctx, consts)
    times = path.times
    e, _ = _exp_pieces(path, ctx)
    cum_a = cumulative_trapezoid(e, times, axis=-1, initial=0.0)
    a_t = cum_a[..., -1]
    e_t = e[..., -1]
    c = jp.compensator
    t = path.maturity
    s_e = trapezoid(times * e, times, axis=-1)
    z_t = jumps.total
    batch = np.broadcast_shapes(e.shape[:-1], jumps.times.shape[:-1])
    jt = np.broadcast_to(jumps.times, batch + jumps.times.shape[-1:])
    js = np.broadcast_to(jumps.sizes, batch + jumps.sizes.shape[-1:])
    cum_b = np.broadcast_to(cum_a, batch + cum_a.shape[-1:])
    e_b = np.broadcast_to(e, batch + e.shape[-1:])
    a_tau = _interp_grid(times, cum_b, jt) if jt.shape[-1] else np.zeros(jt.shape)
    e_tau = _interp_grid(times, e_b, jt) if jt.shape[-1] else np.zeros(jt.shape)
    # int_0^T Z_s E_s ds with Z the running jump sum
    z_e = np.sum(js * (a_t[..., None] - a_tau), axis=-1)
    ratio = ctx.params.sigma1 / ctx.params.sigma0

    if consts.literal:
        extra = (
            consts.c8 * c * s_e
            - t * e_t * c
            + ratio * c * a_t
            + consts.c9 * z_e
            + ratio * e_t * z_t
            - ratio * z_t * a_t
        )
        return base + extra

    ak = consts.alpha * consts.k_alpha
    extra = ak * (c * s_e + z_e) + ratio * (
        e_t * (c * t + z_t) - c * a_t - np.sum(js * e_tau, axis=-1)
    )
    return base + extra


def eval_x1_poly(path: BrownianPath, ctx: ValidatedContext, pc: PolyConstants):
    a0 = ctx.model.coeffs[0]
    x = _x0_path(path, ctx)
    n = pc.k.size - 1
    out = ctx.params.sigma1 * a0 * path.terminal
    xt = x[..., -1]
    for i in range(1, n + 1):
        shift = 0.0 if pc.literal else ctx.x0 ** (i + 1)
        out = out + pc.ktilde[i] * (xt ** (i + 1) - shift)
    for i in range(n + 1):
        out = out - pc.k[i] * trapezoid(x**i, path.times, axis=-1)
    return out


def _linear_functionals(path: BrownianPath):
    t = path.times
    w = path.values
    m1 = trapezoid(w, t, axis=-1)
    m2 = trapezoid(w * w, t, axis=-1)
    s1 = trapezoid(t * w, t, axis=-1)
    return path.terminal, m1, m2, s1


def eval_x1_linear(path: BrownianPath, ctx: ValidatedContext, betas: LinearBetas):
    b1, b2, b3, b4, b5, b6 = betas.as_tuple()
    t = path.maturity
    wt, m1, _, _ = _linear_functionals(path)
    return b1 * t + b2 * t * t + b3 * wt + b4 * wt * wt + b5 * t * wt - b6 * m1


def eval_x1_linear_jump(
    path: BrownianPath,
    jumps: JumpPath,
    ctx: ValidatedContext,
    betas: LinearBetas,
    jp: JumpParams,
    literal: bool = False,
):
    """Linear X1 plus jumps. The printed variant subtracts the compensator."""
    sign = -1.0 if literal else 1.0
    return eval_x1_linear(path, ctx, betas) + sign * jp.compensator * path.maturity + jumps.total


def eval_x2_linear(path: BrownianPath, ctx: ValidatedContext):
    """Ito-reduced X2 for f(x) = a0 + a1 x.

    Along the path f(X0_s) = A + B s + C W_s, and X1_s is the beta-form. All
    stochastic integrals reduce to polynomials in T, W_T and the Riemann
    integrals M1 = int W, M2 = int W^2 and S1 = int s W.
    """
    p = ctx.params
    a0, a1 = ctx.model.coeffs
    s0, s1 = p.sigma0, p.sigma1
    cA = a0 + a1 * ctx.x0
    cB = a1 * ctx.mu
    cC = a1 * s0
    b1, b2, b3, b4, b5, b6 = ctx_linear_betas(ctx).as_tuple()
    t = path.maturity
    wt, m1, m2, s1w = _linear_functionals(path)

    int_f2 = (
        cA**2 * t
        + cB**2 * t**3 / 3
        + cC**2 * m2
        + cA * cB * t**2
        + 2 * cA * cC * m1
        + 2 * cB * cC * s1w
    )
    int_m1 = t * m1 - s1w
    int_x1_ds = b1 * t**2 / 2 + b2 * t**3 / 3 + b3 * m1 + b4 * m2 + b5 * s1w - b6 * int_m1
    int_x1_dw = (
        b1 * (t * wt - m1)
        + b2 * (t**2 * wt - 2 * s1w)
        + b3 * (wt * wt - t) / 2
        + b4 * (wt**3 / 3 - m1)
        + b5 * (t * wt * wt - m2 - t**2 / 2) / 2
        - b6 * (m1 * wt - m2)
    )
    return -(s1**2) / 2 * int_f2 - s0 * s1 * a1 * int_x1_ds + s1 * a1 * int_x1_dw


def eval_direct(
    path: BrownianPath,
    ctx: ValidatedContext,
    jumps: JumpPath | None = None,
    order: int = 2,
    f: Callable | None = None,
    df: Callable | None = None,
    kappa: float = 1.0,
):
    """Left-point discretization of the unreduced system.

    Returns ``(X1_T, X2_T)``; ``X2_T`` is None when ``order`` is 1. ``kappa``
    scales the sigma0 sigma1 f' X1 drift term of X2 (1 is the Taylor value).
    """
    f = f or ctx.model.f
    df = df or ctx.model.df
    s0, s1 = ctx.params.sigma0, ctx.params.sigma1
    x0 = _x0_path(path, ctx)
    dt = np.diff(path.times)
    dw = np.diff(path.values, axis=-1)
    fl = f(x0[..., :-1])
    dx1 = -s0 * s1 * fl * dt + s1 * fl * dw
    if jumps is not None and ctx.jumps is not None:
        dx1 = dx1 + ctx.jumps.compensator * dt + _node_increments(path, jumps)
    x1 = np.concatenate([np.zeros(dx1.shape[:-1] + (1,)), np.cumsum(dx1, axis=-1)], axis=-1)
    if order < 2:
        return x1[..., -1], None
    dfl = df(x0[..., :-1])
    x1l = x1[..., :-1]
    dx2 = -(s1**2 / 2 * fl * fl + kappa * s0 * s1 * dfl * x1l) * dt + s1 * dfl * x1l * dw
    return x1[..., -1], np.sum(dx2, axis=-1)


def eval_x1(
    path: BrownianPath,
    ctx: ValidatedContext,
    jumps: JumpPath | None = None,
    literal: bool = False,
):
    """X1_T for the context's model, with jumps when both jumps and ctx.jumps are set."""
    model = ctx.model
    jp = ctx.jumps
    if isinstance(model, Exponential):
        consts = ctx_exp_constants(ctx, literal)
        if jp is not None and jumps is not None:
            return eval_x1_exp_jump(path, jumps, ctx, consts, jp)
        return eval_x1_exp(path, ctx, consts)
    if model.is_linear:
        betas = ctx_linear_betas(ctx, literal)
        if jp is not None and jumps is not None:
            return eval_x1_linear_jump(path, jumps, ctx, betas, jp, literal)
        return eval_x1_linear(path, ctx, betas)
    out = eval_x1_poly(path, ctx, ctx_poly_constants(ctx, literal))
    if jp is not None and jumps is not None:
        sign = -1.0 if literal else 1.0
        out = out + sign * jp.compensator * path.maturity + jumps.total
    return out


# ---------------------------------------------------------------------------
# Composition coefficients
# ---------------------------------------------------------------------------


def compose_coeffs(
    f_derivs: Sequence[Sequence[float]],
    x: Sequence[float],
    literal: bool = False,
) -> list[float]:
    """Coefficients [f]_k of eps^k in f_eps(x(eps)) = sum_j eps^j f_j(x(eps)).

    ``f_derivs[j][m]`` is the m-th derivative of f_j at x_0, and
    ``x = (x_1, ..., x_n)`` are the expansion coefficients of x(eps) - x_0.
    Returns [f]_0..[f]_n. ``literal`` returns the four printed low-order
    formulas, whose third coefficient lacks the D^2 f_0 x_1 x_2 term and the
    1/2 on D^2 f_1 x_1^2.
    """
    xs = [float(v) for v in x]
    n = len(xs)
    d = [list(map(float, row)) for row in f_derivs]

    def deriv(j: int, m: int) -> float:
        if j < len(d) and m < len(d[j]):
            return d[j][m]
        return 0.0

    if literal:
        if n < 3:
            xs = xs + [0.0] * (3 - n)
        x1, x2, x3 = xs[:3]
        return [
            deriv(0, 0),
            deriv(0, 1) * x1 + deriv(1, 0),
            deriv(0, 1) * x2 + 0.5 * deriv(0, 2) * x1**2 + deriv(1, 1) * x1 + deriv(2, 0),
            deriv(0, 1) * x3
            + deriv(0, 3) * x1**3 / 6
            + deriv(1, 1) * x2
            + deriv(2, 1) * x1
            + deriv(1, 2) * x1**2
            + deriv(3, 0),
        ]

    # powers of delta(eps) = sum_{i>=1} x_i eps^i, truncated at order n
    delta = np.zeros(n + 1)
    delta[1:] = xs
    powers = [np.eye(1, n + 1, 0).ravel()]
    for _ in range(n):
        powers.append(np.convolve(powers[-1], delta)[: n + 1])
    out = []
    for k in range(n + 1):
        total = 0.0
        for j in range(k + 1):
            for m in range(k - j + 1):
                total += deriv(j, m) / math.factorial(m) * powers[m][k - j]
        out.append(total)
    return out
