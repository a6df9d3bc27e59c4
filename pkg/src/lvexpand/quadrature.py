"""Gaussian quadrature rules and the nested Gaussian integrals used by the pricers.

Each nested integral has the form

    int_{time simplex} e^{(drift) * times} E[ 1{G_1 + ... + G_k > theta} w(G) e^{b . G} ] d(times)

with independent centred Gaussians G_i whose variances sum to T. Conditioning
on U = sum G_i reduces the Gaussian part to a one-dimensional integral over
the half-line u > theta, which is integrated with Gauss-Legendre nodes on a
window of +-8 standard deviations. The time simplex uses tensor Gauss-Legendre
rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .models import DomainError, Exponential, ValidatedContext

N_TIME = 64
N_SPACE = 128
TAIL_SD = 8.0


@dataclass(frozen=True, slots=True, eq=False)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=64)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / math.sqrt(2 * math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> QuadRule:
    """n-point rule on [-1, 1]."""
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    x, w = _legendre(n)
    return QuadRule(x, w, "legendre")


def gauss_hermite(n: int) -> QuadRule:
    """n-point rule for the standard normal measure (probabilists' Hermite)."""
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    x, w = _hermite(n)
    return QuadRule(x, w, "hermite")


def _map_rule(n: int, a: np.ndarray, b: np.ndarray):
    """Legendre nodes and weights mapped to [a, b] (broadcast over a, b)."""
    x, w = _legendre(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _check_nodes(n_time: int, n_space: int) -> None:
    if n_time < 1 or n_space < 1:
        raise DomainError(f"node counts must be positive, got {n_time}, {n_space}")


def halfspace_expectation(
    b: np.ndarray,
    v: np.ndarray,
    theta: float | None,
    n_space: int = N_SPACE,
    linear_weight: np.ndarray | None = None,
) -> np.ndarray:
    """E[1{sum G > theta} (1 + ...) e^{b . G}] for independent G_i ~ N(0, v_i).

    ``b`` and ``v`` have shape (..., k); the leading axes are batched. With
    ``linear_weight`` = c the integrand carries the extra factor c . G instead
    of 1. ``theta=None`` drops the indicator.
    """
    b = np.asarray(b, dtype=float)
    v = np.asarray(v, dtype=float)
    vt = np.sum(v, axis=-1)
    bv = np.sum(b * v, axis=-1)
    quad_form = np.sum(b * b * v, axis=-1) - bv**2 / vt
    # phi(u; 0, V) e^{u bv / V} = e^{bv^2 / (2V)} phi(u; bv, V)
    scale = np.exp(0.5 * quad_form + 0.5 * bv**2 / vt)
    mean = bv
    sd = np.sqrt(vt)
    lo = mean - TAIL_SD * sd
    hi = mean + TAIL_SD * sd
    if theta is not None:
        lo = np.maximum(lo, theta)
    empty = lo >= hi
    hi = np.where(empty, lo + 1.0, hi)
    u, wu = _map_rule(n_space, lo, hi)
    dens = np.exp(-0.5 * ((u - mean[..., None]) / sd[..., None]) ** 2) / (
        sd[..., None] * math.sqrt(2 * math.pi)
    )
    if linear_weight is None:
        g = 1.0
    else:
        c = np.asarray(linear_weight, dtype=float)
        # E[c . G | U = u, tilted] = c . (v b) + (c . v)(u - bv) / V
        cv = np.sum(c * v, axis=-1)
        cvb = np.sum(c * v * b, axis=-1)
        g = cvb[..., None] + (cv / vt)[..., None] * (u - mean[..., None])
    val = np.sum(wu * dens * g, axis=-1)
    return np.where(empty, 0.0, scale * val)


def halfspace_closed_form(b, v, theta: float | None) -> np.ndarray:
    """Closed form of :func:`halfspace_expectation` without weight."""
    b = np.asarray(b, dtype=float)
    v = np.asarray(v, dtype=float)
    vt = np.sum(v, axis=-1)
    bv = np.sum(b * v, axis=-1)
    mgf = np.exp(0.5 * np.sum(b * b * v, axis=-1))
    if theta is None:
        return mgf
    return mgf * ndtr((bv - theta) / np.sqrt(vt))


def threshold(ctx: ValidatedContext, literal: bool = False) -> float:
    """Lower limit theta of the event {W_T > theta} = {X0_T > ln K}.

    Default: -sqrt(T) d(1). The printed variant uses +sqrt(T) (d(1) + sigma0 sqrt(T)).
    """
    p = ctx.params
    st = math.sqrt(p.maturity)
    d1 = (math.log(p.s0 / p.strike) + (p.rate - 0.5 * p.sigma0**2) * p.maturity) / (p.sigma0 * st)
    if literal:
        return st * (d1 + p.sigma0 * st)
    return -st * d1


def _resolve_theta(ctx, literal, indicator):
    return threshold(ctx, literal) if indicator else None


def integral_I1(
    ctx: ValidatedContext,
    a: float,
    n_time: int = N_TIME,
    n_space: int = N_SPACE,
    literal: bool = False,
    indicator: bool = True,
) -> float:
    """int_0^T e^{a mu s} E[1{x+y>theta} e^{sigma0 x + (1+a) sigma0 y}] ds,
    x ~ N(0, T-s), y ~ N(0, s)."""
    _check_nodes(n_time, n_space)
    p = ctx.params
    t = p.maturity
    s, ws = _map_rule(n_time, 0.0, t)
    s, ws = s.ravel(), ws.ravel()
    b = np.stack([np.full_like(s, p.sigma0), np.full_like(s, (1 + a) * p.sigma0)], axis=-1)
    v = np.stack([t - s, s], axis=-1)
    inner = halfspace_expectation(b, v, _resolve_theta(ctx, literal, indicator), n_space)
    return float(np.sum(ws * np.exp(a * ctx.mu * s) * inner))


def _alpha(ctx: ValidatedContext) -> float:
    if not isinstance(ctx.model, Exponential):
        raise DomainError("this integral needs an exponential model")
    return ctx.model.alpha


def integral_I2(
    ctx: ValidatedContext,
    n_time: int = N_TIME,
    n_space: int = N_SPACE,
    literal: bool = False,
    indicator: bool = True,
) -> float:
    """int_0^T e^{alpha mu s} E[1{x+y>theta} e^{(alpha+1) sigma0 x + (2 alpha+1) sigma0 y}] ds."""
    _check_nodes(n_time, n_space)
    alpha = _alpha(ctx)
    p = ctx.params
    t = p.maturity
    s, ws = _map_rule(n_time, 0.0, t)
    s, ws = s.ravel(), ws.ravel()
    b = np.stack(
        [np.full_like(s, (alpha + 1) * p.sigma0), np.full_like(s, (2 * alpha + 1) * p.sigma0)],
        axis=-1,
    )
    v = np.stack([t - s, s], axis=-1)
    inner = halfspace_expectation(b, v, _resolve_theta(ctx, literal, indicator), n_space)
    return float(np.sum(ws * np.exp(alpha * ctx.mu * s) * inner))


def integral_I3(
    ctx: ValidatedContext,
    n_time: int = N_TIME,
    n_space: int = N_SPACE,
    literal: bool = False,
    indicator: bool = True,
) -> float:
    """int_{0<r<s<T} e^{alpha mu (s+r)} E[1{x+y+z>theta}
    e^{sigma0 x + (1+alpha) sigma0 y + (1+2 alpha) sigma0 z}] dr ds
    with x ~ N(0, T-s), y ~ N(0, s-r), z ~ N(0, r)."""
    _check_nodes(n_time, n_space)
    alpha = _alpha(ctx)
    p = ctx.params
    t = p.maturity
    s, ws = _map_rule(n_time, 0.0, t)
    s, ws = s.ravel(), ws.ravel()
    r, wr = _map_rule(n_time, np.zeros_like(s), s)
    ss = np.broadcast_to(s[:, None], r.shape)
    b = np.stack(
        [
            np.full(r.shape, p.sigma0),
            np.full(r.shape, (1 + alpha) * p.sigma0),
            np.full(r.shape, (1 + 2 * alpha) * p.sigma0),
        ],
        axis=-1,
    )
    v = np.stack([t - ss, ss - r, r], axis=-1)
    inner = halfspace_expectation(b, v, _resolve_theta(ctx, literal, indicator), n_space)
    w = ws[:, None] * wr
    return float(np.sum(w * np.exp(alpha * ctx.mu * (ss + r)) * inner))


def integral_I(
    ctx: ValidatedContext,
    n_time: int = N_TIME,
    n_space: int = N_SPACE,
    literal: bool = False,
    indicator: bool = True,
) -> float:
    """int_0^T E[1{x+y>theta} e^{sigma0 (x+y)} y] ds, x ~ N(0, T-s), y ~ N(0, s)."""
    _check_nodes(n_time, n_space)
    p = ctx.params
    t = p.maturity
    s, ws = _map_rule(n_time, 0.0, t)
    s, ws = s.ravel(), ws.ravel()
    b = np.full((s.size, 2), p.sigma0)
    v = np.stack([t - s, s], axis=-1)
    weight = np.broadcast_to(np.array([0.0, 1.0]), (s.size, 2))
    inner = halfspace_expectation(
        b, v, _resolve_theta(ctx, literal, indicator), n_space, linear_weight=weight
    )
    return float(np.sum(ws * inner))


# ---------------------------------------------------------------------------
# Closed forms used as oracles
# ---------------------------------------------------------------------------


def mgf_I1(ctx: ValidatedContext, a: float) -> float:
    """I1 without indicator: e^{sigma0^2 T/2} (e^{kT} - 1)/k, k = a mu + sigma0^2((1+a)^2-1)/2."""
    p = ctx.params
    k = a * ctx.mu + 0.5 * p.sigma0**2 * ((1 + a) ** 2 - 1)
    t = p.maturity
    factor = t if k == 0 else math.expm1(k * t) / k
    return math.exp(0.5 * p.sigma0**2 * t) * factor


def mgf_I2(ctx: ValidatedContext) -> float:
    alpha = _alpha(ctx)
    p = ctx.params
    t = p.maturity
    b1 = (alpha + 1) * p.sigma0
    b2 = (2 * alpha + 1) * p.sigma0
    k = alpha * ctx.mu + 0.5 * (b2**2 - b1**2)
    factor = t if k == 0 else math.expm1(k * t) / k
    return math.exp(0.5 * b1**2 * t) * factor


def mgf_I3(ctx: ValidatedContext) -> float:
    alpha = _alpha(ctx)
    p = ctx.params
    t = p.maturity
    b0, b1, b2 = p.sigma0, (1 + alpha) * p.sigma0, (1 + 2 * alpha) * p.sigma0
    # exponent: b0^2 (T-s)/2 + b1^2 (s-r)/2 + b2^2 r/2 + alpha mu (s + r)
    ks = alpha * ctx.mu + 0.5 * (b1**2 - b0**2)
    kr = alpha * ctx.mu + 0.5 * (b2**2 - b1**2)

    def ex(k, x):
        return x if k == 0 else math.expm1(k * x) / k

    # int_0^T e^{ks s} ex(kr, s) ds
    if kr == 0:
        if ks == 0:
            inner = t**2 / 2
        else:
            inner = (t * math.exp(ks * t) - ex(ks, t)) / ks
    else:
        inner = (ex(ks + kr, t) - ex(ks, t)) / kr
    return math.exp(0.5 * b0**2 * t) * inner


def mgf_I(ctx: ValidatedContext) -> float:
    """I without indicator: int_0^T sigma0 s e^{sigma0^2 T/2} ds."""
    p = ctx.params
    return p.sigma0 * p.maturity**2 / 2 * math.exp(0.5 * p.sigma0**2 * p.maturity)
