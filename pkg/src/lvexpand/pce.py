"""Multi-element polynomial chaos for functionals of a few standard Gaussians.

The probability space of m <= 3 independent standard normals (possibly after an
orthogonal rotation) is split into axis-aligned boxes. On each box the
functional is projected onto the monic polynomials orthogonal for the
conditional (truncated-normal) measure; on an unbounded axis these are the
probabilists' Hermite polynomials He_k. Projections use tensor Gauss rules of
the conditional measure with ``degree + 10`` nodes per axis. Rules for
truncated axes come from a discretized Stieltjes procedure followed by
Golub-Welsch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, roots_legendre

from .expansion import ctx_exp_constants, ctx_linear_betas
from .models import DomainError, Exponential, Polynomial, ValidatedContext
from .quadrature import gauss_legendre, threshold

MAX_DIM = 3
MAX_DEGREE = 30
NODE_MARGIN = 10
_TAIL = 16.0
_DISCRETE_POINTS = 3000


def hermite_eval(k: int, x):
    """Probabilists' Hermite polynomial He_k(x)."""
    if k < 0:
        raise DomainError("k must be non-negative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for j in range(k):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


@lru_cache(maxsize=1)
def _legendre_base() -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(_DISCRETE_POINTS)


@lru_cache(maxsize=256)
def _recurrence(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Monic three-term recurrence (a_k, b_k), k < n, of N(0,1) restricted to (lo, hi).

    b_0 is the total mass, normalized to 1.
    """
    if lo == -math.inf and hi == math.inf:
        return np.zeros(n), np.concatenate([[1.0], np.arange(1, n, dtype=float)])
    a_ = max(lo, -_TAIL)
    b_ = min(hi, _TAIL)
    x, w = _legendre_base()
    x = a_ + 0.5 * (b_ - a_) * (x + 1.0)
    w = 0.5 * (b_ - a_) * w * np.exp(-0.5 * x * x)
    w = w / w.sum()
    alpha = np.zeros(n)
    beta = np.zeros(n)
    beta[0] = 1.0
    # Stieltjes procedure on the discrete measure with normalized polynomials
    p_prev = np.zeros_like(x)
    p_cur = np.ones_like(x)
    for k in range(n):
        alpha[k] = np.dot(w, x * p_cur * p_cur)
        p_next = (x - alpha[k]) * p_cur - (math.sqrt(beta[k]) if k else 0.0) * p_prev
        if k + 1 < n:
            norm2 = np.dot(w, p_next * p_next)
            beta[k + 1] = norm2
            p_prev, p_cur = p_cur, p_next / math.sqrt(norm2)
    return alpha, beta


@lru_cache(maxsize=256)
def truncated_normal_rule(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for N(0,1) conditioned on (lo, hi); weights sum to 1."""
    if n < 1:
        raise DomainError("need at least one node")
    if not lo < hi:
        raise DomainError("empty interval")
    if lo == -math.inf and hi == math.inf:
        # Newton-refined Gauss-Hermite nodes are more accurate than the eigen-solve
        nodes, weights = np.polynomial.hermite_e.hermegauss(n)
        return nodes, weights / weights.sum()
    a, b = _recurrence(lo, hi, n)
    jac = np.diag(a) + np.diag(np.sqrt(b[1:]), 1) + np.diag(np.sqrt(b[1:]), -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = vecs[0, :] ** 2
    return nodes, weights / weights.sum()


def _monic_basis(lo: float, hi: float, degree: int, x: np.ndarray):
    """Values of the monic orthogonal polynomials Q_0..Q_degree at x and their squared norms."""
    a, b = _recurrence(lo, hi, degree + 1)
    vals = np.empty((degree + 1,) + x.shape)
    vals[0] = 1.0
    if degree >= 1:
        vals[1] = x - a[0]
    for k in range(1, degree):
        vals[k + 1] = (x - a[k]) * vals[k] - b[k] * vals[k - 1]
    norms = np.cumprod(np.concatenate([[1.0], b[1 : degree + 1]]))
    return vals, norms


@dataclass(frozen=True, slots=True)
class Element:
    """Box prod_i (lower_i, upper_i) in rotated standard-normal coordinates."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @property
    def weight(self) -> float:
        return float(np.prod([ndtr(h) - ndtr(l) for l, h in zip(self.lower, self.upper)]))


@dataclass(frozen=True, slots=True, eq=False)
class ElementApprox:
    element: Element
    weight: float
    coeffs: np.ndarray


@dataclass(frozen=True, slots=True, eq=False)
class PCEApprox:
    degree: int
    dim: int
    elements: tuple[ElementApprox, ...]
    rotation: np.ndarray

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """Surrogate value at points ``xi`` of shape (dim, n)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        zeta = self.rotation @ xi
        out = np.zeros(zeta.shape[1])
        for ea in self.elements:
            el = ea.element
            inside = np.all(
                [(zeta[i] > el.lower[i]) & (zeta[i] <= el.upper[i]) for i in range(self.dim)], axis=0
            )
            if not inside.any():
                continue
            basis = [
                _monic_basis(el.lower[i], el.upper[i], self.degree, zeta[i, inside])[0]
                for i in range(self.dim)
            ]
            val = np.zeros(inside.sum())
            for idx in product(range(self.degree + 1), repeat=self.dim):
                term = ea.coeffs[idx]
                for i, k in enumerate(idx):
                    term = term * basis[i][k]
                val = val + term
            out[inside] = val
        return out


def split_elements(dim: int, axis: int, cuts: Sequence[float]) -> list[Element]:
    """Partition of R^dim into slabs along ``axis`` at the given cut points."""
    edges = [-math.inf, *sorted(cuts), math.inf]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        lower = [-math.inf] * dim
        upper = [math.inf] * dim
        lower[axis], upper[axis] = lo, hi
        out.append(Element(tuple(lower), tuple(upper)))
    return out


def _check_partition(elements: Sequence[Element], dim: int) -> None:
    for el in elements:
        if len(el.lower) != dim or len(el.upper) != dim:
            raise DomainError("element dimension mismatch")
        if any(not l < h for l, h in zip(el.lower, el.upper)):
            raise DomainError("element with empty extent")
    for i, e1 in enumerate(elements):
        for e2 in elements[i + 1 :]:
            if all(max(l1, l2) < min(h1, h2) for l1, h1, l2, h2 in zip(e1.lower, e1.upper, e2.lower, e2.upper)):
                raise DomainError("elements overlap")
    total = math.fsum(el.weight for el in elements)
    if abs(total - 1.0) > 1e-12:
        raise DomainError(f"elements do not cover the space (total weight {total})")


def pce_project(
    g: Callable[[np.ndarray], np.ndarray],
    dim: int,
    degree: int,
    elements: Sequence[Element] | None = None,
    quad_nodes: int | None = None,
    rotation: np.ndarray | None = None,
) -> PCEApprox:
    """Project ``g`` (vectorized over points of shape (dim, n)) element by element.

    ``rotation`` is an orthogonal matrix R; elements are boxes in zeta = R xi.
    """
    if not 1 <= dim <= MAX_DIM:
        raise DomainError(f"dim must be in 1..{MAX_DIM}, got {dim}")
    if not 0 <= degree <= MAX_DEGREE:
        raise DomainError(f"degree must be in 0..{MAX_DEGREE}, got {degree}")
    elements = list(elements) if elements is not None else [Element((-math.inf,) * dim, (math.inf,) * dim)]
    _check_partition(elements, dim)
    rot = np.eye(dim) if rotation is None else np.asarray(rotation, dtype=float)
    if rot.shape != (dim, dim) or not np.allclose(rot @ rot.T, np.eye(dim), atol=1e-12):
        raise DomainError("rotation must be an orthogonal dim x dim matrix")
    n = quad_nodes or degree + NODE_MARGIN

    out = []
    for el in elements:
        w_el = el.weight
        rules = [truncated_normal_rule(el.lower[i], el.upper[i], n) for i in range(dim)]
        grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wgrid = np.ones_like(grids[0])
        for i, r in enumerate(rules):
            shape = [1] * dim
            shape[i] = n
            wgrid = wgrid * r[1].reshape(shape)
        zeta = np.stack([gr.ravel() for gr in grids])
        values = np.asarray(g(rot.T @ zeta), dtype=float).reshape(grids[0].shape)
        coeffs = values * wgrid
        for i in range(dim):
            basis, norms = _monic_basis(el.lower[i], el.upper[i], degree, rules[i][0])
            coeffs = np.moveaxis(np.tensordot(basis, coeffs, axes=([1], [i])), 0, i)
            shape = [1] * dim
            shape[i] = degree + 1
            coeffs = coeffs / norms.reshape(shape)
        out.append(ElementApprox(el, w_el, coeffs))
    return PCEApprox(degree, dim, tuple(out), rot)


def pce_mean(approx: PCEApprox) -> float:
    zero = (0,) * approx.dim
    return math.fsum(ea.weight * ea.coeffs[zero] for ea in approx.elements)


# ---------------------------------------------------------------------------
# Correction functional
# ---------------------------------------------------------------------------


def _terms(ctx: ValidatedContext, literal: bool):
    """(terminal functional of W_T, time-integrand of (W_s, W_T))."""
    p = ctx.params
    t = p.maturity
    jp = ctx.jumps
    model = ctx.model
    if isinstance(model, Exponential):
        alpha = model.alpha
        consts = ctx_exp_constants(ctx, literal)
        jump_mean = 0.0 if jp is None else jp.compensator * t + jp.lam * t * jp.gamma

        def terminal(wt):
            e_t = np.exp(alpha * (ctx.x0 + ctx.mu * t + p.sigma0 * wt))
            return consts.q * (e_t - consts.offset) + jump_mean

        def integrand(s, ws, wt):
            return consts.k_alpha * np.exp(alpha * (ctx.x0 + ctx.mu * s + p.sigma0 * ws))

        return terminal, integrand
    if isinstance(model, Polynomial) and model.is_linear:
        b = ctx_linear_betas(ctx, literal)
        sign = -1.0 if literal else 1.0
        jump_mean = 0.0 if jp is None else sign * jp.compensator * t + jp.lam * t * jp.gamma

        def terminal(wt):
            return b.beta1 * t + b.beta2 * t * t + b.beta3 * wt + b.beta4 * wt * wt + b.beta5 * t * wt + jump_mean

        def integrand(s, ws, wt):
            return -b.beta6 * ws

        return terminal, integrand
    raise DomainError("PCE correction supports the exponential and linear models")


def pce_correction(
    ctx: ValidatedContext,
    degree: int = 15,
    n_time_nodes: int = 32,
    literal: bool = False,
) -> float:
    """PCE estimate of E[1{X0_T > ln K} e^{X0_T} X1_T] (undiscounted).

    Terminal terms use a 1-D expansion in xi = W_T / sqrt(T) split at the
    exercise boundary. The time integral uses Gauss-Legendre nodes in s and,
    at each node, a 2-D expansion in (W_s / sqrt(s), (W_T - W_s) / sqrt(T - s))
    rotated so that the boundary is a coordinate plane.
    """
    p = ctx.params
    if p.sigma0 < 0:
        raise DomainError("PCE correction needs sigma0 > 0; use method mc")
    t = p.maturity
    st = math.sqrt(t)
    theta = threshold(ctx) / st
    terminal, integrand = _terms(ctx, literal)

    def payoff_weight(wt):
        xt = ctx.x0 + ctx.mu * t + p.sigma0 * wt
        return np.where(wt / st > theta, np.exp(xt), 0.0)

    def g1(xi):
        wt = st * xi[0]
        return payoff_weight(wt) * terminal(wt)

    total = pce_mean(pce_project(g1, 1, degree, split_elements(1, 0, [theta])))

    rule = gauss_legendre(n_time_nodes)
    s_nodes = 0.5 * t * (rule.nodes + 1.0)
    s_weights = 0.5 * t * rule.weights
    elements = split_elements(2, 0, [theta])
    parts = []
    for s, ws in zip(s_nodes, s_weights):
        a, c = math.sqrt(s / t), math.sqrt((t - s) / t)
        rot = np.array([[a, c], [c, -a]])

        def g2(xi, s=s):
            w_s = math.sqrt(s) * xi[0]
            w_t = w_s + math.sqrt(t - s) * xi[1]
            return payoff_weight(w_t) * integrand(s, w_s, w_t)

        parts.append(ws * pce_mean(pce_project(g2, 2, degree, elements, rotation=rot)))
    return total + math.fsum(parts)
