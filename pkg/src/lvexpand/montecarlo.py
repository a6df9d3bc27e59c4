"""Reproducible Monte Carlo: path simulation, estimation, full-SDE Euler scheme.

Paths are generated in fixed-size blocks. Block ``b`` draws from a Philox
counter-based generator keyed by ``(seed, b)``, so every path is a pure
function of ``(seed, n_steps, block_size, path index)`` and results do not
depend on how blocks are scheduled over workers. Per-path values are
assembled in path order before any reduction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expansion import BrownianPath, JumpPath, eval_x1
from .models import DomainError, JumpParams, ValidatedContext

BLOCK_SIZE = 1024


@dataclass(frozen=True, slots=True)
class MCConfig:
    n_paths: int = 10_000
    n_steps: int = 64
    seed: int = 0
    workers: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self) -> None:
        if self.n_paths < 1 or self.n_steps < 1 or self.workers < 1 or self.block_size < 1:
            raise DomainError("n_paths, n_steps, workers and block_size must be positive")

    @property
    def n_blocks(self) -> int:
        return -(-self.n_paths // self.block_size)


@dataclass(frozen=True, slots=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int

    def as_dict(self) -> dict:
        return {"mean": self.mean, "se": self.std_error, "n": self.n}


def block_stream(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one block of paths."""
    key = np.array([seed % 2**64, block % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_brownian(
    maturity: float, n_steps: int, stream: np.random.Generator, n_paths: int | None = None
) -> BrownianPath:
    """Uniform-grid Brownian path(s); a batch when ``n_paths`` is given."""
    if maturity <= 0 or n_steps < 1:
        raise DomainError("maturity and n_steps must be positive")
    times = np.linspace(0.0, maturity, n_steps + 1)
    shape = (n_steps,) if n_paths is None else (n_paths, n_steps)
    inc = stream.standard_normal(shape) * np.sqrt(np.diff(times))
    values = np.concatenate([np.zeros(shape[:-1] + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    return BrownianPath(times, values)


def simulate_jumps(
    jp: JumpParams, maturity: float, stream: np.random.Generator, n_paths: int | None = None
) -> JumpPath:
    """Compound Poisson jumps: Poisson(lam T) count, uniform sorted times, normal sizes."""
    n = 1 if n_paths is None else n_paths
    counts = stream.poisson(jp.lam * maturity, size=n)
    width = int(counts.max()) if n else 0
    u = stream.random((n, width))
    sizes = jp.gamma + jp.delta * stream.standard_normal((n, width))
    # uniform on (0, T]; padded entries pushed to +inf before sorting
    times = maturity * (1.0 - u)
    mask = np.arange(width)[None, :] < counts[:, None]
    times = np.sort(np.where(mask, times, np.inf), axis=-1)
    sizes = np.where(mask, sizes, 0.0)
    if n_paths is None:
        return JumpPath(times[0], sizes[0])
    return JumpPath(times, sizes)


@dataclass(frozen=True, slots=True, eq=False)
class PathBlock:
    path: BrownianPath
    jumps: JumpPath | None
    stream: np.random.Generator


def simulate_block(
    cfg: MCConfig, maturity: float, jp: JumpParams | None, block: int
) -> PathBlock:
    """Paths of one block, truncated to the paths that belong to ``cfg.n_paths``."""
    stream = block_stream(cfg.seed, block)
    path = simulate_brownian(maturity, cfg.n_steps, stream, cfg.block_size)
    jumps = simulate_jumps(jp, maturity, stream, cfg.block_size) if jp is not None else None
    keep = min(cfg.block_size, cfg.n_paths - block * cfg.block_size)
    if keep < cfg.block_size:
        path = BrownianPath(path.times, path.values[:keep])
        if jumps is not None:
            jumps = JumpPath(jumps.times[:keep], jumps.sizes[:keep])
    return PathBlock(path, jumps, stream)


def _map_blocks(fn: Callable[[int], np.ndarray], cfg: MCConfig) -> np.ndarray:
    blocks = range(cfg.n_blocks)
    if cfg.workers == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(fn, blocks))
    return np.concatenate(parts)


def mc_values(
    functional: Callable[[BrownianPath, JumpPath | None], np.ndarray],
    cfg: MCConfig,
    maturity: float = 1.0,
    jp: JumpParams | None = None,
) -> np.ndarray:
    """Per-path values of ``functional`` in path order."""

    def run(block: int) -> np.ndarray:
        pb = simulate_block(cfg, maturity, jp, block)
        out = np.asarray(functional(pb.path, pb.jumps), dtype=float)
        return np.broadcast_to(out, pb.path.values.shape[:-1]).copy()

    return _map_blocks(run, cfg)


def summarize(values: np.ndarray) -> MCEstimate:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean, se, n)


def mc_estimate(
    functional: Callable[[BrownianPath, JumpPath | None], np.ndarray],
    cfg: MCConfig,
    maturity: float = 1.0,
    jp: JumpParams | None = None,
) -> MCEstimate:
    """Mean and standard error of ``functional`` over ``cfg.n_paths`` paths."""
    return summarize(mc_values(functional, cfg, maturity, jp))


def correction_functional(ctx: ValidatedContext, literal: bool = False):
    """Path functional 1{X0_T > ln K} e^{X0_T} X1_T for the context's model."""
    p = ctx.params
    log_k = math.log(p.strike)

    def functional(path: BrownianPath, jumps: JumpPath | None) -> np.ndarray:
        xt = ctx.x0 + ctx.mu * path.maturity + p.sigma0 * path.terminal
        x1 = eval_x1(path, ctx, jumps, literal)
        return np.where(xt > log_k, np.exp(xt) * x1, 0.0)

    return functional


def mc_correction(ctx: ValidatedContext, cfg: MCConfig, literal: bool = False) -> MCEstimate:
    """Estimate of E[1{X0_T > ln K} e^{X0_T} X1_T] (undiscounted)."""
    return mc_estimate(correction_functional(ctx, literal), cfg, ctx.params.maturity, ctx.jumps)


# ---------------------------------------------------------------------------
# Full SDE
# ---------------------------------------------------------------------------


def _euler_step(ctx, x, dt, dw, eps, comp):
    p = ctx.params
    f = ctx.model.f(x)
    vol = p.sigma0 + eps * p.sigma1 * f
    return x + (p.rate - 0.5 * vol * vol + eps * comp) * dt + vol * dw


def euler_paths(
    ctx: ValidatedContext,
    path: BrownianPath,
    eps: float,
    jumps: JumpPath | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Euler-Maruyama terminal values of the full log-return SDE on given drivers.

    Jumps are applied at their exact times: each step containing jumps is
    split there, with W sampled by Brownian bridge from ``rng``.
    """
    times = path.times
    w = path.values
    batch = w.shape[:-1]
    x = np.full(batch, ctx.x0, dtype=float)
    use_jumps = jumps is not None and ctx.jumps is not None and jumps.times.shape[-1] > 0
    comp = ctx.jumps.compensator if (jumps is not None and ctx.jumps is not None) else 0.0
    if not use_jumps:
        for i in range(times.size - 1):
            x = _euler_step(ctx, x, times[i + 1] - times[i], w[..., i + 1] - w[..., i], eps, comp)
        return x
    if rng is None:
        raise DomainError("an rng is needed to place jumps between grid nodes")
    jt = np.broadcast_to(jumps.times, batch + jumps.times.shape[-1:])
    js = np.broadcast_to(jumps.sizes, batch + jumps.sizes.shape[-1:])
    step_of = np.searchsorted(times, np.where(np.isfinite(jt), jt, np.inf), side="left") - 1
    for i in range(times.size - 1):
        t_cur = np.full(batch, times[i])
        w_cur = w[..., i].copy()
        t_end, w_end = times[i + 1], w[..., i + 1]
        in_step = step_of == i
        for k in range(int(in_step.sum(axis=-1).max(initial=0))):
            # k-th jump inside this step, per path
            rank = np.cumsum(in_step, axis=-1) - 1
            sel = in_step & (rank == k)
            has = sel.any(axis=-1)
            if not has.any():
                break
            tau = np.where(has, np.max(np.where(sel, jt, -np.inf), axis=-1), t_cur)
            size = np.where(has, np.sum(np.where(sel, js, 0.0), axis=-1), 0.0)
            span = t_end - t_cur
            lam = np.where(span > 0, (tau - t_cur) / np.where(span > 0, span, 1.0), 0.0)
            sd = np.sqrt(np.maximum((tau - t_cur) * (t_end - tau) / np.where(span > 0, span, 1.0), 0.0))
            w_tau = w_cur + lam * (w_end - w_cur) + sd * rng.standard_normal(batch)
            x_new = _euler_step(ctx, x, tau - t_cur, w_tau - w_cur, eps, comp) + eps * size
            x = np.where(has, x_new, x)
            w_cur = np.where(has, w_tau, w_cur)
            t_cur = np.where(has, tau, t_cur)
        x = _euler_step(ctx, x, t_end - t_cur, w_end - w_cur, eps, comp)
    return x


def euler_full_sde(ctx: ValidatedContext, eps: float, cfg: MCConfig) -> np.ndarray:
    """Terminal samples of X^eps_T on the same drivers as :func:`mc_values`."""

    def run(block: int) -> np.ndarray:
        pb = simulate_block(cfg, ctx.params.maturity, ctx.jumps, block)
        return euler_paths(ctx, pb.path, eps, pb.jumps, pb.stream)

    return _map_blocks(run, cfg)


# ---------------------------------------------------------------------------
# Stochastic exponential
# ---------------------------------------------------------------------------


def stochastic_exponential(
    drift: np.ndarray,
    vol: np.ndarray,
    jump: np.ndarray | None,
    path: BrownianPath,
) -> np.ndarray:
    """Doleans-Dade exponential of X = int A ds + int B dW + sum of jumps, on the grid.

    ``drift`` and ``vol`` are sampled at the grid nodes (left points are used);
    ``jump[i]`` is the jump of X occurring in (t_{i-1}, t_i] (``jump[0]`` is ignored).
    Returns Phi at every node: exp(int (A - B^2/2) ds + int B dW) * prod (1 + dX).
    """
    times = path.times
    dt = np.diff(times)
    dw = np.diff(path.values, axis=-1)
    a = np.asarray(drift, dtype=float)[..., :-1]
    b = np.asarray(vol, dtype=float)[..., :-1]
    cont = np.cumsum((a - 0.5 * b * b) * dt + b * dw, axis=-1)
    zero = np.zeros(cont.shape[:-1] + (1,))
    out = np.exp(np.concatenate([zero, cont], axis=-1))
    if jump is not None:
        j = np.asarray(jump, dtype=float).copy()
        j[..., 0] = 0.0
        out = out * np.cumprod(1.0 + j, axis=-1)
    return out
