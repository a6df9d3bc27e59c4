import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import dblquad, quad

from conftest import TABLE_JUMPS, exp_ctx, lin_ctx
from lvexpand.expansion import (
    BrownianPath,
    JumpPath,
    augment_with_jumps,
    compose_coeffs,
    ctx_exp_constants,
    ctx_linear_betas,
    ctx_poly_constants,
    eval_direct,
    eval_x0,
    eval_x1,
    eval_x1_exp,
    eval_x1_exp_jump,
    eval_x1_linear,
    eval_x1_linear_jump,
    eval_x1_poly,
    eval_x2_exp,
    eval_x2_exp_jump,
    eval_x2_linear,
    exp_constants,
    exp_jump_constants,
    linear_betas,
    poly_constants,
)
from lvexpand.models import DomainError, JumpParams
from lvexpand.montecarlo import block_stream, simulate_brownian, simulate_jumps


def zero_path(n=4096, t=0.5):
    times = np.linspace(0, t, n + 1)
    return BrownianPath(times, np.zeros_like(times))


def random_paths(n_paths=100, n_steps=4096, seed=1, t=0.5):
    return simulate_brownian(t, n_steps, block_stream(seed, 0), n_paths)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


def test_path_validation():
    with pytest.raises(DomainError):
        BrownianPath(np.array([0.0, 0.5, 0.4]), np.zeros(3))
    with pytest.raises(DomainError):
        BrownianPath(np.array([0.1, 0.5]), np.zeros(2))
    with pytest.raises(DomainError):
        BrownianPath(np.array([0.0, 0.5]), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        JumpPath(np.array([0.3, 0.1]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError):
        zero_path(10).subsample(3)


def test_padded_jump_path():
    jp = JumpPath(np.array([[0.1, np.inf], [np.inf, np.inf]]), np.array([[0.2, 7.0], [1.0, 1.0]]))
    np.testing.assert_array_equal(jp.count, [1, 0])
    np.testing.assert_array_equal(jp.total, [0.2, 0.0])


def test_subsample_keeps_nodes():
    path = random_paths(3, 64)
    coarse = path.subsample(8)
    assert coarse.n_steps == 8
    np.testing.assert_array_equal(coarse.terminal, path.terminal)


def test_augment_with_jumps_keeps_grid():
    path = random_paths(1, 8).subsample(1)
    single = BrownianPath(path.times, path.values[0])
    jumps = JumpPath(np.array([0.01, 0.3]), np.array([0.1, -0.2]))
    aug = augment_with_jumps(single, jumps, np.random.default_rng(0))
    assert aug.n_steps == 10
    assert set(single.times) <= set(aug.times)
    np.testing.assert_array_equal(aug.values[np.isin(aug.times, single.times)], single.values)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------


def test_exp_constants_literal_k():
    consts = exp_constants(0.15, 0.15, 0.1, literal=True)
    # sigma1 sigma0 (1/2 - alpha/2 - 1)
    assert consts.k_alpha == pytest.approx(-0.0123750, abs=1e-15)


def test_exp_constants_c5():
    for literal in (False, True):
        assert exp_constants(0.25, 0.15, 0.1, literal=literal).c[4] == pytest.approx(1.8, rel=1e-14)


@pytest.mark.parametrize("literal", [False, True])
def test_exp_constants_vanish(literal):
    consts = exp_constants(0.3, 0.0, 0.7, mu=0.01, x0=4.0, literal=literal)
    assert consts.k_alpha == 0 and consts.q == 0
    assert all(c == 0 for c in consts.c)


def test_exp_jump_constants():
    c8, c9 = exp_jump_constants(0.15, 0.15, 0.1, 0.01875)
    # 0.1 * 0.01875 + 0.01125 * 0.01 - 2 * 0.0225 * 0.1
    assert c8 == pytest.approx(-0.0025125, abs=1e-16)
    assert c9 == -c8
    assert exp_jump_constants(0.2, 0.0, 0.3, 0.01) == (0.0, -0.0)


def test_linear_betas_values():
    b = linear_betas(0.15, 0.1, 0.3, 0.5, math.log(100), 0.01875)
    assert b.beta4 == pytest.approx(0.00375, abs=1e-17)
    assert b.beta2 == pytest.approx(-7.03125e-05, abs=1e-19)
    assert b.beta3 == pytest.approx(0.1 * (0.3 + 0.5 * math.log(100)), rel=1e-15)
    lit = linear_betas(0.15, 0.1, 0.3, 0.5, math.log(100), 0.01875, literal=True)
    assert lit.beta3 == pytest.approx(0.5 * 0.15 + math.log(100) * 0.1 * 0.5, rel=1e-15)
    assert all(v == 0 for v in linear_betas(0.15, 0.0, 0.3, 0.5, 4.6, 0.01).as_tuple())


def test_poly_constants():
    pc = poly_constants(0.15, 0.1, 0.01875, (0.3, 0.5))
    assert pc.ktilde[1] == pytest.approx(0.1 / 0.15 * 0.25, rel=1e-15)
    zero = poly_constants(0.15, 0.0, 0.01875, (0.3, 0.5, 0.2))
    assert not np.any(zero.k) and not np.any(zero.ktilde)
    literal = poly_constants(0.15, 0.0, 0.01875, (0.3, 0.5, 0.2), literal=True)
    for arr in (literal.k, literal.ktilde, literal.c3, literal.c4, literal.c5):
        assert not np.any(arr)
    # the printed C1 carries sigma0 terms that do not scale with sigma1
    assert np.any(literal.c1)


# ---------------------------------------------------------------------------
# X0 and the exponential model
# ---------------------------------------------------------------------------


def test_eval_x0():
    ctx = exp_ctx(sigma0=0.15)
    assert eval_x0(0.0, 0.0, ctx) == ctx.x0
    assert eval_x0(0.5, 0.0, ctx) == pytest.approx(math.log(100) + 0.01875 * 0.5, abs=1e-14)
    w = np.random.default_rng(0).normal(0.0, math.sqrt(0.3), 200_000)
    x = eval_x0(0.3, w, ctx)
    se = 0.15 * math.sqrt(0.3 / w.size)
    assert abs(x.mean() - (ctx.x0 + ctx.mu * 0.3)) < 3 * se
    assert x.var(ddof=1) == pytest.approx(0.15**2 * 0.3, rel=0.01)


def test_x1_exp_zero_path():
    ctx = exp_ctx(sigma0=0.15)
    consts = ctx_exp_constants(ctx)
    alpha, mu, t = 0.1, ctx.mu, 0.5
    growth = math.exp(alpha * ctx.x0) * math.expm1(alpha * mu * t)
    expected = consts.k_alpha * growth / (alpha * mu) + consts.q * growth
    assert eval_x1_exp(zero_path(), ctx, consts) == pytest.approx(expected, rel=1e-9)


def test_x1_exp_short_horizon():
    ctx = exp_ctx()
    consts = ctx_exp_constants(ctx)
    path = BrownianPath(np.array([0.0, 1e-14]), np.array([0.0, 0.0]))
    assert abs(eval_x1_exp(path, ctx, consts)) < 1e-12


def test_x2_exp_zero_path():
    ctx = exp_ctx()
    consts = ctx_exp_constants(ctx)
    alpha, x0, mu, t = 0.1, ctx.x0, ctx.mu, 0.5

    def e(s):
        return math.exp(alpha * (x0 + mu * s))

    a = quad(e, 0, t, epsabs=0, epsrel=1e-13)[0]
    g = quad(lambda s: e(s) ** 2, 0, t, epsabs=0, epsrel=1e-13)[0]
    h = dblquad(lambda u, s: e(u) * e(s), 0, t, 0, lambda s: s, epsabs=0, epsrel=1e-13)[0]
    c1, c2, c3, c4, c5, c6, c7 = consts.c
    et = e(t)
    expected = c1 * g + c2 * et * a + c3 * a + c4 * h + c5 * et * et + c6 * et + c7
    assert eval_x2_exp(zero_path(), ctx, consts) == pytest.approx(expected, rel=1e-7, abs=1e-10)


def test_exp_sigma1_zero():
    ctx = exp_ctx(sigma1=0.0)
    path = random_paths(5, 64)
    consts = ctx_exp_constants(ctx)
    assert not np.any(eval_x1_exp(path, ctx, consts))
    assert not np.any(eval_x2_exp(path, ctx, consts))
    x1, x2 = eval_direct(path, ctx)
    assert not np.any(x1) and not np.any(x2)


def test_exp_jump_decomposition():
    ctx = exp_ctx(jumps=TABLE_JUMPS)
    consts = ctx_exp_constants(ctx)
    path = random_paths(50, 64)
    jumps = simulate_jumps(TABLE_JUMPS, 0.5, np.random.default_rng(3), 50)
    diff = eval_x1_exp_jump(path, jumps, ctx, consts, TABLE_JUMPS) - eval_x1_exp(path, ctx, consts)
    np.testing.assert_allclose(diff, TABLE_JUMPS.compensator * 0.5 + jumps.total, rtol=0, atol=1e-14)
    none = JumpPath.empty((50,))
    diff = eval_x1_exp_jump(path, none, ctx, consts, TABLE_JUMPS) - eval_x1_exp(path, ctx, consts)
    np.testing.assert_allclose(diff, math.exp(0.0502) - 1, rtol=1e-13)


def test_exp_jump_zero_mean_jumps():
    jp = JumpParams(2.0, -0.5e-12, 1e-6)
    ctx = exp_ctx(jumps=jp)
    consts = ctx_exp_constants(ctx)
    path = random_paths(4, 64)
    jumps = JumpPath(np.array([0.2, 0.4]), np.array([0.01, -0.02]))
    diff = eval_x1_exp_jump(path, jumps, ctx, consts, jp) - eval_x1_exp(path, ctx, consts)
    np.testing.assert_allclose(diff, -0.01, atol=1e-11)


def test_x2_exp_jump_vanishes():
    ctx = exp_ctx(sigma1=0.0, jumps=TABLE_JUMPS)
    consts = ctx_exp_constants(ctx)
    path = random_paths(4, 64)
    assert not np.any(eval_x2_exp_jump(path, JumpPath.empty((4,)), ctx, consts, TABLE_JUMPS))


def test_exp_jump_vs_direct():
    ctx = exp_ctx(jumps=TABLE_JUMPS)
    consts = ctx_exp_constants(ctx)
    rng = np.random.default_rng(7)
    worst1 = worst2 = 0.0
    for i in range(20):
        jumps = simulate_jumps(TABLE_JUMPS, 0.5, rng)
        path = simulate_brownian(0.5, 4096, block_stream(100 + i, 0))
        path = augment_with_jumps(path, jumps, rng)
        d1, d2 = eval_direct(path, ctx, jumps)
        worst1 = max(worst1, abs(eval_x1_exp_jump(path, jumps, ctx, consts, TABLE_JUMPS) - d1))
        worst2 = max(worst2, abs(eval_x2_exp_jump(path, jumps, ctx, consts, TABLE_JUMPS) - d2))
    assert worst1 < 1e-3 and worst2 < 1e-3


# ---------------------------------------------------------------------------
# Polynomial and linear models
# ---------------------------------------------------------------------------


def test_poly_constant_f():
    ctx = lin_ctx(coeffs=(0.3,))
    pc = ctx_poly_constants(ctx)
    path = random_paths(10, 64)
    expected = 0.1 * 0.3 * path.terminal - 0.25 * 0.1 * 0.3 * 0.5
    np.testing.assert_allclose(eval_x1_poly(path, ctx, pc), expected, atol=1e-15)


def test_poly_matches_beta_form():
    ctx = lin_ctx()
    path = random_paths(100, 1024)
    a = eval_x1_poly(path, ctx, ctx_poly_constants(ctx))
    b = eval_x1_linear(path, ctx, ctx_linear_betas(ctx))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    z = zero_path(1024)
    assert eval_x1_poly(z, ctx, ctx_poly_constants(ctx)) == pytest.approx(
        eval_x1_linear(z, ctx, ctx_linear_betas(ctx)), abs=1e-13
    )


def test_linear_zero_path():
    ctx = lin_ctx()
    b = ctx_linear_betas(ctx)
    assert eval_x1_linear(zero_path(16), ctx, b) == pytest.approx(b.beta1 * 0.5 + b.beta2 * 0.25, abs=1e-16)


def test_linear_sigma1_zero():
    ctx = lin_ctx(sigma1=0.0)
    path = random_paths(5, 64)
    assert not np.any(eval_x1_linear(path, ctx, ctx_linear_betas(ctx)))
    assert not np.any(eval_x1_poly(path, ctx, ctx_poly_constants(ctx)))
    assert not np.any(eval_x2_linear(path, ctx))


def test_linear_jump_compensator_sign():
    ctx = lin_ctx(jumps=TABLE_JUMPS)
    b = ctx_linear_betas(ctx)
    path = random_paths(3, 64)
    none = JumpPath.empty((3,))
    base = eval_x1_linear(path, ctx, b)
    comp = math.exp(0.0502) - 1
    np.testing.assert_allclose(eval_x1_linear_jump(path, none, ctx, b, TABLE_JUMPS) - base, comp, rtol=1e-13)
    lit = eval_x1_linear_jump(path, none, ctx, b, TABLE_JUMPS, literal=True) - base
    np.testing.assert_allclose(lit, -comp, rtol=1e-13)
    jumps = JumpPath(np.array([0.1, 0.2]), np.array([0.03, 0.04]))
    tiny = JumpParams(2.0, 0.0, 1e-9)
    np.testing.assert_allclose(eval_x1_linear_jump(path, jumps, ctx, b, tiny) - base, 0.07, atol=1e-12)


def test_general_poly_vs_direct():
    ctx = lin_ctx(coeffs=(0.2, 0.1, -0.05, 0.01))
    fine = random_paths(50, 4096, seed=9)
    errs = []
    for stride in (16, 1):
        path = fine.subsample(stride)
        d1, _ = eval_direct(path, ctx, order=1)
        errs.append(np.max(np.abs(eval_x1(path, ctx) - d1)))
    assert errs[1] < errs[0] and errs[1] < 1e-3


# ---------------------------------------------------------------------------
# Reduction against the direct system
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("model", ["exp", "linear"])
def test_reduction_refinement(model):
    ctx = exp_ctx() if model == "exp" else lin_ctx()
    fine = random_paths(100, 4096, seed=2)
    e1, e2 = [], []
    for stride in (16, 4, 1):
        path = fine.subsample(stride)
        d1, d2 = eval_direct(path, ctx)
        if model == "exp":
            consts = ctx_exp_constants(ctx)
            r1, r2 = eval_x1_exp(path, ctx, consts), eval_x2_exp(path, ctx, consts)
        else:
            r1, r2 = eval_x1_linear(path, ctx, ctx_linear_betas(ctx)), eval_x2_linear(path, ctx)
        e1.append(np.max(np.abs(r1 - d1)))
        e2.append(np.max(np.abs(r2 - d2)))
    assert e1[0] > e1[1] > e1[2] and e1[2] < 1e-3
    assert e2[0] > e2[1] > e2[2] and e2[2] < 1e-3


@pytest.mark.parametrize("ctx_fn", [exp_ctx, lin_ctx])
def test_sigma1_homogeneity(ctx_fn):
    ctx = ctx_fn()
    scaled = ctx.with_params(sigma1=2.5 * ctx.params.sigma1)
    path = random_paths(20, 256)
    if ctx_fn is exp_ctx:
        c, cs = ctx_exp_constants(ctx), ctx_exp_constants(scaled)
        pairs = [(eval_x1_exp(path, ctx, c), eval_x1_exp(path, scaled, cs), 2.5)]
        pairs.append((eval_x2_exp(path, ctx, c), eval_x2_exp(path, scaled, cs), 6.25))
    else:
        pairs = [(eval_x1(path, ctx), eval_x1(path, scaled), 2.5)]
        pairs.append((eval_x2_linear(path, ctx), eval_x2_linear(path, scaled), 6.25))
    d, ds = eval_direct(path, ctx), eval_direct(path, scaled)
    pairs += [(d[0], ds[0], 2.5), (d[1], ds[1], 6.25)]
    for a, b, factor in pairs:
        np.testing.assert_allclose(b, factor * a, rtol=1e-12)


# ---------------------------------------------------------------------------
# Composition coefficients
# ---------------------------------------------------------------------------


def test_compose_identity():
    out = compose_coeffs([[2.0, 1.0]], [0.3, -0.2, 0.7])
    np.testing.assert_allclose(out, [2.0, 0.3, -0.2, 0.7])


def test_compose_pure_taylor():
    derivs = [[1.0, 2.0], [3.0, 4.0], [5.0], [6.0]]
    np.testing.assert_allclose(compose_coeffs(derivs, [0.0, 0.0, 0.0]), [1.0, 3.0, 5.0, 6.0])


def test_compose_exponential():
    out = compose_coeffs([[1.0, 1.0, 1.0, 1.0]], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(out, [1.0, 1.0, 0.5, 1.0 / 6.0], rtol=1e-15)


def _symbolic_oracle(fcoef, xs):
    eps, y = sp.symbols("eps y")
    x_eps = sum(x * eps ** (i + 1) for i, x in enumerate(xs))
    f_eps = sum(eps**j * sum(c * y**m for m, c in enumerate(row)) for j, row in enumerate(fcoef))
    series = sp.expand(f_eps.subs(y, x_eps))
    return [float(series.coeff(eps, k)) for k in range(4)]


def _derivs_at_zero(fcoef):
    # f_j(y) = sum_m c_m y^m around x0 = 0, so D^m f_j(0) = m! c_m
    return [[math.factorial(m) * c for m, c in enumerate(row)] for row in fcoef]


def test_compose_symbolic_oracle():
    rng = np.random.default_rng(42)
    for _ in range(10):
        fcoef = [[sp.Rational(int(v), 7) for v in rng.integers(-9, 10, 4)] for _ in range(4)]
        xs = [sp.Rational(int(v), 5) for v in rng.integers(-9, 10, 3)]
        expected = _symbolic_oracle(fcoef, xs)
        derivs = _derivs_at_zero([[float(c) for c in row] for row in fcoef])
        got = compose_coeffs(derivs, [float(x) for x in xs])
        np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)
        literal = compose_coeffs(derivs, [float(x) for x in xs], literal=True)
        np.testing.assert_allclose(literal[:3], expected[:3], rtol=1e-12, atol=1e-12)
        # the printed third coefficient lacks D^2 f0 x1 x2 and halves nothing on D^2 f1 x1^2
        x1, x2 = float(xs[0]), float(xs[1])
        missing = derivs[0][2] * x1 * x2 - 0.5 * derivs[1][2] * x1**2
        assert literal[3] + missing == pytest.approx(expected[3], abs=1e-12)
