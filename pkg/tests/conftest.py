import math
import sys

import numpy as np
import pytest

from lvexpand.models import Exponential, JumpParams, MarketParams, Polynomial, validate_params

TABLE_JUMPS = JumpParams(lam=2.0, gamma=0.05, delta=0.02)


def exp_ctx(s0=100.0, sigma0=0.25, eps=0.1, sigma1=0.15, jumps=None, alpha=0.1):
    return validate_params(MarketParams(s0, 100.0, 0.03, 0.5, sigma0, sigma1, eps), Exponential(alpha), jumps)


def lin_ctx(s0=100.0, sigma0=0.25, eps=0.1, sigma1=0.1, jumps=None, coeffs=(0.3, 0.5)):
    return validate_params(MarketParams(s0, 100.0, 0.03, 0.5, sigma0, sigma1, eps), Polynomial(coeffs), jumps)


def discount(ctx):
    return math.exp(-ctx.params.rate * ctx.params.maturity)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
