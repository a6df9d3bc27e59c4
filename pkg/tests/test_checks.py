import numpy as np
import pytest

from lvexpand.checks import SUITES, collapse_deviations, random_context, run_suite
from lvexpand.models import DomainError


def test_oracle_suite_passes():
    results = run_suite("oracles")
    assert [r.name for r in results] == ["quadrature_mgf", "reduction_vs_direct", "closed_vs_mc", "pce_vs_closed"]
    for r in results:
        assert r.passed, r.as_dict()


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("bogus")
    assert set(SUITES) == {"invariants", "oracles"}


def test_collapse_reports_printed_linear_separately():
    dev = collapse_deviations(n=10)
    assert dev["gated"] <= 1e-12
    assert dev["literal_linear_sigma1_zero"] > 1e-3


def test_random_context_is_valid():
    rng = np.random.default_rng(0)
    for kind in ("exp", "linear"):
        for jumps in (False, True):
            ctx = random_context(rng, kind, jumps)
            assert (ctx.jumps is not None) == jumps
            assert ctx.params.s0 > 0
    with pytest.raises(DomainError):
        random_context(rng, "exp", False).with_params(s0=-1.0)
