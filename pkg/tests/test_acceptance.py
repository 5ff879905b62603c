"""Acceptance criteria 1-10, one test and one printed PASS/FAIL line each.

Ensemble sizes default to the reference 1000 trajectories; set
PARITYSME_ACCEPTANCE_N for a quicker (statistically widened) run.
"""

import os

import pytest

from paritysme import acceptance

N = int(os.environ.get("PARITYSME_ACCEPTANCE_N", acceptance.REFERENCE_N))


@pytest.fixture(scope="module")
def ctx():
    return acceptance.Context(n=N, seed=0)


@pytest.mark.parametrize("number", sorted(acceptance.CHECKS))
def test_criterion(number, ctx, capsys):
    res = acceptance.run_criterion(number, ctx)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
