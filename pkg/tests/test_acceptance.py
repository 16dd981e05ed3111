"""The thirteen acceptance criteria at their stated tolerances and runtime budgets."""

import pytest

from fraclab.config import DEFAULTS
from fraclab.experiments import CRITERIA

BUDGET_SECONDS = {1: 5, 2: 30, 3: 30, 4: 60, 5: 300, 6: 120, 7: 300, 8: 600, 9: 180, 10: 60,
                  11: 60, 12: 180, 13: 30}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    result = CRITERIA[number](DEFAULTS)
    within = result.seconds <= BUDGET_SECONDS[number]
    status = "PASS" if result.passed and within else "FAIL"
    parts = ", ".join(f"{c.name}={c.value:.3g} ({c.relation} {c.tol:.3g})" for c in result.checks)
    acceptance_log[number] = (f"{status} [{number:2d}] {result.title}: {parts}; "
                              f"{result.seconds:.1f} s of {BUDGET_SECONDS[number]} s")
    assert result.passed, [c for c in result.failed_checks()]
    assert within, f"took {result.seconds:.1f} s"
