"""Acceptance criteria, each run at its stated tolerance and time limit."""

import pytest

from curvcert.harness.checks import ACCEPTANCE, CHECKS, run_check

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("name", ACCEPTANCE)
def test_criterion(name):
    rec = run_check(name)
    detail = f" ({rec.error})" if rec.error else ""
    limit = f" / limit {rec.time_limit:.0f}s" if rec.time_limit else ""
    ACCEPTANCE_LINES.append(f"[{rec.status.upper()}] {name}: {CHECKS[name].title} [{rec.runtime:.1f}s{limit}]{detail}")
    assert rec.status == "pass", rec.measured if not rec.error else rec.error
