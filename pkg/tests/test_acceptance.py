"""Acceptance criteria AC1-AC12; prints one PASS/FAIL line per criterion."""
import pytest

from latgreen.acceptance import CHECKS, run_check


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, capsys):
    result = run_check(name)
    with capsys.disabled():
        print(f"\n{'PASS' if result.passed else 'FAIL'} {name}: {result.detail}")
    assert result.passed, result.detail
