"""Acceptance gate: one pass/fail line per criterion."""
import pytest

from rstshell.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number](threads=2, seed=0)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
