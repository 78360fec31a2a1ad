"""Acceptance suite: one PASS/FAIL line per criterion, printed as each runs.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import sys

import pytest

from pwstab import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    result = acceptance.check(number)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


if __name__ == "__main__":
    results = acceptance.run_all()
    sys.exit(0 if all(r.passed for r in results) else 1)
