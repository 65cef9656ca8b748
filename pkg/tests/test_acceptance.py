"""Acceptance gate: one check per criterion, each at its pinned tolerance.

Every result line is printed as it completes and again in the pytest
terminal summary.  Run directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import sys

import pytest

from gelfree.validation import CRITERIA, run_criterion

RESULTS: dict = {}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    res = run_criterion(number)
    RESULTS[number] = res
    print(res.line())
    assert res.passed, res.line()


if __name__ == "__main__":
    ok = True
    for n in sorted(CRITERIA):
        res = run_criterion(n)
        print(res.line(), f"({res.runtime:.1f}s)", flush=True)
        ok &= res.passed
    sys.exit(0 if ok else 1)
