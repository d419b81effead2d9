"""The twelve acceptance criteria at their stated tolerances.

The whole suite runs once per session; each criterion is its own test and a
PASS/FAIL line per criterion is printed in the terminal summary. Run this file
directly to print the lines without pytest.
"""
import pytest

from locctl.harness.acceptance import check_names, run_acceptance

LINES = []


@pytest.fixture(scope="session")
def acceptance_results():
    results = run_acceptance(None, progress=lambda r: LINES.append(r.line()))
    return {r.name: r for r in results}


@pytest.mark.slow
@pytest.mark.parametrize("name", check_names())
def test_criterion(name, acceptance_results):
    res = acceptance_results[name]
    print(res.line())
    assert res.passed, f"{name}: measured {res.measured}, required {res.required}"


if __name__ == "__main__":
    import sys

    results = run_acceptance(None, progress=lambda r: print(r.line(), flush=True))
    sys.exit(0 if all(r.passed for r in results) else 1)
