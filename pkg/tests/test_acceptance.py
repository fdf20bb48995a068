"""The ten acceptance criteria, one test each, at full resolution.

Every run prints one PASS/FAIL line per criterion in the terminal summary.
"""
import pytest

from tmcert import suite


def _detail(result):
    bad = [r for r in result.rows if not r.ok]
    return "; ".join(f"{r.quantity}: computed {r.computed!r}, reference {r.reference!r}, tol {r.tolerance!r}"
                     for r in bad)


@pytest.mark.parametrize("number", sorted(suite.CRITERIA))
def test_criterion(number, acceptance_log):
    try:
        result = suite.CRITERIA[number]()
    except Exception as exc:
        acceptance_log[number] = f"criterion {number:2d} [FAIL] raised {type(exc).__name__}: {exc}"
        raise
    acceptance_log[number] = result.line()
    print(result.line())
    for row in result.rows:
        print(f"    {'ok ' if row.ok else 'BAD'} {row.quantity}: {row.computed!r} vs {row.reference!r} ({row.tolerance})")
    assert result.passed, _detail(result)
