import pytest

_RESULTS = []


@pytest.fixture
def record():
    """Register one acceptance criterion's verdict; the summary prints PASS/FAIL lines."""
    def _record(number, title, passed, detail=""):
        _RESULTS.append((number, title, bool(passed), detail))
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}"
                                    + (f" ({detail})" if detail else ""))
