import pytest

_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _RESULTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
