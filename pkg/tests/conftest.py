import pytest

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def criterion_report():
    """Collects one pass/fail line per acceptance criterion."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
