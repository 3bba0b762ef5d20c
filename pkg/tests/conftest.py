import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_report():
    def report(number, passed, detail=""):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"criterion {number:>2}: {status}  {detail}")
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
