import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """``acceptance(criterion, passed, detail)`` stores one summary line per criterion."""

    def record(criterion, passed, detail):
        _ACCEPTANCE[criterion] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
