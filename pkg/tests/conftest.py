import pytest

_ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Registry of one status line per acceptance criterion."""

    def record(criterion: str, status: str, detail: str) -> None:
        _ACCEPTANCE_LINES[criterion] = f"{criterion}: {status} - {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE_LINES, key=lambda k: (len(k), k)):
            terminalreporter.write_line(_ACCEPTANCE_LINES[key])
