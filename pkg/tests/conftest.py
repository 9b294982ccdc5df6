import pytest

from motesim.scenario import load_scenario

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def paper_grid():
    return load_scenario("paper-grid")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
