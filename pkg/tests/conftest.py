import pytest

from qsched import EpidemicParams, EpidemicState

from . import acceptance_log


@pytest.fixture(scope="session")
def base_params():
    return EpidemicParams.from_reproduction_numbers(1 / 14, 2.1, 0.8)


@pytest.fixture(scope="session")
def base_initial():
    return EpidemicState.initial(1e-4)


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.LINES:
        terminalreporter.write_line(line)
