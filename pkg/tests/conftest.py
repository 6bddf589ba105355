import pytest

from ccdrelax.microgrid import FOUR_METRIC, TWO_METRIC, MicrogridParams, build_microgrid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid4():
    return build_microgrid(MicrogridParams(variant=FOUR_METRIC))


@pytest.fixture(scope="session")
def grid2():
    return build_microgrid(MicrogridParams(variant=TWO_METRIC))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
