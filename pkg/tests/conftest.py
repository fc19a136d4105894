import pytest

from cnnsynth import fixtures

# filled by test_acceptance; printed at the end of every run
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def alexnet():
    return fixtures.load("alexnet")


@pytest.fixture(scope="session")
def googlenet():
    return fixtures.load("googlenet")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
