from fractions import Fraction

import pytest
from hypothesis import settings

from postfa import fixtures, zoo

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# acceptance lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def restart_machines():
    return fixtures.restart_fixtures()


@pytest.fixture(scope="session")
def leq():
    return zoo.build_leq()


@pytest.fixture(scope="session")
def leq_post():
    return zoo.leq_post()


@pytest.fixture(scope="session")
def lpal():
    return zoo.build_lpal()


F = Fraction
