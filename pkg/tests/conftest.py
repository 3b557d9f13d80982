import pytest

from nulllab.harness import builtin_plans, run_plan

ACCEPTANCE_SEED = 7

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def plans():
    return builtin_plans(ACCEPTANCE_SEED)


@pytest.fixture(scope="session")
def example3_result(plans):
    return run_plan(plans["example3"])


@pytest.fixture(scope="session")
def example1_result(plans):
    return run_plan(plans["example1"])


@pytest.fixture(scope="session")
def example4_result(plans):
    return run_plan(plans["example4"])
