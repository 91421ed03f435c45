import pytest

from gritquit.boundary import solve_boundary
from gritquit.model import BENCHMARK_PARAMS, BENCHMARK_PROFIT, STAGED_PARAMS, STAGED_PROFIT, gamma_roots


@pytest.fixture(scope="session")
def bench():
    return BENCHMARK_PARAMS, BENCHMARK_PROFIT, solve_boundary(BENCHMARK_PARAMS, BENCHMARK_PROFIT), gamma_roots(BENCHMARK_PARAMS)


@pytest.fixture(scope="session")
def staged():
    return STAGED_PARAMS, STAGED_PROFIT, solve_boundary(STAGED_PARAMS, STAGED_PROFIT), gamma_roots(STAGED_PARAMS)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
