import functools

import pytest

from shearwave import FlowParams, solve_dispersion

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def state_for(gamma: float, p0: float = -2.0, g: float = 9.8):
    return solve_dispersion(FlowParams(gamma, p0, g))


@pytest.fixture(scope="session")
def states():
    return state_for


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def calibrated(gamma: float, order: int, epsilon: float = 1e-3):
    from shearwave import calibrate
    return calibrate(state_for(gamma), order, epsilon)
