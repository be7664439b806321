import numpy as np
import pytest

from qhdlab import FluidState, Grid1D, PressureLaw

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def gamma2():
    return PressureLaw.power(2.0)


@pytest.fixture
def unit_grid():
    return Grid1D(0.0, 1.0, 129)


def constant_state(grid, rho0=1.0, u0=0.0, t=0.0):
    return FluidState(t, np.full(grid.n, rho0), np.full(grid.n, u0), grid)
