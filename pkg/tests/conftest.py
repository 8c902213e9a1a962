import numpy as np
import pytest

from rotwaves.params import PhysicalParams, VorticitySpec

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gravity_params():
    return PhysicalParams(g=9.81, sigma=0.074, p0=-1.0)


@pytest.fixture(scope="session")
def irrotational():
    return VorticitySpec.constant(-1.0, 0.0)


@pytest.fixture(scope="session")
def two_layer():
    return VorticitySpec.piecewise([-1.0, -0.5, 0.0], [2.0, -1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
