import numpy as np
import pytest

from doublewell.hartree import default_grid, minimize_hartree
from doublewell.model import Grid1D, InteractionKernel, TrapSpec


@pytest.fixture(scope="session")
def harmonic():
    return TrapSpec("SingleWell", 2.0)


@pytest.fixture(scope="session")
def quartic():
    return TrapSpec("SingleWell", 4.0)


@pytest.fixture(scope="session")
def triangle():
    return InteractionKernel("Triangle", 1.0, 0.5)


@pytest.fixture(scope="session")
def sol_free(harmonic):
    return minimize_hartree(harmonic, None, 0.0)


@pytest.fixture(scope="session")
def sol_int(harmonic, triangle):
    return minimize_hartree(harmonic, triangle, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D(801, 8.0)


def gaussian(x, center=0.0):
    return np.pi ** -0.25 * np.exp(-0.5 * (x - center) ** 2)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
