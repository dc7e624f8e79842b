import numpy as np
import pytest

from ahlfors.fractals import SierpinskiGasket, generate, gasket_boundary_pair
from ahlfors.space import MetricMeasureSpace


def grid_1d(n=10, h=0.1):
    pts = (np.arange(n) * h)[:, None]
    return MetricMeasureSpace(pts, np.full(n, 1.0 / n))


@pytest.fixture(scope="session")
def line10():
    return grid_1d()


@pytest.fixture(scope="session")
def gasket6():
    return generate(SierpinskiGasket(6))


@pytest.fixture(scope="session")
def pair6():
    return gasket_boundary_pair(6)


@pytest.fixture(scope="session")
def pair7():
    return gasket_boundary_pair(7)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda t: int(t.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
