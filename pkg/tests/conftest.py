import numpy as np
import pytest

from peripump.displacement import reference_curve
from peripump.geometry import reference_geometry
from peripump.network import reference_params


@pytest.fixture(scope="session")
def ref_curve():
    return reference_curve()


@pytest.fixture
def geom3():
    return reference_geometry(3)


@pytest.fixture
def geom2():
    return reference_geometry(2)


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
