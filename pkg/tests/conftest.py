import numpy as np
import pytest

from dampwave import presets
from dampwave.spectral import Domain


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def default_model():
    return presets.default_model()


@pytest.fixture(scope="session")
def default_initial(default_model):
    return presets.default_initial(default_model.domain)


@pytest.fixture(params=[(1, (np.pi,), 16), (2, (1.0, 2.5), 6), (3, (1.0, 1.3, 0.7), 4)],
                ids=["1d", "2d", "3d"])
def domain(request):
    dim, lengths, modes = request.param
    return Domain(dim, lengths, modes)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
