import pytest
from hypothesis import HealthCheck, settings

from toralgibbs.coding import build_partition
from toralgibbs.gibbs import g_function, gibbs_state
from toralgibbs.potential import Potential, geometric_potential
from toralgibbs.pressure import pressure
from toralgibbs.torus import cat_map

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def L():
    return cat_map()


@pytest.fixture(scope="session")
def coding(L):
    return build_partition(L)


@pytest.fixture(scope="session")
def psi():
    """Base potential 0.3 cos(2 pi x_1)."""
    return Potential.cosine(0.3)


@pytest.fixture(scope="session")
def phi(L, psi):
    """Zero-pressure normalisation of ``psi`` (transfer operator, depth 14)."""
    return psi.shift(-pressure(psi, L, "transfer_operator", 14))


@pytest.fixture(scope="session")
def gibbs10(phi, coding):
    G = gibbs_state(phi, coding, 10)
    return G, g_function(G)


@pytest.fixture(scope="session")
def lebesgue10(L, coding):
    G = gibbs_state(geometric_potential(L), coding, 10)
    return G, g_function(G)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
