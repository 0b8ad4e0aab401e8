import pytest

from casimod.lifshitz import ConvergenceControl
from casimod.materials import builtin_materials

NM = 1e-9


@pytest.fixture(scope="session")
def catalog():
    return builtin_materials()


@pytest.fixture(scope="session")
def gold(catalog):
    return catalog["Au"]


@pytest.fixture(scope="session")
def nickel(catalog):
    return catalog["Ni"]


@pytest.fixture(scope="session")
def ctrl():
    return ConvergenceControl()


@pytest.fixture(scope="session")
def loose():
    """Cheaper tolerances for tests that only need a few significant digits."""
    return ConvergenceControl(quad_rel_tol=1e-8, sum_rel_tol=1e-7)
