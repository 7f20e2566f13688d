import functools

import pytest

from app.core.bifurcation import BifurcationEngine
from app.core.procedures import get_procedure
from app.services.assumption_checker import AssumptionChecker
from app.services.discrete_cutpoint import DiscreteCutPointFinder


@pytest.fixture(scope="session")
def engine():
    return BifurcationEngine()


@pytest.fixture(scope="session")
def checker():
    return AssumptionChecker()


@pytest.fixture(scope="session")
def finder(engine):
    return DiscreteCutPointFinder(engine)


@pytest.fixture(scope="session")
def classified(engine):
    """Cached classify_and_find_cocp results keyed by procedure name"""

    @functools.lru_cache(maxsize=None)
    def classify(name):
        return engine.classify_and_find_cocp(get_procedure(name))

    return classify
