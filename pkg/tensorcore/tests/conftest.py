from fractions import Fraction

import factory.random
import pytest

from constructor.grid import GridParams


@pytest.fixture(autouse=True)
def setup_test_environment(settings):
    factory.random.reseed_random("777")
    settings.SEQ2SEQ_UNIV_SEED = 777
    settings.SEQ2SEQ_UNIV_BUDGET = 100_000
    settings.SEQ2SEQ_UNIV_ENUMERATION_LIMIT = 200_000
    settings.SEQ2SEQ_UNIV_WORKERS = 1
    settings.SEQ2SEQ_UNIV_FLOAT_TIE_TOLERANCE = 1e-12


@pytest.fixture
def grid_half():
    return GridParams(Fraction(1, 2), 1, 2)


@pytest.fixture
def grid_third():
    return GridParams(Fraction(1, 3), 1, 3)


@pytest.fixture
def grid_quarter():
    return GridParams(Fraction(1, 4), 1, 2)


@pytest.fixture
def grid_planar():
    return GridParams(Fraction(1, 2), 2, 2)