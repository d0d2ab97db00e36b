from fractions import Fraction

import factory
import factory.random

from constructor.grid import GridParams
from constructor.targets import (
    PiecewiseConstantFn,
    random_positional_target,
    random_target,
)


class GridParamsFactory(factory.Factory):
    delta = Fraction(1, 2)
    d = 1
    n = 2

    class Meta:
        model = GridParams


def _seed() -> int:
    return factory.random.randgen.getrandbits(32)


class RandomTargetFactory(factory.Factory):
    """Seeded random target on a grid, equivariant unless positional=True."""

    grid = factory.SubFactory(GridParamsFactory)
    seed = factory.LazyFunction(_seed)
    positional = False

    class Meta:
        model = PiecewiseConstantFn

    @classmethod
    def _create(cls, model_class, grid, seed, positional):
        if positional:
            return random_positional_target(grid, seed)
        return random_target(grid, seed)

    _build = _create
