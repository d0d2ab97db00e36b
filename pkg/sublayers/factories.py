from fractions import Fraction

import factory
import factory.random
import numpy as np

from sublayers.layers import (
    RELU,
    AttentionHead,
    AttnSublayer,
    BProjSublayer,
    FFSublayer,
    Network,
    Normalizer,
    Piece,
    PiecewiseLinear3,
    SepConvSublayer,
)
from tensorcore.matrices import as_array
from tensorcore.scalars import Mode


def random_exact(rows: int, cols: int = None, bound: int = 3, denominator: int = 4):
    """Random small rationals k / denominator with |k| <= bound * denominator."""
    rng = factory.random.randgen
    limit = bound * denominator
    shape = (rows,) if cols is None else (rows, cols)
    values = np.empty(shape, dtype=object)
    for index in np.ndindex(shape):
        values[index] = Fraction(rng.randint(-limit, limit), denominator)
    return as_array(values, Mode.EXACT)


def numpy_rng() -> np.random.Generator:
    """numpy generator seeded from the factory-boy random state."""
    return np.random.default_rng(factory.random.randgen.getrandbits(32))


def random_gaussian(rows: int, cols: int):
    return numpy_rng().standard_normal((rows, cols))


def random_phi(denominator: int = 4) -> PiecewiseLinear3:
    rng = factory.random.randgen
    c1 = Fraction(rng.randint(-8, 0), denominator)
    c2 = c1 + Fraction(rng.randint(1, 8), denominator)
    constant = rng.randrange(3)
    pieces = tuple(
        Piece(
            0 if i == constant else Fraction(rng.randint(-8, 8), denominator),
            Fraction(rng.randint(-8, 8), denominator),
        )
        for i in range(3)
    )
    return PiecewiseLinear3(c1, c2, pieces)


class AttentionHeadFactory(factory.Factory):
    W_O = factory.LazyAttribute(lambda o: random_exact(o.d, o.m))
    W_V = factory.LazyAttribute(lambda o: random_exact(o.m, o.d))
    W_K = factory.LazyAttribute(lambda o: random_exact(o.m, o.d))
    W_Q = factory.LazyAttribute(lambda o: random_exact(o.m, o.d))
    b_Q = factory.LazyAttribute(lambda o: random_exact(o.m))
    mode = Mode.EXACT

    class Meta:
        model = AttentionHead

    class Params:
        d = 2
        m = 1


class AttnSublayerFactory(factory.Factory):
    heads = factory.LazyAttribute(
        lambda o: tuple(AttentionHeadFactory(d=o.d, m=o.m) for _ in range(o.h))
    )
    normalizer = Normalizer.HARDMAX
    lam = None

    class Meta:
        model = AttnSublayer

    class Params:
        d = 2
        m = 1
        h = 2
        average = factory.Trait(normalizer=Normalizer.AVERAGE)


class FFSublayerFactory(factory.Factory):
    W1 = factory.LazyAttribute(lambda o: random_exact(o.r, o.d))
    b1 = factory.LazyAttribute(lambda o: random_exact(o.r))
    W2 = factory.LazyAttribute(lambda o: random_exact(o.d, o.r))
    b2 = factory.LazyAttribute(lambda o: random_exact(o.d))
    activation = RELU
    mode = Mode.EXACT

    class Meta:
        model = FFSublayer

    class Params:
        d = 2
        r = 3
        phi = factory.Trait(r=1, activation=factory.LazyFunction(random_phi))


class BProjSublayerFactory(factory.Factory):
    W_O = factory.LazyAttribute(lambda o: random_gaussian(o.d, o.d))
    W_P = factory.LazyAttribute(lambda o: random_gaussian(o.n, o.n))
    mode = Mode.FLOAT

    class Meta:
        model = BProjSublayer

    class Params:
        d = 2
        n = 3


class SepConvSublayerFactory(factory.Factory):
    W_O = factory.LazyAttribute(lambda o: random_gaussian(o.d, o.d))
    W_C = factory.LazyAttribute(lambda o: random_gaussian(o.d, o.k))
    mode = Mode.FLOAT

    class Meta:
        model = SepConvSublayer

    class Params:
        d = 2
        k = 3


class NetworkFactory(factory.Factory):
    sublayers = factory.LazyAttribute(
        lambda o: tuple(
            layer
            for _ in range(o.blocks)
            for layer in (
                AttnSublayerFactory(d=o.d),
                FFSublayerFactory(d=o.d, phi=o.phi),
            )
        )
    )
    positional_encoding = None

    class Meta:
        model = Network

    class Params:
        d = 2
        blocks = 2
        phi = False
