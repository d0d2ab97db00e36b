import itertools
import math
from fractions import Fraction
from typing import Iterator, List, Optional

import numpy as np

from constructor.grid import GridKey, GridParams
from constructor.value_mapping import check_enumeration
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode

MULTI_SENTINEL_SAMPLES = 100


def all_grid_keys(grid: GridParams, limit: Optional[int] = None) -> Iterator[GridKey]:
    check_enumeration(grid.grid_size, limit, f"Grid {grid}")
    return grid.iter_keys()


def distinct_representatives(
    grid: GridParams, limit: Optional[int] = None
) -> List[GridKey]:
    check_enumeration(grid.orbit_count, limit, f"Orbits of {grid}")
    return list(grid.iter_representatives())


def duplicate_representatives(
    grid: GridParams, limit: Optional[int] = None
) -> List[GridKey]:
    """Sentinel-free orbit representatives with at least two equal columns."""
    column_types = grid.q**grid.d
    check_enumeration(
        math.comb(column_types + grid.n - 1, grid.n), limit, f"Multisets of {grid}"
    )
    return [
        key
        for key in grid.iter_representatives(distinct=False)
        if not grid.has_distinct_columns(key)
    ]


def sentinel_columns(grid: GridParams):
    return [column for column in grid.columns(True) if grid.sentinel in column]


def single_sentinel_representatives(
    grid: GridParams, limit: Optional[int] = None
) -> List[GridKey]:
    """Every orbit with exactly one column carrying a sentinel entry."""
    plain = grid.columns()
    marked = sentinel_columns(grid)
    count = len(marked) * math.comb(len(plain) + grid.n - 2, grid.n - 1)
    check_enumeration(count, limit, f"Single-sentinel points of {grid}")
    keys = []
    for column in marked:
        for rest in itertools.combinations_with_replacement(plain, grid.n - 1):
            keys.append(grid.canonical((column,) + rest)[0])
    return keys


def multi_sentinel_samples(
    grid: GridParams, seed: int, count: int = MULTI_SENTINEL_SAMPLES
) -> List[GridKey]:
    """Seeded points of the extended grid with two or more sentinel columns."""
    rng = np.random.default_rng(seed)
    plain = grid.columns()
    marked = sentinel_columns(grid)
    keys = []
    for _ in range(count):
        sentinels = int(rng.integers(2, grid.n + 1))
        columns = [marked[int(i)] for i in rng.integers(0, len(marked), sentinels)]
        picks = rng.integers(0, len(plain), grid.n - sentinels)
        columns += [plain[int(i)] for i in picks]
        keys.append(grid.canonical(tuple(columns))[0])
    return keys


def orbit(key: GridKey) -> List[GridKey]:
    """Distinct column permutations of a grid point."""
    return sorted(set(itertools.permutations(key)))


def random_exact_matrix(
    rng: np.random.Generator, d: int, n: int, bound: int = 4, denominator: int = 8
) -> SeqMatrix:
    numerators = rng.integers(-bound * denominator, bound * denominator + 1, (d, n))
    values = np.array(
        [[Fraction(int(value), denominator) for value in row] for row in numerators],
        dtype=object,
    )
    return SeqMatrix(values, Mode.EXACT)


def random_float_matrix(rng: np.random.Generator, d: int, n: int) -> SeqMatrix:
    return SeqMatrix(rng.standard_normal((d, n)), Mode.FLOAT)


def random_matrix(rng: np.random.Generator, d: int, n: int, mode: Mode) -> SeqMatrix:
    if mode is Mode.EXACT:
        return random_exact_matrix(rng, d, n)
    return random_float_matrix(rng, d, n)


def shell_samples(grid: GridParams, seed: int, count: int) -> List[SeqMatrix]:
    """Rational points of [-1, 2)^(d x n) with at least one entry outside [0, 1)."""
    rng = np.random.default_rng(seed)
    scale = 64 * grid.q
    samples = []
    while len(samples) < count:
        numerators = rng.integers(-scale, 2 * scale, (grid.d, grid.n))
        if np.all((numerators >= 0) & (numerators < scale)):
            continue
        values = np.array(
            [[Fraction(int(value), scale) for value in row] for row in numerators],
            dtype=object,
        )
        samples.append(SeqMatrix(values, Mode.EXACT))
    return samples


def unit_box_matrix(
    rng: np.random.Generator, d: int, n: int, mode: Mode, denominator: int = 64
) -> SeqMatrix:
    """Seeded point of [0, 1)^(d x n), rational on a 1/denominator lattice."""
    if mode is Mode.FLOAT:
        return SeqMatrix(rng.random((d, n)), Mode.FLOAT)
    numerators = rng.integers(0, denominator, (d, n))
    values = np.array(
        [[Fraction(int(value), denominator) for value in row] for row in numerators],
        dtype=object,
    )
    return SeqMatrix(values, Mode.EXACT)
