import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence, Tuple

import numpy as np

from seq2seq_univ.exceptions import GridError, ShapeError
from tensorcore.matrices import SeqMatrix, as_array
from tensorcore.scalars import Mode, format_delta, parse_delta

Column = Tuple[Fraction, ...]
GridKey = Tuple[Column, ...]


@dataclass(frozen=True)
class GridParams:
    """The delta-grid on [0, 1]^(d x n) and the constants derived from it.

    u maps a quantized column to its column id, t_l and t_r bound the contextual
    ids of grid points whose columns are pairwise distinct.
    """

    delta: Fraction
    d: int
    n: int

    def __post_init__(self):
        delta = Fraction(self.delta)
        object.__setattr__(self, "delta", delta)
        if delta.numerator != 1 or delta.denominator < 2:
            raise GridError(f"Delta must be 1/q with q >= 2, got {delta}.")
        if self.d < 1:
            raise ShapeError(f"Embedding dimension must be at least 1, got {self.d}.")
        if self.n < 2:
            raise ShapeError(f"Sequence length must be at least 2, got {self.n}.")

    @classmethod
    def parse(cls, delta: str, d: int, n: int) -> "GridParams":
        return cls(parse_delta(delta), int(d), int(n))

    def __str__(self):
        return f"d={self.d} n={self.n} delta={format_delta(self.delta)}"

    def as_dict(self) -> dict:
        return {"delta": format_delta(self.delta), "d": self.d, "n": self.n}

    @property
    def q(self) -> int:
        return self.delta.denominator

    @property
    def inv(self) -> Fraction:
        return 1 / self.delta

    @property
    def half_delta(self) -> Fraction:
        return self.delta / 2

    @property
    def sentinel(self) -> Fraction:
        return -(self.inv ** (self.n * self.d))

    @cached_property
    def u(self) -> np.ndarray:
        return as_array([self.inv**k for k in range(self.d)], Mode.EXACT)

    @property
    def t_l(self) -> Fraction:
        return self.inv ** (2 * self.n * self.d - 1) * (self.inv**self.d - 1)

    @property
    def t_r(self) -> Fraction:
        return self.inv ** ((2 * self.n + 1) * self.d - 1) * (self.inv**self.d - 1)

    @property
    def levels(self) -> Tuple[Fraction, ...]:
        """Grid values 0, delta, ..., 1 - delta."""
        return tuple(self.delta * k for k in range(self.q))

    @property
    def grid_size(self) -> int:
        return self.q ** (self.d * self.n)

    @property
    def distinct_size(self) -> int:
        """Number of grid points whose columns are pairwise distinct."""
        return math.perm(self.q**self.d, self.n)

    @property
    def orbit_count(self) -> int:
        return math.comb(self.q**self.d, self.n)

    @property
    def mismatch_fraction(self) -> Fraction:
        return 1 - Fraction(self.distinct_size, self.grid_size)

    def column_id(self, column: Sequence) -> Fraction:
        return sum((u * value for u, value in zip(self.u, column)), Fraction(0))

    def columns(self, with_sentinel: bool = False) -> Tuple[Column, ...]:
        """All quantized columns ordered by column id."""
        values = self.levels + ((self.sentinel,) if with_sentinel else ())
        columns = itertools.product(values, repeat=self.d)
        return tuple(sorted(columns, key=self.column_id))

    def to_matrix(self, key: GridKey) -> SeqMatrix:
        return SeqMatrix(np.array(key, dtype=object).T, Mode.EXACT)

    def to_key(self, L: SeqMatrix) -> GridKey:
        return tuple(tuple(Fraction(value) for value in column) for column in L.data.T)

    def canonical(self, key: GridKey) -> Tuple[GridKey, Tuple[int, ...]]:
        """Sort columns by id.

        Returns the representative and the order with rep[k] == key[order[k]].
        """
        order = tuple(sorted(range(len(key)), key=lambda j: self.column_id(key[j])))
        return tuple(key[j] for j in order), order

    def has_distinct_columns(self, key: GridKey) -> bool:
        return len(set(key)) == len(key)

    def iter_keys(self) -> Iterator[GridKey]:
        """Every grid point of G_delta, in lexicographic column order."""
        return itertools.product(self.columns(), repeat=self.n)

    def iter_representatives(
        self, distinct: bool = True, with_sentinel: bool = False
    ) -> Iterator[GridKey]:
        """One grid point per column-permutation orbit, columns sorted by id."""
        columns = self.columns(with_sentinel)
        if distinct:
            return itertools.combinations(columns, self.n)
        return itertools.combinations_with_replacement(columns, self.n)

    def cube_center(self, key: GridKey) -> SeqMatrix:
        return SeqMatrix(np.array(key, dtype=object).T + self.half_delta, Mode.EXACT)

    def cube_samples(self, key: GridKey) -> Tuple[SeqMatrix, ...]:
        """Center, near-low corner and near-high corner of the cube of a point."""
        base = np.array(key, dtype=object).T
        offset = self.delta / 8
        return (
            SeqMatrix(base + self.half_delta, Mode.EXACT),
            SeqMatrix(base + offset, Mode.EXACT),
            SeqMatrix(base + self.delta - offset, Mode.EXACT),
        )


def positional_encoding(d: int, n: int) -> np.ndarray:
    """E with column j equal to j times the all-ones vector (0-based)."""
    return as_array(np.tile(np.arange(n), (d, 1)), Mode.EXACT)
