import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, Optional, Tuple

import numpy as np

from constructor.grid import GridKey, GridParams
from seq2seq_univ.exceptions import ConfigError, TargetError
from sublayers.serialization import decode_array
from tensorcore.matrices import SeqMatrix, entrywise_lp_norm
from tensorcore.scalars import Mode, format_delta, parse_delta, to_exact

logger = logging.getLogger(__name__)

TargetFn = Callable[[SeqMatrix], object]


def quantize_key(X: SeqMatrix, grid: GridParams) -> Optional[GridKey]:
    """Grid point whose half-open cube contains X, None outside [0, 1)^(d x n)."""
    columns = []
    for column in X.data.T:
        quantized = []
        for value in column:
            value = to_exact(value)
            if value < 0 or value >= 1:
                return None
            quantized.append(math.floor(value / grid.delta) * grid.delta)
        columns.append(tuple(quantized))
    return tuple(columns)


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """A table L -> A_L on the grid, zero outside [0, 1)^(d x n).

    Equivariant tables store one entry per column-permutation orbit, keyed by
    the representative whose columns are sorted by column id.
    """

    grid: GridParams
    table: Dict[GridKey, SeqMatrix]
    equivariant: bool = False
    approximation_gap: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        grid = self.grid
        for key, value in self.table.items():
            if value.shape != (grid.d, grid.n):
                raise TargetError(f"Target value for {key} has shape {value.shape}.")
            if value.mode is not Mode.EXACT:
                raise TargetError("Target values must be stored exactly.")
            if self.equivariant:
                rep, _ = grid.canonical(key)
                if rep != key:
                    raise TargetError(f"{key} is not an orbit representative.")
                # Equal input columns must receive equal output columns.
                for j in range(grid.n - 1):
                    if key[j] == key[j + 1] and not np.all(
                        value.column(j) == value.column(j + 1)
                    ):
                        raise TargetError(
                            f"Target value for {key} breaks permutation equivariance."
                        )

    @classmethod
    def from_full_table(
        cls, grid: GridParams, table: Dict[GridKey, SeqMatrix], equivariant: bool
    ) -> "PiecewiseConstantFn":
        """Build from a table over (part of) the grid, checking equivariance."""
        if not equivariant:
            return cls(grid, dict(table), False)
        reduced = {}
        for key, value in table.items():
            rep, order = grid.canonical(key)
            reordered = value.permute(order)
            if rep in reduced and reduced[rep] != reordered:
                raise TargetError(
                    f"Target is flagged equivariant but f(LP) != f(L)P at {key}."
                )
            reduced[rep] = reordered
        return cls(grid, reduced, True)

    def __len__(self):
        return len(self.table)

    def value(self, key: GridKey) -> SeqMatrix:
        """A_L for a grid point, zero where the table has no entry."""
        grid = self.grid
        if not self.equivariant:
            stored = self.table.get(key)
            return stored if stored is not None else SeqMatrix.zeros(grid.d, grid.n)
        rep, order = grid.canonical(key)
        stored = self.table.get(rep)
        if stored is None:
            return SeqMatrix.zeros(grid.d, grid.n)
        # rep[k] == key[order[k]], so output column order[k] is stored column k.
        out = np.empty(stored.shape, dtype=object)
        for k, j in enumerate(order):
            out[:, j] = stored.column(k)
        return SeqMatrix(out, Mode.EXACT)

    def __call__(self, X: SeqMatrix) -> SeqMatrix:
        key = quantize_key(X, self.grid)
        if key is None:
            return SeqMatrix.zeros(self.grid.d, self.grid.n, X.mode)
        return self.value(key).to_mode(X.mode)

    def items(self) -> Iterator[Tuple[GridKey, SeqMatrix]]:
        """Every grid point with its value, orbits expanded."""
        for key in self.grid.iter_keys():
            yield key, self.value(key)

    def bound(self, p: float = 2) -> float:
        """Largest entry-wise p-norm of a stored value."""
        return max(
            (float(entrywise_lp_norm(value, p)) for value in self.table.values()),
            default=0.0,
        )

    def to_dict(self) -> dict:
        return {
            "delta": format_delta(self.grid.delta),
            "d": self.grid.d,
            "n": self.grid.n,
            "equivariant": self.equivariant,
            "entries": [
                {
                    "L": _as_strings(self.grid.to_matrix(key)),
                    "A": _as_strings(A),
                }
                for key, A in sorted(self.table.items())
            ],
        }


def _as_strings(matrix: SeqMatrix) -> list:
    return [[str(value) for value in row] for row in matrix.to_list()]


def _evaluate(f: TargetFn, X: SeqMatrix, grid: GridParams) -> SeqMatrix:
    raw = f(X)
    if isinstance(raw, SeqMatrix):
        raw = raw.data
    values = np.asarray(raw, dtype=object)
    if values.shape != (grid.d, grid.n):
        raise TargetError(f"Target returned shape {values.shape} at {X}.")
    for value in values.flat:
        if isinstance(value, float) and not math.isfinite(value):
            raise TargetError(f"Target returned a non-finite value at {X}.")
    return SeqMatrix(values, Mode.EXACT)


def piecewise_constant_approx(
    f: TargetFn,
    grid: GridParams,
    equivariant: bool = False,
    gap_samples: int = 0,
    seed: int = 0,
) -> PiecewiseConstantFn:
    """Tabulate f at the center of every grid cube.

    Args:
        f (TargetFn): target map taking an exact d x n SeqMatrix
        grid (GridParams): the grid to tabulate on
        equivariant (bool): caller asserts f is permutation equivariant; only
            orbit representatives are evaluated
        gap_samples (int): if positive, the sup-norm distance between f and the
            table is measured on this many seeded uniform points
        seed (int): seed for the gap samples

    Raises:
        TargetError: if f returns a malformed or non-finite value

    Returns:
        PiecewiseConstantFn: the tabulated target
    """
    if equivariant:
        keys = grid.iter_representatives(distinct=False)
    else:
        keys = grid.iter_keys()
    table = {key: _evaluate(f, grid.cube_center(key), grid) for key in keys}
    fbar = PiecewiseConstantFn(grid, table, equivariant)
    if gap_samples > 0:
        gap = approximation_gap(f, fbar, gap_samples, seed)
        fbar = PiecewiseConstantFn(grid, table, equivariant, gap)
    logger.info(
        "Tabulated target on %s grid: %s entries, equivariant=%s",
        grid,
        len(table),
        equivariant,
    )
    return fbar


def approximation_gap(
    f: TargetFn, fbar: PiecewiseConstantFn, samples: int, seed: int
) -> float:
    """Sup over seeded uniform samples of the largest entry of |f(X) - fbar(X)|."""
    grid = fbar.grid
    rng = np.random.default_rng(seed)
    gap = 0.0
    for _ in range(samples):
        X = SeqMatrix(rng.uniform(0.0, 1.0, (grid.d, grid.n)), Mode.EXACT)
        exact = _evaluate(f, X, grid)
        gap = max(gap, exact.max_abs_diff(fbar(X)))
    return gap


def _random_columns(rng: np.random.Generator, grid: GridParams, count: int):
    return [
        tuple(Fraction(int(k), grid.q) for k in rng.integers(0, grid.q, grid.d))
        for _ in range(count)
    ]


def random_target(grid: GridParams, seed: int) -> PiecewiseConstantFn:
    """Seeded equivariant table with entries in {0, delta, ..., 1 - delta}."""
    rng = np.random.default_rng(seed)
    table = {}
    for key in grid.iter_representatives(distinct=False):
        distinct = sorted(set(key), key=grid.column_id)
        outputs = dict(zip(distinct, _random_columns(rng, grid, len(distinct))))
        table[key] = SeqMatrix(np.array([outputs[c] for c in key], dtype=object).T)
    return PiecewiseConstantFn(grid, table, True)


def random_positional_target(grid: GridParams, seed: int) -> PiecewiseConstantFn:
    """Seeded table with independent values on every grid point."""
    rng = np.random.default_rng(seed)
    table = {
        key: SeqMatrix(
            np.array(_random_columns(rng, grid, grid.n), dtype=object).T, Mode.EXACT
        )
        for key in grid.iter_keys()
    }
    return PiecewiseConstantFn(grid, table, False)


def identity_target(grid: GridParams) -> PiecewiseConstantFn:
    return piecewise_constant_approx(lambda X: X.data, grid, equivariant=True)


def constant_target(grid: GridParams, value=0) -> PiecewiseConstantFn:
    filled = np.full((grid.d, grid.n), to_exact(value), dtype=object)
    return piecewise_constant_approx(lambda X: filled, grid, equivariant=True)


def sum_pool_target(grid: GridParams) -> PiecewiseConstantFn:
    """Every column replaced by the mean of all columns."""

    def mean_columns(X):
        mean = X.data.sum(axis=1, keepdims=True) / grid.n
        return np.repeat(mean, grid.n, axis=1)

    return piecewise_constant_approx(mean_columns, grid, equivariant=True)


BUILTIN_TARGETS = ("random", "identity", "constant", "sum-pool", "random-positional")


def builtin_target(
    name: str, grid: GridParams, seed: int = 0, value=0
) -> PiecewiseConstantFn:
    if name == "random":
        return random_target(grid, seed)
    if name == "random-positional":
        return random_positional_target(grid, seed)
    if name == "identity":
        return identity_target(grid)
    if name == "constant":
        return constant_target(grid, value)
    if name == "sum-pool":
        return sum_pool_target(grid)
    choices = ", ".join(BUILTIN_TARGETS)
    raise ConfigError(f'Unknown builtin target "{name}", expected one of {choices}.')


def target_from_dict(
    document: dict, grid: Optional[GridParams] = None
) -> PiecewiseConstantFn:
    """Read {delta, d, n, equivariant, entries: [{L, A}]}."""
    try:
        declared = GridParams(
            parse_delta(document["delta"]), int(document["d"]), int(document["n"])
        )
        equivariant = bool(document.get("equivariant", False))
        table = {}
        for entry in document["entries"]:
            L = SeqMatrix(decode_array(entry["L"], Mode.EXACT), Mode.EXACT)
            A = SeqMatrix(decode_array(entry["A"], Mode.EXACT), Mode.EXACT)
            key = declared.to_key(L)
            if quantize_key(L, declared) != key:
                raise TargetError(f"{L} is not a point of the {declared} grid.")
            table[key] = A
    except (KeyError, TypeError, ValueError) as e:
        raise TargetError(f"Malformed target document: {e}") from e
    if grid is not None and grid != declared:
        raise TargetError(f"Target is defined on {declared}, expected {grid}.")
    return PiecewiseConstantFn.from_full_table(declared, table, equivariant)


def load_target(path: str, grid: Optional[GridParams] = None) -> PiecewiseConstantFn:
    try:
        with open(path, encoding="utf-8") as fp:
            document = json.load(fp)
    except (OSError, json.JSONDecodeError) as e:
        raise TargetError(f"Cannot read target file {path}: {e}") from e
    return target_from_dict(document, grid)
