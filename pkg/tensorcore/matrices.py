from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from django.conf import settings

from seq2seq_univ.exceptions import ModeError, ShapeError
from tensorcore.scalars import Mode, Number, to_exact

ArrayLike = Union[np.ndarray, Sequence]

_to_exact = np.frompyfunc(to_exact, 1, 1)
_to_float = np.frompyfunc(float, 1, 1)


def mode_of(array: np.ndarray) -> Mode:
    return Mode.EXACT if array.dtype == object else Mode.FLOAT


def as_array(values: ArrayLike, mode: Optional[Mode] = None) -> np.ndarray:
    """Build a dense array in the requested mode.

    Without an explicit mode, object arrays and Fraction entries stay exact and
    everything else becomes float64.
    """
    if isinstance(values, SeqMatrix):
        values = values.data
    array = np.asarray(values)
    if mode is None:
        mode = Mode.EXACT if array.dtype == object else Mode.FLOAT
    if mode is Mode.EXACT:
        if array.size == 0:
            return np.empty(array.shape, dtype=object)
        return np.asarray(_to_exact(array), dtype=object)
    if array.dtype == object:
        return np.asarray(_to_float(array), dtype=np.float64)
    return np.array(array, dtype=np.float64)


def frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def cast(array: np.ndarray, mode: Mode) -> np.ndarray:
    if mode_of(array) is mode:
        return array
    return frozen(as_array(array, mode))


def require_same_mode(*arrays: np.ndarray) -> Mode:
    modes = {mode_of(array) for array in arrays}
    if len(modes) != 1:
        raise ModeError("Cannot mix Exact and Float operands.")
    return modes.pop()


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    require_same_mode(a, b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"Cannot multiply {a.shape} by {b.shape}.")
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    require_same_mode(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"Cannot add {a.shape} and {b.shape}.")
    return a + b


def scale(a: np.ndarray, factor: Number) -> np.ndarray:
    if mode_of(a) is Mode.EXACT:
        return a * to_exact(factor)
    return a * float(factor)


def permutation_matrix(perm: Sequence[int], mode: Mode = Mode.EXACT) -> np.ndarray:
    """P with (XP)[:, j] == X[:, perm[j]]."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ShapeError(f"{list(perm)} is not a permutation of range({n}).")
    matrix = np.zeros((n, n), dtype=np.int64)
    for j, source in enumerate(perm):
        matrix[source, j] = 1
    return as_array(matrix, mode)


class SeqMatrix:
    """A d x n matrix whose columns are token embeddings.

    Entries are immutable. In Exact mode they are fractions.Fraction held in an
    object array, in Float mode a float64 array.
    """

    __slots__ = ("_data",)

    def __init__(self, values: ArrayLike, mode: Optional[Mode] = None):
        data = as_array(values, mode)
        if data.ndim != 2:
            raise ShapeError(f"Expected a d x n matrix, got shape {data.shape}.")
        d, n = data.shape
        if d < 1:
            raise ShapeError("A sequence matrix needs at least one row.")
        if n < 2:
            raise ShapeError(f"Sequence length must be at least 2, got {n}.")
        self._data = frozen(data)

    @classmethod
    def exact(cls, values: ArrayLike) -> "SeqMatrix":
        return cls(values, Mode.EXACT)

    @classmethod
    def zeros(cls, d: int, n: int, mode: Mode = Mode.EXACT) -> "SeqMatrix":
        return cls(np.zeros((d, n), dtype=np.int64), mode)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def mode(self) -> Mode:
        return mode_of(self._data)

    @property
    def d(self) -> int:
        return self._data.shape[0]

    @property
    def n(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self):
        return self._data.shape

    def row(self, i: int) -> np.ndarray:
        return self._data[i, :]

    def column(self, j: int) -> np.ndarray:
        return self._data[:, j]

    def to_mode(self, mode: Mode) -> "SeqMatrix":
        if mode is self.mode:
            return self
        return SeqMatrix(self._data, mode)

    def permute(self, perm: Sequence[int]) -> "SeqMatrix":
        """Return XP for the permutation sending column perm[j] to position j."""
        return SeqMatrix(self._data[:, list(perm)], self.mode)

    def left_multiply(self, weights: np.ndarray) -> np.ndarray:
        return matmul(weights, self._data)

    def __add__(self, other):
        other_data = other.data if isinstance(other, SeqMatrix) else other
        return SeqMatrix(add(self._data, other_data), self.mode)

    def scale(self, factor: Number) -> "SeqMatrix":
        return SeqMatrix(scale(self._data, factor), self.mode)

    def __eq__(self, other):
        if not isinstance(other, SeqMatrix):
            return NotImplemented
        return (
            self.mode is other.mode
            and self.shape == other.shape
            and bool(np.all(self._data == other._data))
        )

    def __hash__(self):
        return hash(self.key())

    def key(self) -> tuple:
        return tuple(tuple(row) for row in self._data.tolist())

    def max_abs_diff(self, other: "SeqMatrix") -> float:
        if self.shape != other.shape:
            raise ShapeError(f"Cannot compare {self.shape} and {other.shape}.")
        left = self.to_mode(Mode.FLOAT).data
        right = other.to_mode(Mode.FLOAT).data
        return float(np.max(np.abs(left - right)))

    def allclose(self, other: "SeqMatrix", atol: float = 1e-9) -> bool:
        if self.mode is Mode.EXACT and other.mode is Mode.EXACT:
            return self == other
        return self.max_abs_diff(other) <= atol

    def to_list(self) -> list:
        return self._data.tolist()

    def __repr__(self):
        rows = "; ".join(
            " ".join(str(value) for value in row) for row in self.to_list()
        )
        return f"SeqMatrix[{self.mode.value}]({rows})"


def _column_softmax(scores: np.ndarray, lam: float) -> np.ndarray:
    scaled = lam * scores
    scaled = scaled - scaled.max(axis=0, keepdims=True)
    weights = np.exp(scaled)
    return weights / weights.sum(axis=0, keepdims=True)


def _column_hardmax(scores: np.ndarray, tolerance: float) -> np.ndarray:
    if mode_of(scores) is Mode.EXACT:
        out = np.full(scores.shape, Fraction(0), dtype=object)
        for j in range(scores.shape[1]):
            column = scores[:, j]
            top = max(column)
            winners = [i for i, value in enumerate(column) if value == top]
            for i in winners:
                out[i, j] = Fraction(1, len(winners))
        return out
    top = scores.max(axis=0, keepdims=True)
    bound = tolerance * np.maximum(1.0, np.maximum(np.abs(scores), np.abs(top)))
    winners = (np.abs(scores - top) <= bound).astype(np.float64)
    return winners / winners.sum(axis=0, keepdims=True)


def column_softmax(scores: np.ndarray, lam: float) -> np.ndarray:
    if mode_of(scores) is Mode.EXACT:
        raise ModeError("Softmax is only available in Float mode.")
    if not lam > 0:
        raise ValueError(f"Softmax temperature must be positive, got {lam}.")
    return _column_softmax(scores, float(lam))


def column_hardmax(scores: np.ndarray, tolerance: Optional[float] = None) -> np.ndarray:
    if tolerance is None:
        tolerance = settings.SEQ2SEQ_UNIV_FLOAT_TIE_TOLERANCE
    return _column_hardmax(scores, tolerance)


def softmax_columns(matrix: SeqMatrix, lam: float) -> SeqMatrix:
    """Softmax of lam * M taken independently over each column."""
    return SeqMatrix(column_softmax(matrix.data, lam), Mode.FLOAT)


def hardmax_columns(matrix: SeqMatrix, tolerance: Optional[float] = None) -> SeqMatrix:
    """Per column, 1/k on each of the k maximal entries and 0 elsewhere."""
    return SeqMatrix(column_hardmax(matrix.data, tolerance), matrix.mode)


def entrywise_lp_norm(matrix: Union[SeqMatrix, np.ndarray], p: float = 2) -> Number:
    if p < 1:
        raise ValueError(f"Entry-wise norm needs p >= 1, got {p}.")
    data = matrix.data if isinstance(matrix, SeqMatrix) else matrix
    if mode_of(data) is Mode.EXACT and float(p).is_integer():
        total = sum((abs(value) ** int(p) for value in data.flat), Fraction(0))
        if p == 1:
            return total
        return float(total) ** (1.0 / p)
    values = np.abs(as_array(data, Mode.FLOAT))
    return float(np.sum(values**p) ** (1.0 / p))
