from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from seq2seq_univ.exceptions import ActivationError, ModeError, ShapeError
from tensorcore.matrices import as_array, cast, frozen, mode_of
from tensorcore.scalars import Mode, Number, to_exact


def _coerce(mode: Optional[Mode], *arrays) -> List[np.ndarray]:
    """Convert parameters to frozen arrays sharing one mode."""
    converted = [as_array(array, mode) for array in arrays]
    if mode is None and len({mode_of(array) for array in converted}) > 1:
        # Mixed inputs are promoted to exact, which is lossless.
        converted = [as_array(array, Mode.EXACT) for array in converted]
    return [frozen(array) for array in converted]


def _convert_scalar(value: Number, mode: Mode) -> Number:
    return to_exact(value) if mode is Mode.EXACT else float(value)


class Normalizer(Enum):
    HARDMAX: str = "hardmax"
    SOFTMAX: str = "softmax"
    AVERAGE: str = "average"


@dataclass(frozen=True, eq=False)
class AttentionHead:
    """One attention head.

    W_O is d x m, W_V, W_K and W_Q are m x d and b_Q is a length m bias that is
    subtracted from the query projections before the score is formed.
    """

    W_O: np.ndarray
    W_V: np.ndarray
    W_K: np.ndarray
    W_Q: np.ndarray
    b_Q: np.ndarray
    mode: Optional[Mode] = None

    def __post_init__(self):
        arrays = _coerce(self.mode, self.W_O, self.W_V, self.W_K, self.W_Q, self.b_Q)
        for name, array in zip(("W_O", "W_V", "W_K", "W_Q", "b_Q"), arrays):
            object.__setattr__(self, name, array)
        object.__setattr__(self, "mode", mode_of(self.W_O))

        if self.W_O.ndim != 2 or self.W_O.shape[1] < 1:
            raise ShapeError(f"W_O must be d x m with m >= 1, got {self.W_O.shape}.")
        d, m = self.W_O.shape
        for name in ("W_V", "W_K", "W_Q"):
            if getattr(self, name).shape != (m, d):
                raise ShapeError(
                    f"{name} must be {m} x {d}, got {getattr(self, name).shape}."
                )
        if self.b_Q.shape != (m,):
            raise ShapeError(f"b_Q must have length {m}, got {self.b_Q.shape}.")

    @property
    def d(self) -> int:
        return self.W_O.shape[0]

    @property
    def m(self) -> int:
        return self.W_O.shape[1]

    def to_mode(self, mode: Mode) -> "AttentionHead":
        return AttentionHead(
            cast(self.W_O, mode),
            cast(self.W_V, mode),
            cast(self.W_K, mode),
            cast(self.W_Q, mode),
            cast(self.b_Q, mode),
            mode,
        )


@dataclass(frozen=True, eq=False)
class AttnSublayer:
    heads: Tuple[AttentionHead, ...]
    normalizer: Normalizer = Normalizer.HARDMAX
    lam: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(self.heads))
        if not self.heads:
            raise ShapeError("An attention sublayer needs at least one head.")
        if len({head.d for head in self.heads}) != 1:
            raise ShapeError("All heads of a sublayer must share d.")
        if len({head.mode for head in self.heads}) != 1:
            raise ModeError("All heads of a sublayer must share a mode.")
        if self.normalizer is Normalizer.SOFTMAX:
            if self.lam is None or not self.lam > 0:
                raise ValueError("Softmax attention needs a positive temperature.")
        elif self.lam is not None:
            raise ValueError(f"{self.normalizer.value} attention takes no temperature.")

    @property
    def d(self) -> int:
        return self.heads[0].d

    @property
    def mode(self) -> Mode:
        return self.heads[0].mode

    def to_mode(self, mode: Mode) -> "AttnSublayer":
        return AttnSublayer(
            tuple(head.to_mode(mode) for head in self.heads), self.normalizer, self.lam
        )


@dataclass(frozen=True)
class Piece:
    slope: Number
    intercept: Number

    def at(self, t):
        return self.slope * t + self.intercept


@dataclass(frozen=True)
class PiecewiseLinear3:
    """Activation with up to three linear pieces, at least one of them constant.

    Pieces apply on t < c1, c1 <= t < c2 and t >= c2. A single piece is written
    as three identical pieces.
    """

    c1: Number
    c2: Number
    pieces: Tuple[Piece, Piece, Piece]

    def __post_init__(self):
        pieces = tuple(
            piece if isinstance(piece, Piece) else Piece(*piece)
            for piece in self.pieces
        )
        object.__setattr__(self, "pieces", pieces)
        if len(pieces) != 3:
            raise ActivationError(f"Expected three pieces, got {len(pieces)}.")
        if self.c1 > self.c2:
            raise ActivationError(f"Breakpoints out of order: {self.c1} > {self.c2}.")
        if all(piece.slope != 0 for piece in pieces):
            raise ActivationError("At least one piece must be constant.")

    @classmethod
    def constant(cls, value: Number) -> "PiecewiseLinear3":
        piece = Piece(0, value)
        return cls(0, 0, (piece, piece, piece))

    @property
    def left(self) -> Piece:
        return self.pieces[0]

    @property
    def middle(self) -> Piece:
        return self.pieces[1]

    @property
    def right(self) -> Piece:
        return self.pieces[2]

    def __call__(self, t):
        if t < self.c1:
            return self.left.at(t)
        if t < self.c2:
            return self.middle.at(t)
        return self.right.at(t)

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        return np.where(
            values < self.c1,
            self.left.at(values),
            np.where(values < self.c2, self.middle.at(values), self.right.at(values)),
        )

    def to_mode(self, mode: Mode) -> "PiecewiseLinear3":
        return PiecewiseLinear3(
            _convert_scalar(self.c1, mode),
            _convert_scalar(self.c2, mode),
            tuple(
                Piece(
                    _convert_scalar(piece.slope, mode),
                    _convert_scalar(piece.intercept, mode),
                )
                for piece in self.pieces
            ),
        )


class ReLU:
    def evaluate(self, values: np.ndarray) -> np.ndarray:
        return np.where(values > 0, values, values * 0)

    def to_mode(self, mode: Mode) -> "ReLU":
        return self

    def __eq__(self, other):
        return isinstance(other, ReLU)

    def __hash__(self):
        return hash(ReLU)

    def __repr__(self):
        return "ReLU()"


RELU = ReLU()

Activation = Union[ReLU, PiecewiseLinear3]


@dataclass(frozen=True, eq=False)
class FFSublayer:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    activation: Activation = RELU
    mode: Optional[Mode] = None

    def __post_init__(self):
        arrays = _coerce(self.mode, self.W1, self.b1, self.W2, self.b2)
        for name, array in zip(("W1", "b1", "W2", "b2"), arrays):
            object.__setattr__(self, name, array)
        object.__setattr__(self, "mode", mode_of(self.W1))
        object.__setattr__(self, "activation", self.activation.to_mode(self.mode))

        if self.W1.ndim != 2 or self.W1.shape[0] < 1:
            raise ShapeError(f"W1 must be r x d with r >= 1, got {self.W1.shape}.")
        r, d = self.W1.shape
        if self.b1.shape != (r,):
            raise ShapeError(f"b1 must have length {r}, got {self.b1.shape}.")
        if self.W2.shape != (d, r):
            raise ShapeError(f"W2 must be {d} x {r}, got {self.W2.shape}.")
        if self.b2.shape != (d,):
            raise ShapeError(f"b2 must have length {d}, got {self.b2.shape}.")

    @property
    def d(self) -> int:
        return self.W1.shape[1]

    @property
    def r(self) -> int:
        return self.W1.shape[0]

    def to_mode(self, mode: Mode) -> "FFSublayer":
        return FFSublayer(
            cast(self.W1, mode),
            cast(self.b1, mode),
            cast(self.W2, mode),
            cast(self.b2, mode),
            self.activation.to_mode(mode),
            mode,
        )


@dataclass(frozen=True, eq=False)
class BProjSublayer:
    """X + W_O X W_P, a token mixer whose W_P depends on the sequence length."""

    W_O: np.ndarray
    W_P: np.ndarray
    mode: Optional[Mode] = None

    def __post_init__(self):
        W_O, W_P = _coerce(self.mode, self.W_O, self.W_P)
        object.__setattr__(self, "W_O", W_O)
        object.__setattr__(self, "W_P", W_P)
        object.__setattr__(self, "mode", mode_of(W_O))
        if W_O.ndim != 2 or W_O.shape[0] != W_O.shape[1]:
            raise ShapeError(f"W_O must be square, got {W_O.shape}.")
        if W_P.ndim != 2 or W_P.shape[0] != W_P.shape[1]:
            raise ShapeError(f"W_P must be square, got {W_P.shape}.")

    @property
    def d(self) -> int:
        return self.W_O.shape[0]

    @property
    def n(self) -> int:
        return self.W_P.shape[0]

    def to_mode(self, mode: Mode) -> "BProjSublayer":
        return BProjSublayer(cast(self.W_O, mode), cast(self.W_P, mode), mode)


@dataclass(frozen=True, eq=False)
class SepConvSublayer:
    """X + W_O (X * W_C) with one length k filter per embedding row."""

    W_O: np.ndarray
    W_C: np.ndarray
    mode: Optional[Mode] = None

    def __post_init__(self):
        W_O, W_C = _coerce(self.mode, self.W_O, self.W_C)
        object.__setattr__(self, "W_O", W_O)
        object.__setattr__(self, "W_C", W_C)
        object.__setattr__(self, "mode", mode_of(W_O))
        if W_O.ndim != 2 or W_O.shape[0] != W_O.shape[1]:
            raise ShapeError(f"W_O must be square, got {W_O.shape}.")
        if W_C.ndim != 2 or W_C.shape[0] != W_O.shape[0] or W_C.shape[1] < 1:
            raise ShapeError(
                f"W_C must be {W_O.shape[0]} x k with k >= 1, got {W_C.shape}."
            )

    @property
    def d(self) -> int:
        return self.W_O.shape[0]

    @property
    def k(self) -> int:
        return self.W_C.shape[1]

    def to_mode(self, mode: Mode) -> "SepConvSublayer":
        return SepConvSublayer(cast(self.W_O, mode), cast(self.W_C, mode), mode)


Sublayer = Union[AttnSublayer, FFSublayer, BProjSublayer, SepConvSublayer]
TOKEN_MIXERS = (AttnSublayer, BProjSublayer, SepConvSublayer)


@dataclass(frozen=True, eq=False)
class Network:
    """Residual sublayers applied in order, after adding E to the input once."""

    sublayers: Tuple[Sublayer, ...] = ()
    positional_encoding: Optional[np.ndarray] = None
    d: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "sublayers", tuple(self.sublayers))
        dims = {sublayer.d for sublayer in self.sublayers}
        if self.d is not None:
            dims.add(self.d)
        if self.positional_encoding is not None:
            encoding = as_array(self.positional_encoding, self.mode)
            if encoding.ndim != 2:
                raise ShapeError(f"E must be d x n, got shape {encoding.shape}.")
            object.__setattr__(self, "positional_encoding", frozen(encoding))
            dims.add(encoding.shape[0])
        if len(dims) > 1:
            raise ShapeError(f"Sublayers disagree on d: {sorted(dims)}.")
        object.__setattr__(self, "d", dims.pop() if dims else None)
        if len({sublayer.mode for sublayer in self.sublayers}) > 1:
            raise ModeError("All sublayers of a network must share a mode.")

    @property
    def mode(self) -> Mode:
        if self.sublayers:
            return self.sublayers[0].mode
        return Mode.EXACT

    def __len__(self):
        return len(self.sublayers)

    def __add__(self, other: "Network") -> "Network":
        if other.positional_encoding is not None:
            raise ShapeError("Only the first network of a chain may add E.")
        return Network(
            self.sublayers + other.sublayers, self.positional_encoding, self.d
        )

    def to_mode(self, mode: Mode) -> "Network":
        encoding = self.positional_encoding
        if encoding is not None:
            encoding = cast(encoding, mode)
        return Network(
            tuple(sublayer.to_mode(mode) for sublayer in self.sublayers),
            encoding,
            self.d,
        )


def identity_attention(d: int, mode: Mode = Mode.EXACT) -> AttnSublayer:
    zeros = np.zeros((d, 1), dtype=np.int64)
    head = AttentionHead(zeros, zeros.T, zeros.T, zeros.T, np.zeros(1), mode)
    return AttnSublayer((head,))


def identity_feed_forward(d: int, mode: Mode = Mode.EXACT) -> FFSublayer:
    zeros = np.zeros((1, d), dtype=np.int64)
    return FFSublayer(zeros, np.zeros(1), zeros.T, np.zeros(d), RELU, mode)


def group_into_blocks(network: Network) -> List[Tuple[Sublayer, FFSublayer]]:
    """Pair every token mixing sublayer with the feed-forward sublayer after it.

    Gaps are filled with sublayers whose weights are all zero, which the residual
    connection turns into the identity.
    """
    blocks = []
    pending = None
    for sublayer in network.sublayers:
        if isinstance(sublayer, TOKEN_MIXERS):
            if pending is not None:
                blocks.append((pending, identity_feed_forward(network.d, network.mode)))
            pending = sublayer
        else:
            mixer = pending or identity_attention(network.d, network.mode)
            blocks.append((mixer, sublayer))
            pending = None
    if pending is not None:
        blocks.append((pending, identity_feed_forward(network.d, network.mode)))
    return blocks
