import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional

import numpy as np

from seq2seq_univ.exceptions import ModeError, ShapeError
from sublayers.layers import (
    AttnSublayer,
    BProjSublayer,
    FFSublayer,
    Network,
    Normalizer,
    SepConvSublayer,
    Sublayer,
)
from tensorcore.matrices import SeqMatrix, column_hardmax, column_softmax
from tensorcore.scalars import Mode

logger = logging.getLogger(__name__)


def _check(X: SeqMatrix, layer: Sublayer):
    if layer.d != X.d:
        raise ShapeError(f"Sublayer expects d={layer.d}, input has d={X.d}.")
    if layer.mode is not X.mode:
        raise ModeError(f"{X.mode.value} input given to a {layer.mode.value} sublayer.")


def attention_weights(
    scores: np.ndarray, layer: AttnSublayer, tolerance: Optional[float] = None
) -> np.ndarray:
    """Column-normalize an n x n score matrix the way the sublayer asks for."""
    if layer.normalizer is Normalizer.HARDMAX:
        return column_hardmax(scores, tolerance)
    if layer.normalizer is Normalizer.SOFTMAX:
        return column_softmax(scores, layer.lam)
    n = scores.shape[0]
    if scores.dtype == object:
        return np.full(scores.shape, Fraction(1, n), dtype=object)
    return np.full(scores.shape, 1.0 / n)


def head_scores(X: np.ndarray, head) -> np.ndarray:
    keys = head.W_K @ X
    queries = head.W_Q @ X - head.b_Q.reshape(-1, 1)
    return keys.T @ queries


def attn_forward(
    X: SeqMatrix, layer: AttnSublayer, tolerance: Optional[float] = None
) -> SeqMatrix:
    """X plus the sum over heads of W_O W_V X N[(W_K X)^T (W_Q X - b_Q 1^T)]."""
    _check(X, layer)
    if layer.normalizer is Normalizer.SOFTMAX and X.mode is Mode.EXACT:
        raise ModeError("Softmax attention cannot run in Exact mode.")
    data = X.data
    out = data.copy()
    for head in layer.heads:
        weights = attention_weights(head_scores(data, head), layer, tolerance)
        out = out + head.W_O @ (head.W_V @ data) @ weights
    return SeqMatrix(out, X.mode)


def ff_forward(X: SeqMatrix, layer: FFSublayer) -> SeqMatrix:
    """X + W2 act(W1 X + b1 1^T) + b2 1^T, evaluated token by token."""
    _check(X, layer)
    data = X.data
    hidden = layer.activation.evaluate(layer.W1 @ data + layer.b1.reshape(-1, 1))
    out = data + layer.W2 @ hidden + layer.b2.reshape(-1, 1)
    return SeqMatrix(out, X.mode)


def bproj_forward(X: SeqMatrix, layer: BProjSublayer) -> SeqMatrix:
    _check(X, layer)
    if layer.n != X.n:
        raise ShapeError(f"W_P is built for n={layer.n}, input has n={X.n}.")
    data = X.data
    return SeqMatrix(data + layer.W_O @ data @ layer.W_P, X.mode)


def depthwise_convolve(data: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """Correlate row i of data with row i of filters, zero padded to length n.

    Uses the Conv1d convention with padding k // 2, so output position t reads
    inputs t - k // 2 ... t - k // 2 + k - 1.
    """
    d, n = data.shape
    k = filters.shape[1]
    offset = k // 2
    padded = np.zeros((d, n + k - 1), dtype=data.dtype)
    if data.dtype == object:
        padded[:] = Fraction(0)
    padded[:, offset : offset + n] = data
    out = np.zeros((d, n), dtype=data.dtype)
    for t in range(n):
        out[:, t] = np.sum(filters * padded[:, t : t + k], axis=1)
    return out


def sepconv_forward(X: SeqMatrix, layer: SepConvSublayer) -> SeqMatrix:
    _check(X, layer)
    if layer.k > X.n:
        raise ShapeError(f"Filter length {layer.k} exceeds sequence length {X.n}.")
    data = X.data
    return SeqMatrix(data + layer.W_O @ depthwise_convolve(data, layer.W_C), X.mode)


FORWARDS = {
    AttnSublayer: attn_forward,
    FFSublayer: ff_forward,
    BProjSublayer: bproj_forward,
    SepConvSublayer: sepconv_forward,
}


def sublayer_forward(X: SeqMatrix, sublayer: Sublayer) -> SeqMatrix:
    return FORWARDS[type(sublayer)](X, sublayer)


def forward_stack(X: SeqMatrix, sublayers: Iterable[Sublayer]) -> SeqMatrix:
    for sublayer in sublayers:
        X = sublayer_forward(X, sublayer)
    return X


def network_forward(X: SeqMatrix, network: Network) -> SeqMatrix:
    if network.positional_encoding is not None:
        if network.positional_encoding.shape != X.shape:
            raise ShapeError(
                f"E has shape {network.positional_encoding.shape}, input {X.shape}."
            )
        if network.mode is not X.mode:
            raise ModeError(
                f"{X.mode.value} input given to a {network.mode.value} network."
            )
        X = SeqMatrix(X.data + network.positional_encoding, X.mode)
    return forward_stack(X, network.sublayers)


@dataclass(frozen=True)
class NetworkSignature:
    """Largest head count h, head size m and feed-forward width r of a network."""

    heads: int
    head_size: int
    ff_width: int
    counts: Dict[str, int]
    parameters: int

    def as_tuple(self):
        return (self.heads, self.head_size, self.ff_width)


KIND_NAMES = {
    AttnSublayer: "attention",
    FFSublayer: "feed_forward",
    BProjSublayer: "bproj",
    SepConvSublayer: "sepconv",
}


def _parameter_count(sublayer: Sublayer) -> int:
    if isinstance(sublayer, AttnSublayer):
        return sum(
            array.size
            for head in sublayer.heads
            for array in (head.W_O, head.W_V, head.W_K, head.W_Q, head.b_Q)
        )
    if isinstance(sublayer, FFSublayer):
        return sum(
            array.size
            for array in (sublayer.W1, sublayer.b1, sublayer.W2, sublayer.b2)
        )
    if isinstance(sublayer, BProjSublayer):
        return sublayer.W_O.size + sublayer.W_P.size
    return sublayer.W_O.size + sublayer.W_C.size


def network_signature(network: Network) -> NetworkSignature:
    heads, head_size, ff_width = 0, 0, 0
    counts = Counter()
    for sublayer in network.sublayers:
        counts[KIND_NAMES[type(sublayer)]] += 1
        if isinstance(sublayer, AttnSublayer):
            heads = max(heads, len(sublayer.heads))
            head_size = max(head_size, max(head.m for head in sublayer.heads))
        elif isinstance(sublayer, FFSublayer):
            ff_width = max(ff_width, sublayer.r)
    return NetworkSignature(
        heads=heads,
        head_size=head_size,
        ff_width=ff_width,
        counts=dict(sorted(counts.items())),
        parameters=sum(_parameter_count(sublayer) for sublayer in network.sublayers),
    )
