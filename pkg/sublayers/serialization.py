"""JSON documents for networks.

Exact scalars are written as {"num": "<integer>", "base_delta": "1/Q"} where Q is
the least common denominator of every exact value in the document, so the value
is num / Q. Float scalars are plain JSON numbers.
"""
import json
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from seq2seq_univ import __version__
from seq2seq_univ.exceptions import ConfigError, Seq2SeqUnivError
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
    Sublayer,
)
from tensorcore.matrices import as_array
from tensorcore.scalars import Mode, Number, common_denominator, to_exact

NETWORK_FORMAT = "seq2seq-univ/network"
NETWORK_FORMAT_VERSION = 1


class ScalarCodec:
    """Encodes scalars against one shared base 1/Q."""

    def __init__(self, mode: Mode, values: Iterable[Number] = ()):
        self.mode = mode
        self.base = common_denominator(values) if mode is Mode.EXACT else 1

    @property
    def base_delta(self) -> str:
        return f"1/{self.base}"

    def encode(self, value: Number):
        if self.mode is Mode.FLOAT:
            return float(value)
        scaled = to_exact(value) * self.base
        if scaled.denominator != 1:
            raise Seq2SeqUnivError(f"{value} is not a multiple of {self.base_delta}.")
        return {"num": str(scaled.numerator), "base_delta": self.base_delta}

    def encode_array(self, array: np.ndarray) -> list:
        if array.ndim == 1:
            return [self.encode(value) for value in array]
        return [self.encode_array(row) for row in array]


def decode_scalar(raw) -> Number:
    """Read a scalar written as a number, a "p/q" string or a {num, base_delta} pair."""
    try:
        if isinstance(raw, dict):
            base = Fraction(raw["base_delta"])
            return int(raw["num"]) * base
        if isinstance(raw, str):
            return Fraction(raw)
        if isinstance(raw, bool) or raw is None:
            raise TypeError(raw)
        if isinstance(raw, int):
            return Fraction(raw)
        return float(raw)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Cannot read scalar {raw!r}.") from e


def decode_array(raw, mode: Mode) -> np.ndarray:
    def walk(item):
        if isinstance(item, list):
            return [walk(entry) for entry in item]
        return decode_scalar(item)

    values = walk(raw)
    array = np.empty(np.shape(values), dtype=object)
    if array.ndim == 1:
        array[:] = values
    elif array.size:
        for i, row in enumerate(values):
            array[i, :] = row
    return as_array(array, mode)


def _sublayer_arrays(sublayer: Sublayer) -> list:
    if isinstance(sublayer, AttnSublayer):
        return [
            array
            for head in sublayer.heads
            for array in (head.W_O, head.W_V, head.W_K, head.W_Q, head.b_Q)
        ]
    if isinstance(sublayer, FFSublayer):
        arrays = [sublayer.W1, sublayer.b1, sublayer.W2, sublayer.b2]
        activation = sublayer.activation
        if isinstance(activation, PiecewiseLinear3):
            arrays.append(
                np.array(
                    [activation.c1, activation.c2]
                    + [piece.slope for piece in activation.pieces]
                    + [piece.intercept for piece in activation.pieces],
                    dtype=object,
                )
            )
        return arrays
    if isinstance(sublayer, BProjSublayer):
        return [sublayer.W_O, sublayer.W_P]
    return [sublayer.W_O, sublayer.W_C]


def _encode_sublayer(sublayer: Sublayer, codec: ScalarCodec) -> dict:
    if isinstance(sublayer, AttnSublayer):
        return {
            "kind": "attention",
            "normalizer": sublayer.normalizer.value,
            "lambda": sublayer.lam,
            "heads": [
                {
                    "W_O": codec.encode_array(head.W_O),
                    "W_V": codec.encode_array(head.W_V),
                    "W_K": codec.encode_array(head.W_K),
                    "W_Q": codec.encode_array(head.W_Q),
                    "b_Q": codec.encode_array(head.b_Q),
                }
                for head in sublayer.heads
            ],
        }
    if isinstance(sublayer, FFSublayer):
        activation = sublayer.activation
        if isinstance(activation, PiecewiseLinear3):
            encoded_activation = {
                "kind": "piecewise_linear3",
                "breakpoints": [
                    codec.encode(activation.c1),
                    codec.encode(activation.c2),
                ],
                "pieces": [
                    [codec.encode(piece.slope), codec.encode(piece.intercept)]
                    for piece in activation.pieces
                ],
            }
        else:
            encoded_activation = {"kind": "relu"}
        return {
            "kind": "feed_forward",
            "activation": encoded_activation,
            "W1": codec.encode_array(sublayer.W1),
            "b1": codec.encode_array(sublayer.b1),
            "W2": codec.encode_array(sublayer.W2),
            "b2": codec.encode_array(sublayer.b2),
        }
    if isinstance(sublayer, BProjSublayer):
        return {
            "kind": "bproj",
            "W_O": codec.encode_array(sublayer.W_O),
            "W_P": codec.encode_array(sublayer.W_P),
        }
    return {
        "kind": "sepconv",
        "padding": "zero",
        "W_O": codec.encode_array(sublayer.W_O),
        "W_C": codec.encode_array(sublayer.W_C),
    }


def network_to_dict(network: Network) -> dict:
    mode = network.mode
    values = []
    if mode is Mode.EXACT:
        for sublayer in network.sublayers:
            for array in _sublayer_arrays(sublayer):
                values.extend(array.flat)
        if network.positional_encoding is not None:
            values.extend(network.positional_encoding.flat)
    codec = ScalarCodec(mode, values)
    encoding = network.positional_encoding
    return {
        "format": NETWORK_FORMAT,
        "version": NETWORK_FORMAT_VERSION,
        "generator": f"seq2seq-univ {__version__}",
        "mode": mode.value,
        "base_delta": codec.base_delta if mode is Mode.EXACT else None,
        "d": network.d,
        "positional_encoding": (
            codec.encode_array(encoding) if encoding is not None else None
        ),
        "sublayers": [
            _encode_sublayer(sublayer, codec) for sublayer in network.sublayers
        ],
    }


def _decode_sublayer(raw: dict, mode: Mode) -> Sublayer:
    kind = raw.get("kind")
    if kind == "attention":
        heads = tuple(
            AttentionHead(
                decode_array(head["W_O"], mode),
                decode_array(head["W_V"], mode),
                decode_array(head["W_K"], mode),
                decode_array(head["W_Q"], mode),
                decode_array(head["b_Q"], mode),
                mode,
            )
            for head in raw["heads"]
        )
        return AttnSublayer(heads, Normalizer(raw["normalizer"]), raw.get("lambda"))
    if kind == "feed_forward":
        raw_activation = raw["activation"]
        if raw_activation["kind"] == "relu":
            activation = RELU
        else:
            c1, c2 = (decode_scalar(value) for value in raw_activation["breakpoints"])
            activation = PiecewiseLinear3(
                c1,
                c2,
                tuple(
                    Piece(decode_scalar(slope), decode_scalar(intercept))
                    for slope, intercept in raw_activation["pieces"]
                ),
            )
        return FFSublayer(
            decode_array(raw["W1"], mode),
            decode_array(raw["b1"], mode),
            decode_array(raw["W2"], mode),
            decode_array(raw["b2"], mode),
            activation,
            mode,
        )
    if kind == "bproj":
        return BProjSublayer(
            decode_array(raw["W_O"], mode), decode_array(raw["W_P"], mode), mode
        )
    if kind == "sepconv":
        return SepConvSublayer(
            decode_array(raw["W_O"], mode), decode_array(raw["W_C"], mode), mode
        )
    raise ConfigError(f'Unknown sublayer kind "{kind}".')


def network_from_dict(document: dict) -> Network:
    if document.get("format") != NETWORK_FORMAT:
        raise ConfigError(f"Not a network document: {document.get('format')!r}.")
    try:
        mode = Mode(document["mode"])
        encoding = document.get("positional_encoding")
        return Network(
            tuple(_decode_sublayer(raw, mode) for raw in document["sublayers"]),
            decode_array(encoding, mode) if encoding is not None else None,
            document.get("d"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed network document: {e}") from e


def dumps_network(network: Network, indent: Optional[int] = 1) -> str:
    return json.dumps(network_to_dict(network), indent=indent, ensure_ascii=False)


def loads_network(text: str) -> Network:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Network document is not valid JSON: {e}") from e
    return network_from_dict(document)
