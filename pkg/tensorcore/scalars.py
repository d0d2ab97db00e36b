import math
import re
from enum import Enum
from fractions import Fraction
from typing import Iterable, Union

from seq2seq_univ.exceptions import GridError, ModeError

Number = Union[int, float, Fraction]

DELTA_RE = re.compile(r"^\s*1\s*/\s*(\d+)\s*$")


class Mode(Enum):
    """
    Arithmetic mode of a matrix.

    EXACT values are rationals held as fractions.Fraction, FLOAT values are binary64.
    """

    EXACT: str = "exact"
    FLOAT: str = "float"


def parse_delta(text: str) -> Fraction:
    """Parse a grid resolution written as "1/q" with an integer q >= 2.

    Args:
        text (str): the resolution, e.g. "1/4"

    Raises:
        GridError: if the text is not a reciprocal of an integer of at least 2

    Returns:
        Fraction: the resolution as an exact rational
    """
    match = DELTA_RE.match(str(text))
    if not match:
        raise GridError(f'Delta must be written as "1/q", got "{text}".')
    q = int(match.group(1))
    if q < 2:
        raise GridError(f"Delta must satisfy 1/delta >= 2, got 1/{q}.")
    return Fraction(1, q)


def format_delta(delta: Fraction) -> str:
    return f"{delta.numerator}/{delta.denominator}"


def to_exact(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ModeError("Booleans are not scalars.")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ModeError(f"Cannot represent {value} exactly.")
        return Fraction(value)
    # numpy integer and floating scalars
    if hasattr(value, "item"):
        return to_exact(value.item())
    raise ModeError(f"Unsupported scalar type {type(value).__name__}.")


def is_multiple_of(value: Number, base: Fraction) -> bool:
    """True if value is an integer multiple of base."""
    return (to_exact(value) / base).denominator == 1


def common_denominator(values: Iterable[Number]) -> int:
    """Least common denominator of the given exact values."""
    return math.lcm(*(to_exact(value).denominator for value in values))
