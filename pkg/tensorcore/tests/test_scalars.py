from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seq2seq_univ.exceptions import GridError, ModeError
from tensorcore.scalars import (
    common_denominator,
    format_delta,
    is_multiple_of,
    parse_delta,
    to_exact,
)


@pytest.mark.parametrize(
    "text,expected",
    [("1/2", Fraction(1, 2)), ("1/3", Fraction(1, 3)), (" 1 / 16 ", Fraction(1, 16))],
)
def test_parse_delta(text, expected):
    assert parse_delta(text) == expected


@pytest.mark.parametrize("text", ["0.5", "2/4", "1/1", "1/0", "1/x", "", "1/-2"])
def test_parse_delta_rejects(text):
    with pytest.raises(GridError):
        parse_delta(text)


@given(st.integers(min_value=2, max_value=10_000))
def test_format_delta_inverts_parse(q):
    assert parse_delta(format_delta(Fraction(1, q))) == Fraction(1, q)


@pytest.mark.parametrize(
    "value,expected",
    [
        (3, Fraction(3)),
        (0.25, Fraction(1, 4)),
        ("2/3", Fraction(2, 3)),
        (np.int64(5), Fraction(5)),
        (np.float64(0.5), Fraction(1, 2)),
    ],
)
def test_to_exact(value, expected):
    assert to_exact(value) == expected


@pytest.mark.parametrize("value", [float("inf"), float("nan"), True, object()])
def test_to_exact_rejects(value):
    with pytest.raises(ModeError):
        to_exact(value)


def test_is_multiple_of():
    assert is_multiple_of(Fraction(3, 4), Fraction(1, 4))
    assert is_multiple_of(0, Fraction(1, 3))
    assert not is_multiple_of(Fraction(1, 8), Fraction(1, 4))


def test_common_denominator():
    assert common_denominator([Fraction(1, 4), Fraction(1, 6), 2]) == 12
