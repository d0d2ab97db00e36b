from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from constructor.grid import GridParams
from constructor.quantizer import (
    build_positional_quantizer,
    build_quantizer,
    clipping_activation,
    quantize,
    rounding_activation,
)
from sublayers.forward import forward_stack
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode

F = Fraction


@pytest.mark.parametrize(
    "delta,d,n,count",
    [(F(1, 2), 1, 2, 3), (F(1, 3), 1, 3, 4), (F(1, 2), 2, 2, 6), (F(1, 4), 1, 2, 5)],
)
def test_quantizer_layer_count(delta, d, n, count):
    assert len(build_quantizer(GridParams(delta, d, n))) == count


def test_positional_quantizer_layer_count(grid_half):
    assert len(build_positional_quantizer(grid_half)) == 4


def test_activations(grid_half):
    clip = clipping_activation(grid_half)
    assert clip(F(-1, 10)) == F(1, 10) - 4
    assert clip(F(1, 2)) == 0
    assert clip(1) == -5
    rounding = rounding_activation(grid_half)
    assert rounding(F(1, 4)) == F(-1, 4)
    assert rounding(F(1, 2)) == 0
    assert rounding(F(-1, 4)) == 0


def test_quantizer_rounds_and_marks_outside(grid_half):
    X = SeqMatrix.exact([[F(3, 10), F(9, 10)]])
    assert forward_stack(X, build_quantizer(grid_half)) == SeqMatrix.exact(
        [[0, F(1, 2)]]
    )
    X = SeqMatrix.exact([[F(-1, 10), 1]])
    assert forward_stack(X, build_quantizer(grid_half)) == SeqMatrix.exact([[-4, -4]])


entries = st.fractions(min_value=-1, max_value=2, max_denominator=64)


@hypothesis_settings(max_examples=50, deadline=None)
@given(st.lists(entries, min_size=4, max_size=4))
def test_quantizer_matches_reference(values):
    grid = GridParams(F(1, 3), 2, 2)
    X = SeqMatrix(np.array(values, dtype=object).reshape(2, 2), Mode.EXACT)
    assert forward_stack(X, build_quantizer(grid)) == quantize(X, grid)


@hypothesis_settings(max_examples=50, deadline=None)
@given(st.lists(entries, min_size=4, max_size=4))
def test_quantizer_is_idempotent(values):
    grid = GridParams(F(1, 3), 2, 2)
    layers = build_quantizer(grid)
    X = SeqMatrix(np.array(values, dtype=object).reshape(2, 2), Mode.EXACT)
    Q = forward_stack(X, layers)
    assert forward_stack(Q, layers) == Q


def test_positional_quantizer_rounds_shifted_columns(grid_half):
    X = SeqMatrix.exact([[F(3, 4), 1 + F(1, 10)]])
    assert forward_stack(X, build_positional_quantizer(grid_half)) == SeqMatrix.exact(
        [[F(1, 2), 1]]
    )
