from fractions import Fraction

import pytest

from constructor.contextual import build_contextual_mapper
from constructor.grid import GridParams
from sublayers.forward import attn_forward
from tensorcore.matrices import SeqMatrix
from verifier.oracles import (
    check_injectivity,
    check_shift_oracle,
    ltilde_bounds,
    ltilde_closed_form,
    ltilde_table,
    shift_layer_by_formula,
    simulate_sweep,
)

F = Fraction


def test_sweep_on_the_half_grid(grid_half):
    assert simulate_sweep(grid_half, [0, F(1, 2)]) == [1, F(3, 2)]
    assert ltilde_closed_form(grid_half, [0, F(1, 2)]) == F(3, 2)
    assert ltilde_bounds(grid_half) == (1, F(3, 2))
    assert ltilde_table(grid_half) == {(0, F(1, 2)): F(3, 2)}


def test_sweep_on_the_third_grid(grid_third):
    ids = [0, F(1, 3), F(2, 3)]
    assert simulate_sweep(grid_third, ids)[-1] == F(44, 3)
    assert ltilde_closed_form(grid_third, ids) == F(44, 3)
    assert ltilde_bounds(grid_third) == (6, F(50, 3))


def test_duplicates_stay_below_the_lower_bound(grid_third):
    lower, _ = ltilde_bounds(grid_third)
    assert max(simulate_sweep(grid_third, [F(1, 3), F(1, 3), F(2, 3)])) < lower


def test_formula_matches_forward_pass(grid_half):
    mapper = build_contextual_mapper(grid_half)
    Z = SeqMatrix.exact([[F(1, 2), 0]])
    for layer in mapper.sublayers:
        assert attn_forward(Z, layer) == shift_layer_by_formula(Z, layer)
        Z = attn_forward(Z, layer)


@pytest.mark.parametrize(
    "grid",
    [
        GridParams(F(1, 2), 1, 2),
        GridParams(F(1, 3), 1, 3),
        GridParams(F(1, 2), 2, 2),
        GridParams(F(1, 4), 1, 3),
    ],
    ids=str,
)
def test_shift_oracle(grid):
    report = check_shift_oracle(grid, random_inputs=20)
    assert report.ok, report.as_dict()
    assert report.metrics["lower_bound"] <= report.metrics["min"]
    assert report.metrics["max"] <= report.metrics["upper_bound"]


def test_injectivity(grid_planar):
    report = check_injectivity(grid_planar)
    assert report.ok
    assert report.scope["orbits"] == 6
