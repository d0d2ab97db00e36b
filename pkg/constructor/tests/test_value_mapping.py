from fractions import Fraction

import numpy as np
import pytest

from constructor.contextual import build_contextual_mapper
from constructor.factories import RandomTargetFactory
from constructor.grid import GridParams
from constructor.value_mapping import (
    ValueWindow,
    _collect_windows,
    build_value_mapper,
    check_budget,
    check_windows,
    max_contextual_entry,
    negative_part_activation,
    outside_interval_layer,
    window_layer,
)
from seq2seq_univ.exceptions import (
    BudgetExceededError,
    TargetError,
    ValueWindowCollisionError,
)
from sublayers.forward import forward_stack
from tensorcore.matrices import SeqMatrix

F = Fraction


def column(*values):
    return np.array([F(v) for v in values], dtype=object)


def window(center, target, key=()):
    return ValueWindow(F(center), column(center), column(target), key)


def test_value_mapper_layer_count(grid_half, grid_third):
    mapper = build_contextual_mapper(grid_half)
    fbar = RandomTargetFactory(grid=grid_half, seed=7)
    assert len(build_value_mapper(grid_half, fbar, mapper)) == 4

    mapper = build_contextual_mapper(grid_third)
    fbar = RandomTargetFactory(grid=grid_third, seed=7)
    assert len(build_value_mapper(grid_third, fbar, mapper)) == 1 + 1 + 3


def test_value_mapper_needs_equivariant_target(grid_half):
    fbar = RandomTargetFactory(grid=grid_half, positional=True)
    with pytest.raises(TargetError):
        build_value_mapper(grid_half, fbar, build_contextual_mapper(grid_half))


def test_value_mapper_budget(grid_half):
    fbar = RandomTargetFactory(grid=grid_half)
    with pytest.raises(BudgetExceededError):
        build_value_mapper(grid_half, fbar, build_contextual_mapper(grid_half), 3)


def test_budget_defaults_to_settings(settings):
    settings.SEQ2SEQ_UNIV_BUDGET = 5
    check_budget(5, None, "Stack")
    with pytest.raises(BudgetExceededError):
        check_budget(6, None, "Stack")


def test_max_contextual_entry(grid_half):
    top = max_contextual_entry(grid_half, build_contextual_mapper(grid_half))
    assert top >= F(27, 2)


def test_enumeration_limit(grid_half):
    with pytest.raises(BudgetExceededError):
        max_contextual_entry(grid_half, build_contextual_mapper(grid_half), limit=2)


def test_outside_interval_layer(grid_half):
    layer = outside_interval_layer(grid_half, F(8), F(16), F(20))
    X = SeqMatrix.exact([[F(9, 2), 13, F(27, 2), 17]])
    assert forward_stack(X, [layer]) == SeqMatrix.exact(
        [[F(9, 2) - 20, 13, F(27, 2), -3]]
    )


def test_negative_part_activation():
    phi = negative_part_activation()
    assert [phi(t) for t in (F(-3), F(0), F(2))] == [3, 0, 0]


def test_window_layer_swaps_one_column(grid_half):
    layer = window_layer(grid_half, window(13, F(1, 4)))
    X = SeqMatrix.exact([[13, F(27, 2)]])
    assert forward_stack(X, [layer]) == SeqMatrix.exact([[F(1, 4), F(27, 2)]])


@pytest.mark.parametrize(
    "grid",
    [GridParams(F(1, 2), 1, 2), GridParams(F(1, 3), 1, 3), GridParams(F(1, 4), 1, 2)],
    ids=str,
)
def test_window_layer_leaves_other_orbits_alone(grid):
    mapper = build_contextual_mapper(grid)
    fbar = RandomTargetFactory(grid=grid, seed=7)
    windows = _collect_windows(grid, mapper, grid.iter_representatives(), fbar)
    for key in grid.iter_representatives(distinct=False):
        Z = forward_stack(grid.to_matrix(key), mapper.sublayers)
        for other in windows:
            if other.key != key:
                assert forward_stack(Z, [window_layer(grid, other)]) == Z


def test_windows_closer_than_delta_collide(grid_half):
    with pytest.raises(ValueWindowCollisionError):
        check_windows(grid_half, [window(0, 5), window(F(1, 4), 5)])


def test_target_inside_a_window_collides(grid_half):
    check_windows(grid_half, [window(0, 1), window(2, 1)])
    with pytest.raises(ValueWindowCollisionError):
        check_windows(grid_half, [window(0, F(1, 10)), window(2, 1)])
