from fractions import Fraction

import pytest

from constructor.factories import RandomTargetFactory
from constructor.grid import GridParams
from constructor.pipeline import (
    LayerCounts,
    assemble_modified_network,
    build_positional_pipeline,
    closed_form_counts,
    layer_count_report,
    value_bound,
)
from sublayers.forward import network_forward
from tensorcore.matrices import SeqMatrix

F = Fraction


def test_modified_network_counts(grid_half):
    result = assemble_modified_network(grid_half, RandomTargetFactory(grid=grid_half))
    assert result.layer_counts == LayerCounts(3, 3, 4)
    assert result.layer_counts.total == 10
    assert (result.t_l, result.t_r) == (8, 16)
    assert len(result.quantizer.sublayers) == 3
    assert len(result.value.sublayers) == 4


@pytest.mark.parametrize(
    "grid", [GridParams(F(1, 2), 1, 2), GridParams(F(1, 3), 1, 3)], ids=str
)
def test_modified_network_matches_target_off_the_diagonal(grid):
    fbar = RandomTargetFactory(grid=grid, seed=7)
    result = assemble_modified_network(grid, fbar)
    for key in grid.iter_keys():
        expected = fbar.value(key)
        if not grid.has_distinct_columns(key):
            expected = SeqMatrix.zeros(grid.d, grid.n)
        for X in grid.cube_samples(key):
            assert network_forward(X, result.network) == expected


def test_modified_network_is_zero_outside_the_box(grid_half):
    result = assemble_modified_network(grid_half, RandomTargetFactory(grid=grid_half))
    X = SeqMatrix.exact([[F(1, 4), F(5, 4)]])
    assert network_forward(X, result.network) == SeqMatrix.zeros(1, 2)


def test_positional_pipeline(grid_half):
    fbar = RandomTargetFactory(grid=grid_half, seed=7, positional=True)
    result = build_positional_pipeline(grid_half, fbar)
    assert result.positional
    assert (result.t_l, result.t_r) == (82, F(297, 2))
    assert result.layer_counts == LayerCounts(4, 5, 8)
    assert result.layer_counts == closed_form_counts(grid_half, positional=True)
    for key in grid_half.iter_keys():
        C = grid_half.cube_center(key)
        assert network_forward(C, result.network) == fbar.value(key)


def test_closed_form_counts(grid_planar):
    assert closed_form_counts(grid_planar) == LayerCounts(6, 5, 1 + 2 + 2 * 6)


@pytest.mark.parametrize("q,bound,value", [(2, 4, 4), (3, 9, 8), (4, 16, 14)])
def test_value_count_stays_within_bound(q, bound, value):
    grid = GridParams(F(1, q), 1, 2)
    result = assemble_modified_network(grid, RandomTargetFactory(grid=grid, seed=1))
    assert value_bound(grid) == bound
    assert result.layer_counts.value == value
    assert result.layer_counts.value <= 4 * bound


def test_layer_count_report(grid_half):
    result = assemble_modified_network(grid_half, RandomTargetFactory(grid=grid_half))
    report = layer_count_report(result)
    assert report["matches_closed_form"]
    assert report["measured"] == {"quantizer": 3, "contextual": 3, "value": 4}
    assert report["value_bound"] == 4.0
    assert report["value_ratio"] == 1.0
    assert report["residual_network_cubes"] == 4
    assert report["blocks"] >= 1
    assert report["parameters"] > 0
    assert value_bound(grid_half, positional=True) == 8.0
