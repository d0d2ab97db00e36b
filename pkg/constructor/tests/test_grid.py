from fractions import Fraction

import pytest

from constructor.factories import GridParamsFactory
from constructor.grid import GridParams, positional_encoding
from seq2seq_univ.exceptions import GridError, ShapeError
from tensorcore.matrices import SeqMatrix

F = Fraction


@pytest.mark.parametrize(
    "delta,d,n,error",
    [
        (F(1, 1), 1, 2, GridError),
        (F(2, 3), 1, 2, GridError),
        (F(1, 2), 0, 2, ShapeError),
        (F(1, 2), 1, 1, ShapeError),
    ],
)
def test_invalid_grids(delta, d, n, error):
    with pytest.raises(error):
        GridParams(delta, d, n)


def test_parse_and_str():
    grid = GridParams.parse("1/3", 2, 4)
    assert grid == GridParams(F(1, 3), 2, 4)
    assert str(grid) == "d=2 n=4 delta=1/3"
    assert grid.as_dict() == {"delta": "1/3", "d": 2, "n": 4}


def test_constants_on_the_half_grid(grid_half):
    assert grid_half.q == 2
    assert grid_half.sentinel == -4
    assert grid_half.t_l == 8
    assert grid_half.t_r == 16
    assert grid_half.levels == (0, F(1, 2))
    assert grid_half.grid_size == 4
    assert grid_half.distinct_size == 2
    assert grid_half.orbit_count == 1


@pytest.mark.parametrize(
    "delta,d,n,fraction",
    [
        (F(1, 2), 1, 2, F(1, 2)),
        (F(1, 4), 1, 2, F(1, 4)),
        (F(1, 3), 1, 3, F(7, 9)),
        (F(1, 2), 2, 2, F(1, 4)),
    ],
)
def test_mismatch_fraction(delta, d, n, fraction):
    assert GridParamsFactory(delta=delta, d=d, n=n).mismatch_fraction == fraction


def test_column_ids_are_a_bijection(grid_planar):
    ids = [grid_planar.column_id(column) for column in grid_planar.columns()]
    assert ids == [0, F(1, 2), 1, F(3, 2)]


def test_columns_with_sentinel(grid_half):
    assert grid_half.columns(with_sentinel=True) == ((-4,), (0,), (F(1, 2),))


def test_canonical_sorts_by_id(grid_half):
    rep, order = grid_half.canonical(((F(1, 2),), (F(0),)))
    assert rep == ((0,), (F(1, 2),))
    assert order == (1, 0)


def test_representatives(grid_third):
    distinct = list(grid_third.iter_representatives())
    assert distinct == [((0,), (F(1, 3),), (F(2, 3),))]
    assert len(list(grid_third.iter_representatives(distinct=False))) == 10
    assert len(list(grid_third.iter_keys())) == 27


def test_cube_samples(grid_half):
    center, low, high = grid_half.cube_samples(((F(0),), (F(1, 2),)))
    assert center == SeqMatrix.exact([[F(1, 4), F(3, 4)]])
    assert low == SeqMatrix.exact([[F(1, 16), F(9, 16)]])
    assert high == SeqMatrix.exact([[F(7, 16), F(15, 16)]])


def test_matrix_and_key(grid_planar):
    key = ((F(0), F(1, 2)), (F(1, 2), F(0)))
    L = grid_planar.to_matrix(key)
    assert L == SeqMatrix.exact([[0, F(1, 2)], [F(1, 2), 0]])
    assert grid_planar.to_key(L) == key


def test_positional_encoding():
    assert positional_encoding(2, 3).tolist() == [[0, 1, 2], [0, 1, 2]]
