import bisect
import logging
import math
from fractions import Fraction
from typing import Iterable, List, NamedTuple, Optional

import numpy as np
from django.conf import settings

from constructor.contextual import ContextualMapper
from constructor.grid import GridKey, GridParams
from constructor.quantizer import row_layer
from constructor.targets import PiecewiseConstantFn
from seq2seq_univ.exceptions import (
    BudgetExceededError,
    TargetError,
    ValueWindowCollisionError,
)
from sublayers.forward import forward_stack
from sublayers.layers import FFSublayer, Piece, PiecewiseLinear3
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode

logger = logging.getLogger(__name__)


class ValueWindow(NamedTuple):
    """Column id v and the column that should replace the one carrying it."""

    center: Fraction
    source: np.ndarray
    target: np.ndarray
    key: GridKey


def check_budget(count: int, budget: Optional[int], what: str):
    if budget is None:
        budget = settings.SEQ2SEQ_UNIV_BUDGET
    if count > budget:
        raise BudgetExceededError(
            f"{what} needs {count} sublayers, the budget is {budget}."
        )


def check_enumeration(count: int, limit: Optional[int], what: str):
    if limit is None:
        limit = settings.SEQ2SEQ_UNIV_ENUMERATION_LIMIT
    if count > limit:
        raise BudgetExceededError(
            f"{what} would enumerate {count} grid points, the limit is {limit}."
        )


def max_contextual_entry(
    grid: GridParams, mapper: ContextualMapper, limit: Optional[int] = None
) -> Fraction:
    """Largest entry of g_c over the grid extended with the sentinel.

    g_c is permutation equivariant, so one point per column multiset suffices.
    """
    column_types = (grid.q + 1) ** grid.d
    check_enumeration(
        math.comb(column_types + grid.n - 1, grid.n), limit, "Value mapper bound"
    )
    top = None
    for key in grid.iter_representatives(distinct=False, with_sentinel=True):
        Z = forward_stack(grid.to_matrix(key), mapper.sublayers)
        entry = max(Z.data.flat)
        top = entry if top is None else max(top, entry)
    return top


def outside_interval_layer(
    grid: GridParams, t_l: Fraction, t_r: Fraction, shift: Fraction
) -> FFSublayer:
    """Subtract shift from every entry of columns whose id is outside [t_l, t_r]."""
    d = grid.d
    phi = PiecewiseLinear3(
        t_l, t_r + grid.half_delta, (Piece(0, 1), Piece(0, 0), Piece(0, 1))
    )
    return FFSublayer(
        grid.u.reshape(1, d),
        [0],
        np.full((d, 1), -shift, dtype=object),
        np.zeros(d),
        phi,
        Mode.EXACT,
    )


def negative_part_activation() -> PiecewiseLinear3:
    """-t for t < 0, zero otherwise."""
    return PiecewiseLinear3(0, 1, (Piece(-1, 0), Piece(0, 0), Piece(0, 0)))


def window_activation(grid: GridParams) -> PiecewiseLinear3:
    """1 on [-delta/2, delta/2), zero elsewhere."""
    half = grid.half_delta
    return PiecewiseLinear3(-half, half, (Piece(0, 0), Piece(0, 1), Piece(0, 0)))


def window_layer(grid: GridParams, window: ValueWindow) -> FFSublayer:
    """Replace the column whose id is window.center by window.target."""
    d = grid.d
    return FFSublayer(
        grid.u.reshape(1, d),
        [-window.center],
        (window.target - window.source).reshape(d, 1),
        np.zeros(d),
        window_activation(grid),
        Mode.EXACT,
    )


def check_windows(grid: GridParams, windows: List[ValueWindow]):
    """Windows must be disjoint and no replacement column may land in one."""
    centers = [window.center for window in windows]
    for previous, current in zip(windows, windows[1:]):
        if current.center - previous.center < grid.delta:
            raise ValueWindowCollisionError(
                f"Column ids {previous.center} of {previous.key} and "
                f"{current.center} of {current.key} are closer than delta."
            )
    half = grid.half_delta
    for window in windows:
        target_id = grid.column_id(window.target)
        position = bisect.bisect_right(centers, target_id + half)
        if position and centers[position - 1] + half > target_id:
            raise ValueWindowCollisionError(
                f"Output column of {window.key} has id {target_id}, inside the "
                f"window around {centers[position - 1]}."
            )


def _collect_windows(
    grid: GridParams,
    mapper: ContextualMapper,
    points: Iterable[GridKey],
    fbar: PiecewiseConstantFn,
    encoding: Optional[np.ndarray] = None,
) -> List[ValueWindow]:
    windows = []
    for key in points:
        L = grid.to_matrix(key)
        if encoding is not None:
            L = SeqMatrix(L.data + encoding, Mode.EXACT)
        Z = forward_stack(L, mapper.sublayers)
        A = fbar.value(key)
        for j in range(grid.n):
            source = Z.column(j)
            windows.append(
                ValueWindow(grid.column_id(source), source, A.column(j), key)
            )
    windows.sort(key=lambda window: window.center)
    check_windows(grid, windows)
    return windows


def build_value_mapper(
    grid: GridParams,
    fbar: PiecewiseConstantFn,
    mapper: ContextualMapper,
    budget: Optional[int] = None,
    enumeration_limit: Optional[int] = None,
) -> List[FFSublayer]:
    """Feed-forward sublayers turning g_c(L) into A_L.

    First every column of a point outside the distinct-column grid is pushed
    below zero and clamped to zero, then one sublayer per contextual id swaps
    that column for its target column, in increasing id order.
    """
    if not fbar.equivariant:
        raise TargetError("The equivariant value mapper needs an equivariant target.")
    count = 1 + grid.d + grid.n * grid.orbit_count
    check_budget(count, budget, "Value mapper")

    top = max_contextual_entry(grid, mapper, enumeration_limit)
    sublayers = [outside_interval_layer(grid, mapper.t_l, mapper.t_r, top + 1)]
    clamp = negative_part_activation()
    sublayers.extend(row_layer(grid.d, i, Fraction(0), clamp) for i in range(grid.d))

    windows = _collect_windows(grid, mapper, grid.iter_representatives(), fbar)
    for window in windows:
        if not mapper.t_l <= window.center <= mapper.t_r:
            raise ValueWindowCollisionError(
                f"Contextual id {window.center} of {window.key} lies outside "
                f"[{mapper.t_l}, {mapper.t_r}]."
            )
    sublayers.extend(window_layer(grid, window) for window in windows)
    logger.debug(
        "Value mapper on %s grid: %s sublayers, M = %s", grid, len(sublayers), top
    )
    return sublayers


def build_positional_value_mapper(
    grid: GridParams,
    fbar: PiecewiseConstantFn,
    mapper: ContextualMapper,
    encoding: np.ndarray,
    budget: Optional[int] = None,
) -> List[FFSublayer]:
    """One window sublayer per column of every grid point, no orbit reduction."""
    check_budget(grid.n * grid.grid_size, budget, "Positional value mapper")
    windows = _collect_windows(grid, mapper, grid.iter_keys(), fbar, encoding)
    sublayers = [window_layer(grid, window) for window in windows]
    logger.debug(
        "Positional value mapper on %s grid: %s sublayers", grid, len(sublayers)
    )
    return sublayers
