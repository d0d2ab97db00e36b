import logging
from fractions import Fraction
from typing import List

import numpy as np

from constructor.grid import GridParams
from sublayers.layers import FFSublayer, Piece, PiecewiseLinear3
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode

logger = logging.getLogger(__name__)


def _unit(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=np.int64)
    e[i] = 1
    return e


def row_layer(d: int, i: int, offset: Fraction, phi: PiecewiseLinear3) -> FFSublayer:
    """Z -> Z + e_i phi(e_i^T Z - offset 1^T), one scalar unit wide."""
    e = _unit(d, i)
    return FFSublayer(
        e.reshape(1, d), [-offset], e.reshape(d, 1), np.zeros(d), phi, Mode.EXACT
    )


def clipping_activation(grid: GridParams) -> PiecewiseLinear3:
    """-t - delta^(-nd) for t < 0 or t >= 1, zero in between."""
    outside = Piece(-1, grid.sentinel)
    return PiecewiseLinear3(0, 1, (outside, Piece(0, 0), outside))


def rounding_activation(grid: GridParams) -> PiecewiseLinear3:
    """-t on [0, delta), zero elsewhere."""
    return PiecewiseLinear3(0, grid.delta, (Piece(0, 0), Piece(-1, 0), Piece(0, 0)))


def build_quantizer(grid: GridParams) -> List[FFSublayer]:
    """d / delta + d feed-forward sublayers quantizing X entry by entry.

    Per row, a clipping sublayer first sends entries outside [0, 1) to the
    sentinel -delta^(-nd), then one sublayer per level k rounds [k, k + delta)
    down to k.
    """
    clip = clipping_activation(grid)
    rounding = rounding_activation(grid)
    sublayers = []
    for i in range(grid.d):
        sublayers.append(row_layer(grid.d, i, Fraction(0), clip))
        for level in grid.levels:
            sublayers.append(row_layer(grid.d, i, level, rounding))
    logger.debug("Quantizer on %s grid: %s sublayers", grid, len(sublayers))
    return sublayers


def build_positional_quantizer(grid: GridParams) -> List[FFSublayer]:
    """dn / delta sublayers rounding X + E, whose column j lives in [j, j + 1)."""
    rounding = rounding_activation(grid)
    levels = [grid.delta * k for k in range(grid.q * grid.n)]
    sublayers = [
        row_layer(grid.d, i, level, rounding) for i in range(grid.d) for level in levels
    ]
    logger.debug("Positional quantizer on %s grid: %s sublayers", grid, len(sublayers))
    return sublayers


def quantize(X: SeqMatrix, grid: GridParams) -> SeqMatrix:
    """Entry-wise reference quantizer: floor to the grid, sentinel outside [0, 1)."""
    out = np.empty(X.shape, dtype=object)
    for index, value in np.ndenumerate(X.to_mode(Mode.EXACT).data):
        if value < 0 or value >= 1:
            out[index] = grid.sentinel
        else:
            out[index] = (value // grid.delta) * grid.delta
    return SeqMatrix(out, Mode.EXACT)
