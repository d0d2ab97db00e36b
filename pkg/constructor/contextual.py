import logging
from fractions import Fraction
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from constructor.grid import GridParams, positional_encoding
from seq2seq_univ.exceptions import GridError
from sublayers.forward import forward_stack
from sublayers.layers import AttentionHead, AttnSublayer, Normalizer
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode, is_multiple_of

logger = logging.getLogger(__name__)


class ContextualMapper(NamedTuple):
    sublayers: List[AttnSublayer]
    u: np.ndarray
    t_l: Fraction
    t_r: Fraction


def _psi_head(grid: GridParams, b_Q: Fraction, out_scale: Fraction) -> AttentionHead:
    """Hardmax head adding out_scale * (max or min of the column ids) to row 1.

    A column whose id exceeds b_Q attends to the largest id, one below b_Q to
    the smallest.
    """
    u_row = grid.u.reshape(1, grid.d)
    W_O = np.zeros((grid.d, 1), dtype=object)
    W_O[:] = Fraction(0)
    W_O[0, 0] = out_scale
    return AttentionHead(W_O, u_row, u_row, u_row, [b_Q], Mode.EXACT)


def build_selective_shift_layer(
    grid: GridParams, b: Fraction, b_prime: Fraction, out_scale: Fraction
) -> AttnSublayer:
    """Two heads whose difference shifts row 1 of columns with b < id < b_prime.

    The shift equals out_scale times (max id - min id); every other entry is
    left untouched.
    """
    if not b < b_prime:
        raise GridError(f"Shift window must satisfy b < b', got ({b}, {b_prime}).")
    upper = _psi_head(grid, b, out_scale)
    lower = _psi_head(grid, b_prime, -out_scale)
    return AttnSublayer((upper, lower), Normalizer.HARDMAX)


def build_global_shift_layer(grid: GridParams, out_scale: Fraction) -> AttnSublayer:
    """Single head adding out_scale * max id to row 1 of every positive id column."""
    return AttnSublayer((_psi_head(grid, Fraction(0), out_scale),), Normalizer.HARDMAX)


def _window_layers(
    grid: GridParams, centers: Sequence[Fraction], out_scale: Fraction
) -> List[AttnSublayer]:
    half = grid.half_delta
    layers = []
    for center in centers:
        low, high = center - half, center + half
        # Ids are multiples of delta; window edges must never coincide with one.
        assert not is_multiple_of(low, grid.delta)
        assert not is_multiple_of(high, grid.delta)
        layers.append(build_selective_shift_layer(grid, low, high, out_scale))
    return layers


def shift_centers(grid: GridParams) -> List[Fraction]:
    """0, delta, ..., delta^(-d+1) - delta: every possible column id."""
    return [grid.delta * k for k in range(grid.q**grid.d)]


def positional_shift_centers(grid: GridParams) -> List[Fraction]:
    """Column ids of X + E, column j starting at (j-1)(1 + 1/delta + ...)."""
    stride = sum((grid.inv**k for k in range(grid.d)), Fraction(0))
    centers = {
        stride * j + grid.delta * k
        for j in range(grid.n)
        for k in range(grid.q**grid.d)
    }
    return sorted(centers)


def build_contextual_mapper(grid: GridParams) -> ContextualMapper:
    """delta^(-d) selective shifts in increasing window order plus a global shift.

    On a grid point L with distinct columns the resulting ids q(L) = u^T g_c(L)
    are pairwise distinct, distinct from every other non-permuted L and inside
    [t_l, t_r]. Any other point of the extended grid lands outside [t_l, t_r].
    """
    out_scale = grid.inv**grid.d
    layers = _window_layers(grid, shift_centers(grid), out_scale)
    layers.append(build_global_shift_layer(grid, grid.inv ** ((grid.n + 1) * grid.d)))
    logger.debug("Contextual mapper on %s grid: %s sublayers", grid, len(layers))
    return ContextualMapper(layers, grid.u, grid.t_l, grid.t_r)


def positional_id_bounds(
    grid: GridParams, sublayers: Sequence[AttnSublayer]
) -> Tuple[Fraction, Fraction]:
    """Smallest and largest id u^T g_c(L + E) over every grid point L."""
    encoding = positional_encoding(grid.d, grid.n)
    ids = []
    for key in grid.iter_keys():
        L = SeqMatrix(grid.to_matrix(key).data + encoding, Mode.EXACT)
        Z = forward_stack(L, sublayers)
        ids.extend(grid.column_id(column) for column in Z.data.T)
    return min(ids), max(ids)


def build_positional_contextual_mapper(grid: GridParams) -> ContextualMapper:
    """n (1/delta)^d selective shifts plus a global shift of n delta^(-(n+1)d-1)."""
    out_scale = grid.inv**grid.d
    layers = _window_layers(grid, positional_shift_centers(grid), out_scale)
    final_scale = grid.n * grid.inv ** ((grid.n + 1) * grid.d + 1)
    layers.append(build_global_shift_layer(grid, final_scale))
    logger.debug(
        "Positional contextual mapper on %s grid: %s sublayers", grid, len(layers)
    )
    t_l, t_r = positional_id_bounds(grid, layers)
    return ContextualMapper(layers, grid.u, t_l, t_r)
