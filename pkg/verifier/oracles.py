"""Direct case-formula evaluation of the shift heads, independent of the
attention forward pass, plus the closed forms they are checked against."""
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from constructor.contextual import (
    ContextualMapper,
    build_contextual_mapper,
    shift_centers,
)
from constructor.grid import GridParams
from sublayers.forward import attn_forward, forward_stack
from sublayers.layers import AttentionHead, AttnSublayer, Normalizer
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode
from verifier.enumeration import (
    all_grid_keys,
    distinct_representatives,
    duplicate_representatives,
    random_exact_matrix,
)
from verifier.reports import VerificationReport, log_report

logger = logging.getLogger(__name__)

RANDOM_INPUTS = 100


def psi_case_formula(Z: np.ndarray, head: AttentionHead) -> np.ndarray:
    """Contribution of a size-one hardmax head, read off its rank-one scores.

    Column j attends to the columns with the largest key when its query is
    positive, to the smallest key when negative and to all columns when zero.
    """
    keys = (head.W_K @ Z)[0]
    queries = (head.W_Q @ Z)[0] - head.b_Q[0]
    values = (head.W_V @ Z)[0]
    top, bottom = max(keys), min(keys)
    n = Z.shape[1]
    picked = np.empty(n, dtype=object)
    for j in range(n):
        if queries[j] > 0:
            chosen = [values[k] for k in range(n) if keys[k] == top]
        elif queries[j] < 0:
            chosen = [values[k] for k in range(n) if keys[k] == bottom]
        else:
            chosen = list(values)
        picked[j] = sum(chosen, Fraction(0)) / len(chosen)
    return np.outer(head.W_O[:, 0], picked)


def shift_layer_by_formula(Z: SeqMatrix, layer: AttnSublayer) -> SeqMatrix:
    out = Z.data.copy()
    for head in layer.heads:
        out = out + psi_case_formula(Z.data, head)
    return SeqMatrix(out, Mode.EXACT)


def simulate_sweep(grid: GridParams, ids: Sequence[Fraction]) -> List[Fraction]:
    """Selective shifts applied to scalar column ids, straight from the case rule.

    In window order, every id strictly inside (c - delta/2, c + delta/2) grows
    by delta^(-d) times the spread of the current ids.
    """
    ids = [Fraction(value) for value in ids]
    scale = grid.inv**grid.d
    half = grid.half_delta
    for center in shift_centers(grid):
        spread = max(ids) - min(ids)
        ids = [
            value + scale * spread if center - half < value < center + half else value
            for value in ids
        ]
    return ids


def ltilde_closed_form(grid: GridParams, ids: Sequence[Fraction]) -> Fraction:
    """Last shifted id for strictly increasing ids l_1 < ... < l_n."""
    n = len(ids)
    step = grid.inv**grid.d
    total = ids[-1] + step**n * (ids[-1] - ids[0])
    for k in range(1, n):
        total += step**k * (ids[n - k - 1] - ids[n - k])
    return total


def ltilde_bounds(grid: GridParams) -> Tuple[Fraction, Fraction]:
    step = grid.inv**grid.d
    n = grid.n
    lower = grid.inv ** ((n - 1) * grid.d - 1) * (step - 1)
    upper = grid.inv ** (n * grid.d - 1) * (step - 1) - grid.delta * (step - 1) ** 2
    return lower, upper


def ltilde_table(
    grid: GridParams, limit: Optional[int] = None
) -> Dict[Tuple[Fraction, ...], Fraction]:
    """Sorted distinct column ids of every orbit mapped to the simulated l~_n."""
    table = {}
    for key in distinct_representatives(grid, limit):
        ids = tuple(grid.column_id(column) for column in key)
        table[ids] = simulate_sweep(grid, ids)[-1]
    return table


def _scope(grid: GridParams, **extra) -> dict:
    return dict(grid.as_dict(), **extra)


def check_injectivity(
    grid: GridParams, limit: Optional[int] = None
) -> VerificationReport:
    """l~_n is one-to-one on sorted ids, inside its bounds and equal to the
    closed form; duplicate-column points stay strictly below the lower bound."""
    table = ltilde_table(grid, limit)
    lower, upper = ltilde_bounds(grid)
    sweep = build_contextual_mapper(grid).sublayers[:-1]
    scope = _scope(grid, orbits=len(table))
    metrics = {
        "lower_bound": lower,
        "upper_bound": upper,
        "min": min(table.values()),
        "max": max(table.values()),
    }
    seen = set()
    for ids, value in table.items():
        witness = _ids_matrix(grid, ids)
        shifted = forward_stack(witness, sweep)
        if [grid.column_id(column) for column in shifted.data.T][-1] != value:
            return _fail("injectivity", scope, witness, metrics, "network_sweep")
        if value != ltilde_closed_form(grid, ids):
            return _fail("injectivity", scope, witness, metrics, "closed_form")
        if not lower <= value <= upper:
            return _fail("injectivity", scope, witness, metrics, "bounds")
        if value in seen:
            return _fail("injectivity", scope, witness, metrics, "collision")
        seen.add(value)
    for key in duplicate_representatives(grid, limit):
        ids = [grid.column_id(column) for column in key]
        if not max(simulate_sweep(grid, ids)) < lower:
            witness = grid.to_matrix(key)
            reason = "duplicate_separation"
            return _fail("injectivity", scope, witness, metrics, reason)
    return log_report(VerificationReport.passed("injectivity", scope, metrics=metrics))


def _ids_matrix(grid: GridParams, ids: Sequence[Fraction]) -> SeqMatrix:
    """The grid point whose column ids are the given ones."""
    by_id = {grid.column_id(column): column for column in grid.columns()}
    return grid.to_matrix(tuple(by_id[value] for value in ids))


def _fail(name, scope, witness, metrics, reason) -> VerificationReport:
    return log_report(
        VerificationReport.failed(
            name, scope, witness, metrics=dict(metrics, reason=reason)
        )
    )


def _compare_layers(
    layers: Sequence[AttnSublayer], Z: SeqMatrix
) -> Optional[Tuple[int, SeqMatrix]]:
    """First layer whose forward pass disagrees with the case formulas."""
    for index, layer in enumerate(layers):
        by_matrix = attn_forward(Z, layer)
        if by_matrix != shift_layer_by_formula(Z, layer):
            return index, Z
        Z = by_matrix
    return None


def check_shift_oracle(
    grid: GridParams,
    mapper: Optional[ContextualMapper] = None,
    seed: Optional[int] = None,
    random_inputs: int = RANDOM_INPUTS,
    limit: Optional[int] = None,
) -> VerificationReport:
    """Attention forward pass against the case formulas, layer by layer.

    Runs over every grid point and over random exact inputs; the injectivity
    table is rebuilt and checked as part of the same report.
    """
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    mapper = mapper or build_contextual_mapper(grid)
    layers = [
        layer for layer in mapper.sublayers if layer.normalizer is Normalizer.HARDMAX
    ]
    keys = list(all_grid_keys(grid, limit))
    rng = np.random.default_rng(seed)
    inputs = [grid.to_matrix(key) for key in keys] + [
        random_exact_matrix(rng, grid.d, grid.n) for _ in range(random_inputs)
    ]
    scope = _scope(grid, grid_inputs=len(keys), random_inputs=random_inputs)
    metrics = {"layers": len(layers), "inputs": len(inputs)}
    for X in inputs:
        mismatch = _compare_layers(layers, X)
        if mismatch is not None:
            index, Z = mismatch
            return _fail(
                "shift-oracle", scope, Z, dict(metrics, layer=index), "formula"
            )
    injectivity = check_injectivity(grid, limit)
    if not injectivity.ok:
        return log_report(
            VerificationReport(
                "shift-oracle",
                scope,
                injectivity.outcome,
                counterexample=injectivity.counterexample,
                metrics=dict(metrics, **injectivity.metrics),
                seed=seed,
            )
        )
    metrics.update(injectivity.metrics)
    return log_report(
        VerificationReport.passed("shift-oracle", scope, metrics=metrics, seed=seed)
    )

