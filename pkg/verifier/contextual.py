import logging
from fractions import Fraction
from typing import List, Optional

from django.conf import settings

from constructor.contextual import ContextualMapper, build_contextual_mapper
from constructor.grid import GridKey, GridParams
from sublayers.forward import forward_stack
from sublayers.layers import AttentionHead, AttnSublayer, Normalizer
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode
from verifier.enumeration import (
    distinct_representatives,
    duplicate_representatives,
    multi_sentinel_samples,
    orbit,
    single_sentinel_representatives,
)
from verifier.reports import Outcome, VerificationReport, log_report

logger = logging.getLogger(__name__)


def contextual_ids(
    grid: GridParams, mapper: ContextualMapper, key: GridKey
) -> List[Fraction]:
    """q(L) = u^T g_c(L), one id per column."""
    Z = forward_stack(grid.to_matrix(key), mapper.sublayers)
    return [grid.column_id(column) for column in Z.data.T]


def check_contextual_properties(
    grid: GridParams,
    mapper: Optional[ContextualMapper] = None,
    seed: Optional[int] = None,
    limit: Optional[int] = None,
) -> VerificationReport:
    """Exhaustive check of the four contextual mapping properties.

    Distinct-column points are checked orbit by orbit with every permutation
    expanded; ids must be distinct within a point (1), distinct across points
    that are not permutations of each other (2) and inside [t_l, t_r] (3).
    Duplicate-column points, every point with one sentinel column and seeded
    points with several sentinel columns must land outside [t_l, t_r] (4).
    """
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    mapper = mapper or build_contextual_mapper(grid)
    t_l, t_r = mapper.t_l, mapper.t_r
    representatives = distinct_representatives(grid, limit)
    outside = (
        duplicate_representatives(grid, limit)
        + single_sentinel_representatives(grid, limit)
        + multi_sentinel_samples(grid, seed)
    )
    scope = dict(
        grid.as_dict(),
        orbits=len(representatives),
        points=sum(len(orbit(key)) for key in representatives),
        outside_points=len(outside),
    )
    metrics = {"t_l": t_l, "t_r": t_r}

    def fail(key, prop):
        return log_report(
            VerificationReport.failed(
                "contextual-mapping",
                scope,
                grid.to_matrix(key),
                metrics=dict(metrics, property=prop),
                seed=seed,
            )
        )

    collected = set()
    lowest, highest = None, None
    for rep in representatives:
        ids = contextual_ids(grid, mapper, rep)
        if len(set(ids)) != grid.n:
            return fail(rep, 1)
        if collected & set(ids):
            return fail(rep, 2)
        collected.update(ids)
        if not all(t_l <= value <= t_r for value in ids):
            return fail(rep, 3)
        lowest = min(ids) if lowest is None else min(lowest, min(ids))
        highest = max(ids) if highest is None else max(highest, max(ids))
        # g_c is equivariant, so every member of the orbit reuses these ids.
        position = {column: value for column, value in zip(rep, ids)}
        for member in orbit(rep):
            if contextual_ids(grid, mapper, member) != [position[c] for c in member]:
                return fail(member, 1)
    for key in outside:
        if any(t_l <= value <= t_r for value in contextual_ids(grid, mapper, key)):
            return fail(key, 4)
    metrics.update({"min_id": lowest, "max_id": highest, "ids": len(collected)})
    return log_report(
        VerificationReport.passed(
            "contextual-mapping", scope, metrics=metrics, seed=seed
        )
    )


def average_attention(d: int) -> AttnSublayer:
    """One head returning the mean column id in row 1 of every column."""
    u_row = [[1] + [0] * (d - 1)]
    head = AttentionHead(
        [[1]] + [[0]] * (d - 1), u_row, u_row, u_row, [0], Mode.EXACT
    )
    return AttnSublayer((head,), Normalizer.AVERAGE)


def check_average_control(
    grid: GridParams, first: SeqMatrix, second: SeqMatrix
) -> VerificationReport:
    """Averaging attention is not a contextual mapping.

    Two inputs that are not permutations of each other but share a column and
    a mean receive a shared id, so the check is expected to fail.
    """
    layer = average_attention(grid.d)
    left = forward_stack(first, [layer])
    right = forward_stack(second, [layer])
    shared = {grid.column_id(c) for c in left.data.T} & {
        grid.column_id(c) for c in right.data.T
    }
    scope = dict(grid.as_dict(), normalizer=Normalizer.AVERAGE.value)
    metrics = {"shared_ids": sorted(shared)}
    if shared:
        report = VerificationReport.failed(
            "average-contextual-control",
            scope,
            first,
            expected=Outcome.FAIL,
            metrics=dict(metrics, other=second.to_list()),
        )
    else:
        report = VerificationReport.passed(
            "average-contextual-control", scope, expected=Outcome.FAIL, metrics=metrics
        )
    return log_report(report)
