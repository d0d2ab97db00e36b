import logging
from fractions import Fraction
from typing import Optional

from django.conf import settings

from constructor.grid import GridParams
from constructor.pipeline import ConstructionResult
from constructor.targets import PiecewiseConstantFn
from sublayers.forward import network_forward
from tensorcore.matrices import SeqMatrix
from verifier.enumeration import all_grid_keys, shell_samples
from verifier.reports import VerificationReport, log_report

logger = logging.getLogger(__name__)

SHELL_SAMPLES = 100


def check_end_to_end(
    grid: GridParams,
    fbar: PiecewiseConstantFn,
    result: ConstructionResult,
    centers_only: bool = False,
    limit: Optional[int] = None,
    seed: Optional[int] = None,
) -> VerificationReport:
    """g(X) == A_L on every cube of the grid, checked exactly.

    Three points per cube (center and both near corners) unless centers_only.
    The equivariant construction must return zero on cubes whose grid point has
    a repeated column; their share of the grid is the mismatch fraction.
    """
    network = result.network
    mismatched = 0
    checked = 0
    for key in all_grid_keys(grid, limit):
        repeated = not grid.has_distinct_columns(key)
        if repeated and not result.positional:
            expected = SeqMatrix.zeros(grid.d, grid.n)
            mismatched += 1
        else:
            expected = fbar.value(key)
        points = (grid.cube_center(key),) if centers_only else grid.cube_samples(key)
        for X in points:
            checked += 1
            if network_forward(X, network) != expected:
                return log_report(
                    VerificationReport.failed(
                        "end-to-end",
                        _scope(grid, result, checked),
                        X,
                        metrics={"expected": expected.to_list()},
                        seed=seed,
                    )
                )
    fraction = Fraction(mismatched, grid.grid_size)
    metrics = {
        "mismatch_fraction": fraction,
        "mismatch_fraction_float": float(fraction),
        "mismatched_cubes": mismatched,
        "counted_fraction": 0 if result.positional else grid.mismatch_fraction,
    }
    return log_report(
        VerificationReport.passed(
            "end-to-end", _scope(grid, result, checked), metrics=metrics, seed=seed
        )
    )


def _scope(grid: GridParams, result: ConstructionResult, points: int) -> dict:
    return dict(grid.as_dict(), positional=result.positional, points=points)


def check_shell(
    grid: GridParams,
    result: ConstructionResult,
    seed: Optional[int] = None,
    count: int = SHELL_SAMPLES,
) -> VerificationReport:
    """g vanishes on seeded points of [-1, 2)^(d x n) outside [0, 1)^(d x n)."""
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    zeros = SeqMatrix.zeros(grid.d, grid.n)
    scope = dict(grid.as_dict(), samples=count, box="[-1, 2)")
    for X in shell_samples(grid, seed, count):
        if network_forward(X, result.network) != zeros:
            return log_report(
                VerificationReport.failed("shell-zero", scope, X, seed=seed)
            )
    return log_report(VerificationReport.passed("shell-zero", scope, seed=seed))
