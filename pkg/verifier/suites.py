import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from django.conf import settings

from constructor.grid import GridParams
from constructor.pipeline import (
    assemble_modified_network,
    build_positional_pipeline,
    closed_form_counts,
    layer_count_report,
)
from constructor.targets import random_positional_target, random_target
from seq2seq_univ.exceptions import ConfigError
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode
from verifier.contextual import check_average_control, check_contextual_properties
from verifier.convergence import (
    DEFAULT_SCHEDULE,
    check_convergence,
    check_off_band_exactness,
    check_small_temperature_diverges,
)
from verifier.distance import check_distance_bound, estimate_dp, network_function
from verifier.end_to_end import check_end_to_end, check_shell
from verifier.enumeration import unit_box_matrix
from verifier.equivariance import (
    check_equivariance,
    check_projection_distinctness,
    equivariance_subjects,
)
from verifier.oracles import check_shift_oracle
from verifier.reports import VerificationReport, log_report, sort_reports

logger = logging.getLogger(__name__)

CONTROL_GRID = GridParams(Fraction(1, 5), 1, 3)
CONTROL_POINTS = (
    (Fraction(0), Fraction(1, 5), Fraction(4, 5)),
    (Fraction(0), Fraction(2, 5), Fraction(3, 5)),
)
EXACT_SUBJECTS = ("attention", "average_attention", "feed_forward", "phi_feed_forward")
FLOAT_SUBJECTS = ("bproj", "sepconv")
VALUE_BOUND_FACTOR = 4


@dataclass(frozen=True)
class SuiteContext:
    """Everything a suite needs; seed and limits default from settings."""

    grid: GridParams
    seed: int
    targets: int = 10
    trials: int = 20
    samples: int = 10_000
    schedule: tuple = DEFAULT_SCHEDULE
    enumeration_limit: Optional[int] = None
    budget: Optional[int] = None
    workers: Optional[int] = None

    @property
    def pool_size(self) -> int:
        return self.workers or settings.SEQ2SEQ_UNIV_WORKERS


def _construct(context: SuiteContext, seed: int):
    fbar = random_target(context.grid, seed)
    result = assemble_modified_network(
        context.grid, fbar, context.budget, context.enumeration_limit
    )
    return fbar, result


def _end_to_end_for_seed(args) -> List[VerificationReport]:
    context, seed = args
    fbar, result = _construct(context, seed)
    return [
        check_end_to_end(
            context.grid, fbar, result, limit=context.enumeration_limit, seed=seed
        )
    ]


def _map(context: SuiteContext, function, items) -> list:
    """Ordered map, spread over processes when more than one worker is set."""
    if context.pool_size > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=context.pool_size) as executor:
            return list(executor.map(function, items))
    return [function(item) for item in items]


def contextual_suite(context: SuiteContext) -> List[VerificationReport]:
    return [
        check_contextual_properties(
            context.grid, seed=context.seed, limit=context.enumeration_limit
        )
    ]


def shift_oracle_suite(context: SuiteContext) -> List[VerificationReport]:
    return [
        check_shift_oracle(
            context.grid, seed=context.seed, limit=context.enumeration_limit
        )
    ]


def end_to_end_suite(context: SuiteContext) -> List[VerificationReport]:
    seeds = [context.seed + offset for offset in range(context.targets)]
    batches = _map(context, _end_to_end_for_seed, [(context, s) for s in seeds])
    reports = [report for batch in batches for report in batch]

    fbar, result = _construct(context, context.seed)
    reports.append(check_shell(context.grid, result, seed=context.seed))
    g = network_function(result.network)
    for p in (1, 2):
        estimate = estimate_dp(
            fbar,
            g,
            p,
            context.grid,
            seed=context.seed,
            samples=context.samples,
            limit=context.enumeration_limit,
        )
        reports.append(
            check_distance_bound(context.grid, estimate, fbar.bound(p), context.seed)
        )
    return reports


def equivariance_suite(context: SuiteContext) -> List[VerificationReport]:
    grid = context.grid
    reports = []
    exact = equivariance_subjects(grid.d, grid.n, context.seed, EXACT_SUBJECTS)
    for name, subject in exact:
        reports.append(
            check_equivariance(
                subject, grid.n, context.trials, Mode.EXACT, context.seed, name
            )
        )
    # Length-3 filters need at least three tokens.
    n = max(grid.n, 3)
    for name, subject in equivariance_subjects(grid.d, n, context.seed, FLOAT_SUBJECTS):
        reports.append(
            check_equivariance(
                subject, n, context.trials, Mode.FLOAT, context.seed, name
            )
        )
    _, result = _construct(context, context.seed)
    reports.append(
        check_equivariance(
            result.network,
            grid.n,
            context.trials,
            Mode.EXACT,
            context.seed,
            "g_bar",
            sampler=unit_box_matrix,
        )
    )
    reports.append(check_projection_distinctness(n, seed=context.seed))
    return reports


def positional_suite(context: SuiteContext) -> List[VerificationReport]:
    grid = context.grid
    fbar = random_positional_target(grid, context.seed)
    result = build_positional_pipeline(grid, fbar, context.budget)
    return [
        check_end_to_end(
            grid,
            fbar,
            result,
            centers_only=True,
            limit=context.enumeration_limit,
            seed=context.seed,
        ),
        check_layer_counts(result),
    ]


def conversion_suite(context: SuiteContext) -> List[VerificationReport]:
    _, result = _construct(context, context.seed)
    return [
        check_off_band_exactness(result.network, context.schedule[-1][1], context.seed),
        check_convergence(
            result, context.schedule, limit=context.enumeration_limit
        ),
    ]


def controls_suite(context: SuiteContext) -> List[VerificationReport]:
    first, second = (
        CONTROL_GRID.to_matrix(tuple((value,) for value in point))
        for point in CONTROL_POINTS
    )
    _, result = _construct(context, context.seed)
    return [
        check_average_control(CONTROL_GRID, first, second),
        check_small_temperature_diverges(result),
    ]


def check_layer_counts(result) -> VerificationReport:
    """Measured sublayer counts equal the closed forms; value stack within bound."""
    grid = result.grid
    table = layer_count_report(result)
    bound = VALUE_BOUND_FACTOR * table["value_bound"]
    scope = dict(grid.as_dict(), positional=result.positional)
    metrics = dict(table, value_limit=bound)
    matches = result.layer_counts == closed_form_counts(grid, result.positional)
    if matches and result.layer_counts.value <= bound:
        report = VerificationReport.passed("layer-counts", scope, metrics=metrics)
    else:
        witness = SeqMatrix.zeros(grid.d, grid.n)
        report = VerificationReport.failed(
            "layer-counts", scope, witness, metrics=metrics
        )
    return log_report(report)


def layer_count_suite(context: SuiteContext) -> List[VerificationReport]:
    _, result = _construct(context, context.seed)
    return [check_layer_counts(result)]


SUITES: Dict[str, Callable[[SuiteContext], List[VerificationReport]]] = {
    "contextual": contextual_suite,
    "shift-oracle": shift_oracle_suite,
    "end-to-end": end_to_end_suite,
    "equivariance": equivariance_suite,
    "positional": positional_suite,
    "conversion": conversion_suite,
    "controls": controls_suite,
    "layer-count": layer_count_suite,
}


def run_suite(name: str, context: SuiteContext) -> List[VerificationReport]:
    """Run one suite, or every suite for "all"; reports come back sorted."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ConfigError(
            f'Unknown suite "{name}", expected one of {", ".join(SUITES)} or all.'
        )
    reports = []
    for suite in names:
        logger.info("Running %s suite on %s grid", suite, context.grid)
        reports.extend(SUITES[suite](context))
    failures = sum(not report.ok for report in reports)
    logger.info("%s reports, %s unexpected outcomes", len(reports), failures)
    return sort_reports(reports)


def all_ok(reports: List[VerificationReport]) -> bool:
    return all(report.ok for report in reports)
