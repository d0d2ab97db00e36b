import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List

from cli.config import RunConfig
from cli.writers import OutputWriter, with_provenance
from constructor.pipeline import (
    ConstructionResult,
    assemble_modified_network,
    build_positional_pipeline,
    layer_count_report,
)
from constructor.targets import PiecewiseConstantFn
from converter.annealing import ConversionParams, anneal_network
from seq2seq_univ.consts import (
    EXIT_BUDGET_EXCEEDED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_PROPERTY_FAILURE,
)
from seq2seq_univ.exceptions import (
    BudgetExceededError,
    ConfigError,
    GridError,
    Seq2SeqUnivError,
    ShapeError,
    TargetError,
)
from sublayers.forward import network_signature
from sublayers.serialization import dumps_network
from tensorcore.scalars import Mode
from verifier.convergence import convergence_report, convergence_table
from verifier.distance import check_distance_bound, estimate_dp, network_function
from verifier.reports import VerificationReport
from verifier.suites import SuiteContext, all_ok, check_layer_counts, run_suite

logger = logging.getLogger(__name__)

CONFIG_ERRORS = (ConfigError, GridError, ShapeError, TargetError)
LAYER_COUNT_HEADER = ("component", "measured", "closed_form")
REPORT_HEADER = ("property", "scope", "pass", "metric")
CONVERGENCE_HEADER = ("lambda", "epsilon", "sup_error")
DP_HEADER = ("p", "samples", "monte_carlo", "standard_error", "exact", "bound")


@dataclass
class RunResult:
    status: int
    files: List[str] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)


def exit_status_for(error: Seq2SeqUnivError) -> int:
    """Exit status for an error raised while running a command."""
    if isinstance(error, BudgetExceededError):
        return EXIT_BUDGET_EXCEEDED
    if isinstance(error, CONFIG_ERRORS):
        return EXIT_CONFIG_ERROR
    return EXIT_PROPERTY_FAILURE


def _status(reports: List[VerificationReport]) -> int:
    return EXIT_OK if all_ok(reports) else EXIT_PROPERTY_FAILURE


def construct(config: RunConfig, fbar: PiecewiseConstantFn) -> ConstructionResult:
    """Equivariant targets get the plain pipeline, others the positional one."""
    if fbar.equivariant:
        return assemble_modified_network(
            config.grid, fbar, config.budget, config.enumeration_limit
        )
    return build_positional_pipeline(config.grid, fbar, config.budget)


def _layer_count_rows(table: dict) -> List[dict]:
    return [
        {
            "component": component,
            "measured": table["measured"][component],
            "closed_form": table["closed_form"][component],
        }
        for component in ("quantizer", "contextual", "value")
    ]


def run_construct(config: RunConfig, writer: OutputWriter) -> RunResult:
    fbar = config.target.load(config.grid)
    result = construct(config, fbar)
    table = layer_count_report(result)
    network = result.network.to_mode(config.mode)
    writer.write_text("network.json", dumps_network(network))
    writer.write_json("target.json", fbar.to_dict())
    writer.write_json("layer-counts.json", with_provenance(config, table))
    writer.write_csv("layer-counts.csv", LAYER_COUNT_HEADER, _layer_count_rows(table))
    return RunResult(EXIT_OK, writer.written, result.layer_counts.as_dict())


def run_layer_count(config: RunConfig, writer: OutputWriter) -> RunResult:
    result = construct(config, config.target.load(config.grid))
    table = layer_count_report(result)
    report = check_layer_counts(result)
    annealed = anneal_network(result.network, ConversionParams(*config.schedule[-1]))
    document = dict(
        table,
        annealed_parameters=network_signature(annealed).parameters,
        report=report.as_dict(),
    )
    writer.write_json("layer-count.json", with_provenance(config, document))
    writer.write_csv("layer-count.csv", LAYER_COUNT_HEADER, _layer_count_rows(table))
    summary = dict(result.layer_counts.as_dict(), value_bound=table["value_bound"])
    return RunResult(_status([report]), writer.written, summary)


def run_verify(config: RunConfig, writer: OutputWriter) -> RunResult:
    context = SuiteContext(
        grid=config.grid,
        seed=config.seed,
        targets=config.targets,
        trials=config.trials,
        samples=config.samples,
        schedule=config.schedule,
        enumeration_limit=config.enumeration_limit,
        budget=config.budget,
        workers=config.workers,
    )
    reports = run_suite(config.suite, context)
    writer.write_json(
        "reports.json",
        with_provenance(config, {"reports": [report.as_dict() for report in reports]}),
    )
    writer.write_csv(
        "reports.csv", REPORT_HEADER, [report.summary_row() for report in reports]
    )
    failed = [report.property for report in reports if not report.ok]
    summary = {"reports": len(reports), "unexpected": len(failed)}
    return RunResult(_status(reports), writer.written, summary)


def run_convert(config: RunConfig, writer: OutputWriter) -> RunResult:
    result = construct(config, config.target.load(config.grid))
    rows, witnesses = convergence_table(
        result, config.schedule, config.enumeration_limit
    )
    report = convergence_report(config.grid, rows, witnesses)
    annealed = anneal_network(result.network, ConversionParams(*config.schedule[-1]))
    writer.write_text("annealed.json", dumps_network(annealed))
    writer.write_csv("convergence.csv", CONVERGENCE_HEADER, [r.as_dict() for r in rows])
    document = {
        "rows": [row.as_dict() for row in rows],
        "report": report.as_dict(),
        "signature": list(network_signature(annealed).as_tuple()),
    }
    writer.write_json("convergence.json", with_provenance(config, document))
    summary = {"final_error": rows[-1].sup_error}
    return RunResult(_status([report]), writer.written, summary)


def run_dp_report(config: RunConfig, writer: OutputWriter) -> RunResult:
    """d_p between target and network; the exact cube sum only in exact mode."""
    fbar = config.target.load(config.grid)
    result = construct(config, fbar)
    g = network_function(result.network)
    exact = config.mode is Mode.EXACT
    estimates, reports, rows = [], [], []
    for p in config.p_values:
        estimate = estimate_dp(
            fbar,
            g,
            p,
            config.grid,
            seed=config.seed,
            samples=config.samples,
            exact=exact,
            limit=config.enumeration_limit,
        )
        estimates.append(estimate)
        bound = fbar.bound(p)
        if exact:
            reports.append(
                check_distance_bound(config.grid, estimate, bound, config.seed)
            )
        rows.append(
            {
                "p": p,
                "samples": estimate.samples,
                "monte_carlo": estimate.monte_carlo,
                "standard_error": estimate.standard_error,
                "exact": estimate.exact,
                "bound": bound,
            }
        )
    document = {
        "estimates": [estimate.as_dict() for estimate in estimates],
        "reports": [report.as_dict() for report in reports],
    }
    writer.write_json("dp.json", with_provenance(config, document))
    writer.write_csv("dp.csv", DP_HEADER, rows)
    summary = {f"d_{row['p']:g}": row["monte_carlo"] for row in rows}
    return RunResult(_status(reports), writer.written, summary)


RUNNERS: Dict[str, Callable[[RunConfig, OutputWriter], RunResult]] = {
    "construct": run_construct,
    "verify": run_verify,
    "convert": run_convert,
    "dp-report": run_dp_report,
    "layer-count": run_layer_count,
}


def run(config: RunConfig) -> RunResult:
    """Run one command and write its files into config.output.

    Raises:
        Seq2SeqUnivError: for invalid input, exhausted budgets and failed
            constructions; exit_status_for maps it to an exit status
    """
    logger.info("Running %s on %s grid", config.command, config.grid)
    result = RUNNERS[config.command](config, OutputWriter(config.output))
    logger.info("%s finished with status %s", config.command, result.status)
    return result
