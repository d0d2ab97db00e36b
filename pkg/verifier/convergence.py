import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from constructor.grid import GridParams
from constructor.pipeline import ConstructionResult
from converter.annealing import ConversionParams, anneal_network, relu4_of_phi
from sublayers.forward import network_forward
from sublayers.layers import Network, PiecewiseLinear3
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode
from verifier.enumeration import all_grid_keys
from verifier.reports import Outcome, VerificationReport, log_report

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (
    (1e1, "1/10"),
    (1e2, "1/100"),
    (1e3, "1/1000"),
    (1e4, "1/10000"),
)
MONOTONE_SLACK = 1e-6
FINAL_TOLERANCE = 1e-3
DIVERGENT_TEMPERATURE = 1e-3
OFF_BAND_SAMPLES = 1000
OFF_BAND_DENOMINATOR = 4096


@dataclass(frozen=True)
class ConvergenceRow:
    lam: float
    epsilon: str
    sup_error: float

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "sup_error": self.sup_error,
        }


def convergence_points(
    grid: GridParams, limit: Optional[int] = None
) -> List[SeqMatrix]:
    """Center and both near corners of every cube."""
    return [X for key in all_grid_keys(grid, limit) for X in grid.cube_samples(key)]


def sup_error(
    network: Network,
    params: ConversionParams,
    points: Sequence[SeqMatrix],
    references: Optional[Sequence[SeqMatrix]] = None,
) -> Tuple[float, SeqMatrix]:
    """Largest entry gap between the annealed and the modified network."""
    annealed = anneal_network(network, params)
    if references is None:
        references = [network_forward(X, network) for X in points]
    worst, witness = 0.0, points[0]
    for X, reference in zip(points, references):
        gap = network_forward(X.to_mode(Mode.FLOAT), annealed).max_abs_diff(reference)
        if not math.isfinite(gap):
            return math.inf, X
        if gap > worst:
            worst, witness = gap, X
    return worst, witness


def convergence_table(
    result: ConstructionResult,
    schedule: Sequence[Tuple[float, str]] = DEFAULT_SCHEDULE,
    limit: Optional[int] = None,
) -> Tuple[List[ConvergenceRow], List[SeqMatrix]]:
    points = convergence_points(result.grid, limit)
    references = [network_forward(X, result.network) for X in points]
    rows, witnesses = [], []
    for lam, epsilon in schedule:
        error, witness = sup_error(
            result.network, ConversionParams(lam, epsilon), points, references
        )
        logger.info("lambda=%s epsilon=%s: sup error %.3g", lam, epsilon, error)
        rows.append(ConvergenceRow(float(lam), str(epsilon), error))
        witnesses.append(witness)
    return rows, witnesses


def check_convergence(
    result: ConstructionResult,
    schedule: Sequence[Tuple[float, str]] = DEFAULT_SCHEDULE,
    tolerance: float = FINAL_TOLERANCE,
    limit: Optional[int] = None,
) -> VerificationReport:
    """Sup error is non-increasing along the schedule and small at its end."""
    rows, witnesses = convergence_table(result, schedule, limit)
    return convergence_report(result.grid, rows, witnesses, tolerance)


def convergence_report(
    grid: GridParams,
    rows: Sequence[ConvergenceRow],
    witnesses: Sequence[SeqMatrix],
    tolerance: float = FINAL_TOLERANCE,
) -> VerificationReport:
    scope = dict(grid.as_dict(), schedule=[row.as_dict() for row in rows])
    metrics = {
        "errors": [row.sup_error for row in rows],
        "final_error": rows[-1].sup_error,
        "tolerance": tolerance,
    }
    for index, (before, after) in enumerate(zip(rows, rows[1:]), start=1):
        if not after.sup_error <= before.sup_error + MONOTONE_SLACK:
            return log_report(
                VerificationReport.failed(
                    "annealing-convergence",
                    scope,
                    witnesses[index],
                    metrics=dict(metrics, step=index),
                )
            )
    if not rows[-1].sup_error < tolerance:
        return log_report(
            VerificationReport.failed(
                "annealing-convergence", scope, witnesses[-1], metrics=metrics
            )
        )
    return log_report(
        VerificationReport.passed("annealing-convergence", scope, metrics=metrics)
    )


def check_small_temperature_diverges(
    result: ConstructionResult, lam: float = DIVERGENT_TEMPERATURE
) -> VerificationReport:
    """Negative control: near-uniform softmax cannot stand in for hardmax.

    Compared on the contextual ids, which stay unshifted when every head
    averages.
    """
    grid = result.grid
    center = grid.cube_center(next(iter(grid.iter_representatives())))
    mapper = result.quantizer + result.contextual
    error, _ = sup_error(mapper, ConversionParams(lam, "1/10000"), [center])
    scope = dict(grid.as_dict(), lam=lam)
    metrics = {"sup_error": error, "tolerance": FINAL_TOLERANCE}
    if error > FINAL_TOLERANCE:
        report = VerificationReport.failed(
            "small-temperature-control",
            scope,
            center,
            expected=Outcome.FAIL,
            metrics=metrics,
        )
    else:
        report = VerificationReport.passed(
            "small-temperature-control", scope, expected=Outcome.FAIL, metrics=metrics
        )
    return log_report(report)


def _phi_activations(network: Network) -> List[PiecewiseLinear3]:
    seen, activations = set(), []
    for sublayer in network.sublayers:
        activation = getattr(sublayer, "activation", None)
        if isinstance(activation, PiecewiseLinear3):
            exact = activation.to_mode(Mode.EXACT)
            if exact not in seen:
                seen.add(exact)
                activations.append(exact)
    return activations


def off_band_points(
    phi: PiecewiseLinear3, epsilon: Fraction, rng: np.random.Generator, count: int
) -> List[Fraction]:
    """Band edges plus seeded points of [c1 - 1, c2 + 1] outside both bands."""
    c1, c2 = phi.c1, phi.c2
    points = [c1 - epsilon, c1, c2 - epsilon, c2]
    scale = OFF_BAND_DENOMINATOR
    span = int((c2 - c1 + 2) * scale)
    while len(points) < count:
        t = c1 - 1 + Fraction(int(rng.integers(0, span + 1)), scale)
        if c1 - epsilon < t < c1 or c2 - epsilon < t < c2:
            continue
        points.append(t)
    return points


def check_off_band_exactness(
    network: Network,
    epsilon,
    seed: int,
    samples: int = OFF_BAND_SAMPLES,
) -> VerificationReport:
    """Every four-ReLU synthesis equals its Phi exactly outside the two bands."""
    eps = ConversionParams(1.0, epsilon).epsilon
    rng = np.random.default_rng(seed)
    activations = _phi_activations(network)
    scope = {"activations": len(activations), "samples": samples, "epsilon": str(eps)}
    float_gap = 0.0
    for phi in activations:
        synthesis = relu4_of_phi(phi, eps)
        points = off_band_points(phi, eps, rng, samples)
        for t in points:
            if synthesis(t) != phi(t):
                witness = SeqMatrix([[t, t]], Mode.EXACT)
                return log_report(
                    VerificationReport.failed(
                        "relu-off-band",
                        scope,
                        witness,
                        metrics={"c1": phi.c1},
                        seed=seed,
                    )
                )
        values = np.array([float(t) for t in points])
        approx = synthesis.evaluate(values)
        reference = phi.to_mode(Mode.FLOAT).evaluate(values)
        float_gap = max(float_gap, float(np.max(np.abs(approx - reference))))
    return log_report(
        VerificationReport.passed(
            "relu-off-band", scope, metrics={"float_max_gap": float_gap}, seed=seed
        )
    )
