import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
from django.conf import settings

from constructor.grid import GridParams
from sublayers.forward import network_forward
from sublayers.layers import Network
from tensorcore.matrices import SeqMatrix, as_array
from tensorcore.scalars import Mode
from verifier.enumeration import all_grid_keys
from verifier.reports import VerificationReport, log_report

logger = logging.getLogger(__name__)

SeqFn = Callable[[SeqMatrix], SeqMatrix]

MONTE_CARLO_SAMPLES = 10_000
STANDARD_ERRORS = 3


@dataclass(frozen=True)
class DistanceEstimate:
    """d_p estimated by sampling and, for piecewise constant pairs, exactly.

    The *_power fields are the integrals of ||f - g||_p^p before the root is
    taken; standard_error belongs to the Monte Carlo power.
    """

    p: float
    samples: int
    monte_carlo: float
    monte_carlo_power: float
    standard_error: float
    exact: Optional[float] = None
    exact_power: Optional[Union[Fraction, float]] = None

    @property
    def within_standard_errors(self) -> Optional[bool]:
        if self.exact_power is None:
            return None
        gap = abs(self.monte_carlo_power - float(self.exact_power))
        return gap <= STANDARD_ERRORS * self.standard_error

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "samples": self.samples,
            "monte_carlo": self.monte_carlo,
            "monte_carlo_power": self.monte_carlo_power,
            "standard_error": self.standard_error,
            "exact": self.exact,
            "exact_power": None if self.exact_power is None else str(self.exact_power),
            "within_standard_errors": self.within_standard_errors,
        }


def network_function(network: Network) -> SeqFn:
    """Evaluate a network on inputs of either mode.

    Float inputs run through a float copy of the network, built once.
    """
    copies = {network.mode: network}

    def evaluate(X: SeqMatrix) -> SeqMatrix:
        if X.mode not in copies:
            copies[X.mode] = network.to_mode(X.mode)
        return network_forward(X, copies[X.mode])

    return evaluate


def _power(difference: np.ndarray, p: float):
    if difference.dtype == object and float(p).is_integer():
        return sum((abs(value) ** int(p) for value in difference.flat), Fraction(0))
    return float(np.sum(np.abs(as_array(difference, Mode.FLOAT)) ** p))


def monte_carlo_power(
    f: SeqFn, g: SeqFn, p: float, d: int, n: int, seed: int, samples: int
):
    """Mean and standard error of ||f(X) - g(X)||_p^p over uniform [0, 1]^(d x n)."""
    rng = np.random.default_rng(seed)
    values = np.empty(samples)
    for i in range(samples):
        X = SeqMatrix(rng.random((d, n)), Mode.FLOAT)
        values[i] = _power((f(X).data - g(X).data), p)
    mean = float(values.mean())
    error = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, error


def cube_sum_power(
    f: SeqFn, g: SeqFn, p: float, grid: GridParams, limit: Optional[int] = None
):
    """Sum over the grid of delta^(dn) ||f - g||_p^p at each cube center.

    Exact for functions that are constant on every cube.
    """
    volume = grid.delta ** (grid.d * grid.n)
    total = Fraction(0)
    for key in all_grid_keys(grid, limit):
        C = grid.cube_center(key)
        total = total + volume * _power(f(C).data - g(C).data, p)
    return total


def estimate_dp(
    f: SeqFn,
    g: SeqFn,
    p: float,
    grid: GridParams,
    seed: Optional[int] = None,
    samples: int = MONTE_CARLO_SAMPLES,
    exact: bool = True,
    limit: Optional[int] = None,
) -> DistanceEstimate:
    """d_p(f, g) = (integral of ||f(X) - g(X)||_p^p dX)^(1/p) on [0, 1]^(d x n).

    Both functions are taken to vanish outside the unit box. The cube sum is
    only reported when exact is set, i.e. when both are piecewise constant.

    Raises:
        ValueError: if p < 1 or samples < 1
    """
    if not 1 <= p < math.inf:
        raise ValueError(f"d_p needs 1 <= p < inf, got {p}.")
    if samples < 1:
        raise ValueError(f"Monte Carlo needs at least one sample, got {samples}.")
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    mean, error = monte_carlo_power(f, g, p, grid.d, grid.n, seed, samples)
    exact_power = cube_sum_power(f, g, p, grid, limit) if exact else None
    estimate = DistanceEstimate(
        p=float(p),
        samples=samples,
        monte_carlo=mean ** (1 / p),
        monte_carlo_power=mean,
        standard_error=error,
        exact=None if exact_power is None else float(exact_power) ** (1 / p),
        exact_power=exact_power,
    )
    logger.info(
        "d_%s on %s grid: monte carlo %.6g, exact %s",
        p,
        grid,
        estimate.monte_carlo,
        estimate.exact,
    )
    return estimate


def check_distance_bound(
    grid: GridParams,
    estimate: DistanceEstimate,
    bound: float,
    seed: Optional[int] = None,
) -> VerificationReport:
    """Exact d_p within (B^p * mismatch fraction)^(1/p), sampling within 3 SE."""
    p = estimate.p
    ceiling = (bound**p * float(grid.mismatch_fraction)) ** (1 / p)
    scope = dict(grid.as_dict(), p=p, samples=estimate.samples)
    metrics = dict(estimate.as_dict(), bound=ceiling, B=bound)
    holds = estimate.exact is not None and estimate.exact <= ceiling + 1e-12
    if holds and estimate.within_standard_errors:
        report = VerificationReport.passed(
            "dp-bound", scope, metrics=metrics, seed=seed
        )
    else:
        # The distance has no single witness input; the first cube center stands in.
        witness = grid.cube_center(next(iter(grid.iter_keys())))
        report = VerificationReport.failed(
            "dp-bound", scope, witness, metrics=metrics, seed=seed
        )
    return log_report(report)
