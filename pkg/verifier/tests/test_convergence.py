from fractions import Fraction

import numpy as np

from constructor.factories import RandomTargetFactory
from constructor.pipeline import assemble_modified_network
from converter.annealing import ConversionParams
from sublayers.layers import Piece, PiecewiseLinear3
from tensorcore.matrices import SeqMatrix
from verifier.convergence import (
    ConvergenceRow,
    check_convergence,
    check_off_band_exactness,
    check_small_temperature_diverges,
    convergence_points,
    convergence_report,
    off_band_points,
    sup_error,
)
from verifier.reports import Outcome

F = Fraction

WINDOW = PiecewiseLinear3(F(-1, 4), F(1, 4), (Piece(0, 0), Piece(0, 1), Piece(0, 0)))


def _result(grid):
    return assemble_modified_network(grid, RandomTargetFactory(grid=grid, seed=7))


def test_convergence_points(grid_half):
    assert len(convergence_points(grid_half)) == 12


def test_off_band_points():
    eps = F(1, 100)
    points = off_band_points(WINDOW, eps, np.random.default_rng(0), 50)
    assert len(points) == 50
    assert points[:4] == [F(-26, 100), F(-1, 4), F(24, 100), F(1, 4)]
    for t in points[4:]:
        assert not F(-26, 100) < t < F(-1, 4)
        assert not F(24, 100) < t < F(1, 4)
        assert F(-5, 4) <= t <= F(5, 4)


def test_off_band_exactness(grid_half):
    report = check_off_band_exactness(_result(grid_half).network, "1/10000", seed=1)
    assert report.ok
    assert report.scope["activations"] >= 2
    assert report.metrics["float_max_gap"] < 1e-6


def test_annealed_network_converges(grid_half):
    report = check_convergence(_result(grid_half))
    assert report.ok, report.as_dict()
    errors = report.metrics["errors"]
    assert len(errors) == 4
    assert errors[-1] < 1e-3


def test_sup_error_shrinks_with_temperature(grid_half):
    result = _result(grid_half)
    points = convergence_points(grid_half)
    coarse, _ = sup_error(result.network, ConversionParams(10, "1/10"), points)
    fine, _ = sup_error(result.network, ConversionParams(1e4, "1/10000"), points)
    assert fine < coarse


def test_small_temperature_is_a_control(grid_half):
    report = check_small_temperature_diverges(_result(grid_half))
    assert report.outcome is Outcome.FAIL
    assert report.expected is Outcome.FAIL
    assert report.ok


def test_convergence_report_failures(grid_half):
    witnesses = [SeqMatrix.exact([[0, F(1, 2)]])] * 2
    rising = [ConvergenceRow(10.0, "1/10", 0.1), ConvergenceRow(100.0, "1/100", 0.2)]
    report = convergence_report(grid_half, rising, witnesses)
    assert not report.ok
    assert report.metrics["step"] == 1

    flat = [ConvergenceRow(10.0, "1/10", 0.1), ConvergenceRow(100.0, "1/100", 0.1)]
    report = convergence_report(grid_half, flat, witnesses)
    assert not report.ok
    assert "step" not in report.metrics

    falling = [ConvergenceRow(10.0, "1/10", 0.1), ConvergenceRow(100.0, "1/100", 0.0)]
    assert convergence_report(grid_half, falling, witnesses).ok
