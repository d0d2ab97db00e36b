import pytest

from constructor.factories import RandomTargetFactory
from constructor.pipeline import assemble_modified_network
from seq2seq_univ.exceptions import ConfigError
from verifier.reports import Outcome
from verifier.suites import SUITES, SuiteContext, all_ok, check_layer_counts, run_suite


@pytest.fixture
def context(grid_half):
    return SuiteContext(grid=grid_half, seed=777, targets=2, trials=3, samples=500)


def test_unknown_suite(context):
    with pytest.raises(ConfigError):
        run_suite("smoke", context)


def test_pool_size_defaults_to_settings(context, settings):
    settings.SEQ2SEQ_UNIV_WORKERS = 3
    assert context.pool_size == 3


def test_layer_counts(grid_half):
    result = assemble_modified_network(grid_half, RandomTargetFactory(grid=grid_half))
    report = check_layer_counts(result)
    assert report.ok
    assert report.metrics["value_limit"] == 16.0


@pytest.mark.parametrize(
    "suite,properties",
    [
        ("contextual", ["contextual-mapping"]),
        ("shift-oracle", ["shift-oracle"]),
        ("positional", ["end-to-end", "layer-counts"]),
        ("conversion", ["annealing-convergence", "relu-off-band"]),
        ("layer-count", ["layer-counts"]),
    ],
)
def test_suite(context, suite, properties):
    reports = run_suite(suite, context)
    assert [report.property for report in reports] == properties
    assert all_ok(reports), [report.as_dict() for report in reports if not report.ok]


def test_controls_suite(context):
    reports = run_suite("controls", context)
    assert [report.property for report in reports] == [
        "average-contextual-control",
        "small-temperature-control",
    ]
    assert all(report.outcome is Outcome.FAIL for report in reports)
    assert all_ok(reports)


def test_equivariance_suite(context):
    reports = run_suite("equivariance", context)
    subjects = {
        report.scope["subject"]: report
        for report in reports
        if report.property == "equivariance"
    }
    assert set(subjects) == {
        "attention",
        "average_attention",
        "feed_forward",
        "phi_feed_forward",
        "bproj",
        "sepconv",
        "g_bar",
    }
    assert subjects["g_bar"].outcome is Outcome.PASS
    assert subjects["bproj"].outcome is Outcome.FAIL
    assert all_ok(reports)


def test_end_to_end_suite(context):
    reports = run_suite("end-to-end", context)
    names = [report.property for report in reports]
    assert names.count("end-to-end") == 2
    assert names.count("dp-bound") == 2
    assert "shell-zero" in names
    assert all_ok(reports)


def test_suites_are_registered():
    assert set(SUITES) >= {"contextual", "end-to-end", "controls", "layer-count"}
