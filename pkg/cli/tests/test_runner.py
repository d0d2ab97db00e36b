import json
import os
from dataclasses import replace

import pytest

from cli.config import load_config
from cli.runner import exit_status_for, run
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
    TargetError,
    ValueWindowCollisionError,
)


def half_grid_config(tmp_path, command, **overrides):
    output = str(tmp_path / command)
    return load_config(
        command=command, delta="1/2", d=1, n=2, output=output, **overrides
    )


def read_json(config, name):
    with open(os.path.join(config.output, name), encoding="utf-8") as fp:
        return json.load(fp)


@pytest.mark.parametrize(
    "error,status",
    [
        (BudgetExceededError("budget"), EXIT_BUDGET_EXCEEDED),
        (ConfigError("config"), EXIT_CONFIG_ERROR),
        (GridError("grid"), EXIT_CONFIG_ERROR),
        (TargetError("target"), EXIT_CONFIG_ERROR),
        (ValueWindowCollisionError("windows"), EXIT_PROPERTY_FAILURE),
    ],
)
def test_exit_status_for(error, status):
    assert exit_status_for(error) == status


def test_construct(tmp_path):
    config = half_grid_config(tmp_path, "construct")
    result = run(config)
    assert result.status == EXIT_OK
    assert result.files == [
        "network.json",
        "target.json",
        "layer-counts.json",
        "layer-counts.csv",
    ]
    assert result.summary == {"quantizer": 3, "contextual": 3, "value": 4}
    counts = read_json(config, "layer-counts.json")
    assert counts["matches_closed_form"]
    assert counts["config"]["grid"]["delta"] == "1/2"
    target = read_json(config, "target.json")
    assert target["equivariant"]


def test_construct_is_reproducible(tmp_path):
    config = half_grid_config(tmp_path, "construct", seed=9)
    contents = []
    for _ in range(2):
        run(config)
        contents.append(
            {
                name: (tmp_path / "construct" / name).read_bytes()
                for name in sorted(os.listdir(config.output))
            }
        )
    assert contents[0] == contents[1]


def test_construct_positional_target(tmp_path):
    config = half_grid_config(tmp_path, "construct", target="random-positional")
    result = run(config)
    assert result.summary == {"quantizer": 4, "contextual": 5, "value": 8}
    assert read_json(config, "network.json")["positional_encoding"] is not None


def test_construct_from_a_target_file(tmp_path):
    first = half_grid_config(tmp_path, "construct", target="sum-pool")
    run(first)
    path = os.path.join(first.output, "target.json")
    config = load_config(
        command="construct",
        delta="1/2",
        d=1,
        n=2,
        target=path,
        output=str(tmp_path / "again"),
    )
    run(config)
    assert read_json(config, "target.json") == read_json(first, "target.json")


def test_target_file_on_another_grid(tmp_path):
    first = half_grid_config(tmp_path, "construct")
    run(first)
    config = load_config(
        command="construct",
        delta="1/3",
        d=1,
        n=2,
        target=os.path.join(first.output, "target.json"),
        output=str(tmp_path / "again"),
    )
    with pytest.raises(TargetError):
        run(config)


def test_budget(tmp_path):
    with pytest.raises(BudgetExceededError):
        run(half_grid_config(tmp_path, "construct", budget=3))


def test_layer_count(tmp_path):
    config = half_grid_config(tmp_path, "layer-count")
    result = run(config)
    assert result.status == EXIT_OK
    assert result.summary["value_bound"] == 4.0
    document = read_json(config, "layer-count.json")
    assert document["report"]["ok"]
    assert document["annealed_parameters"] > document["parameters"]
    with open(os.path.join(config.output, "layer-count.csv"), encoding="utf-8") as fp:
        assert fp.readline() == "component,measured,closed_form\n"


def test_verify(tmp_path):
    config = half_grid_config(tmp_path, "verify", suite="contextual")
    result = run(config)
    assert result.status == EXIT_OK
    assert result.summary == {"reports": 1, "unexpected": 0}
    document = read_json(config, "reports.json")
    assert [report["property"] for report in document["reports"]] == [
        "contextual-mapping"
    ]
    assert document["config"]["suite"] == "contextual"


def test_verify_unknown_suite(tmp_path):
    with pytest.raises(ConfigError):
        run(half_grid_config(tmp_path, "verify", suite="smoke"))


def test_convert(tmp_path):
    config = half_grid_config(tmp_path, "convert")
    result = run(config)
    assert result.status == EXIT_OK
    assert result.summary["final_error"] < 1e-3
    document = read_json(config, "convergence.json")
    assert len(document["rows"]) == 4
    assert document["signature"] == [2, 1, 4]
    annealed = read_json(config, "annealed.json")
    assert annealed["mode"] == "float"


def test_dp_report_in_float_mode(tmp_path):
    config = half_grid_config(tmp_path, "dp-report", mode="float")
    config = replace(config, samples=100)
    result = run(config)
    assert result.status == EXIT_OK
    assert set(result.summary) == {"d_1", "d_2"}
    document = read_json(config, "dp.json")
    assert document["reports"] == []
    assert all(estimate["exact"] is None for estimate in document["estimates"])
