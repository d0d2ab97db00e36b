import json
import os
from fractions import Fraction

import pytest

from cli.config import (
    TargetSpec,
    config_from_dict,
    load_config,
    merge_overrides,
    read_config_file,
)
from seq2seq_univ.exceptions import ConfigError
from tensorcore.scalars import Mode
from verifier.convergence import DEFAULT_SCHEDULE

TOML_CONFIG = """
command = "verify"
suite = "contextual"
seed = 3
samples = 200

[grid]
delta = "1/2"
d = 1
n = 2

[conversion]
lambdas = [10.0, 100.0]
epsilons = ["1/10", "1/100"]
"""


def grid_document(**extra):
    return dict({"grid": {"delta": "1/2", "d": 1, "n": 2}}, **extra)


@pytest.fixture
def toml_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TOML_CONFIG, encoding="utf-8")
    return str(path)


def test_load_toml_config(toml_config):
    config = load_config(toml_config)
    assert config.command == "verify"
    assert config.suite == "contextual"
    assert config.grid.delta == Fraction(1, 2)
    assert config.seed == 3
    assert config.target == TargetSpec("random", None, 3, "0")
    assert config.samples == 200
    assert config.schedule == ((10.0, "1/10"), (100.0, "1/100"))
    assert config.mode is Mode.EXACT


def test_load_json_config(tmp_path):
    path = tmp_path / "run.json"
    document = grid_document(command="dp-report", mode="float", p=[1, 3])
    path.write_text(json.dumps(document), encoding="utf-8")
    config = load_config(str(path))
    assert config.command == "dp-report"
    assert config.mode is Mode.FLOAT
    assert config.p_values == (1.0, 3.0)
    assert config.schedule == DEFAULT_SCHEDULE


def test_flags_override_the_file(toml_config):
    config = load_config(
        toml_config, command="construct", delta="1/4", target="identity", seed=None
    )
    assert config.command == "construct"
    assert config.grid.delta == Fraction(1, 4)
    assert config.target.builtin == "identity"
    assert config.seed == 3


def test_defaults_from_settings(settings):
    settings.SEQ2SEQ_UNIV_OUTPUT_DIR = "out"
    config = load_config(command="layer-count", delta="1/2", d=1, n=2)
    assert config.seed == 777
    assert config.output == os.path.join("out", "layer-count")
    assert config.budget is None
    assert config.p_values == (1.0, 2.0)


def test_merge_overrides():
    document = {"target": {"builtin": "random", "seed": 1}, "grid": {"d": 2}}
    merged = merge_overrides(
        document, {"target": "fbar.json", "seed": 5, "n": 3, "suite": None}
    )
    assert merged["target"] == {"path": "fbar.json", "seed": 5}
    assert merged["grid"] == {"d": 2, "n": 3}
    assert merged["seed"] == 5
    assert "suite" not in merged
    assert document["target"] == {"builtin": "random", "seed": 1}


def test_schedule_overrides():
    document = grid_document(conversion={"lambdas": [1.0], "epsilons": ["1/2"]})
    merged = merge_overrides(document, {"lam": [10.0, 100.0], "eps": None})
    assert merged["conversion"] == {"lambdas": [10.0, 100.0], "epsilons": ["1/2"]}
    assert document["conversion"] == {"lambdas": [1.0], "epsilons": ["1/2"]}
    assert "conversion" not in merge_overrides({}, {"lam": None, "eps": None})

    config = load_config(
        command="convert", delta="1/2", d=1, n=2, lam=[10.0], eps=["1/10"]
    )
    assert config.schedule == ((10.0, "1/10"),)


def test_target_file_spec():
    document = grid_document(command="construct", target={"path": "t.json"})
    config = config_from_dict(document)
    assert config.target.path == "t.json"
    assert config.target.builtin is None
    assert config.target.as_dict() == {"path": "t.json", "seed": 777}


def test_as_dict(toml_config):
    document = load_config(toml_config, output="runs/verify").as_dict()
    assert document["grid"] == {"delta": "1/2", "d": 1, "n": 2}
    assert document["conversion"] == {
        "lambdas": [10.0, 100.0],
        "epsilons": ["1/10", "1/100"],
    }
    assert document["output"] == "runs/verify"
    assert document["mode"] == "exact"


@pytest.mark.parametrize(
    "document",
    [
        grid_document(command="train"),
        grid_document(command="verify", mode="double"),
        grid_document(command="verify", seed=-1),
        grid_document(command="verify", samples=0),
        grid_document(command="verify", budget=True),
        grid_document(command="verify", p=[0.5]),
        grid_document(command="verify", p=["two"]),
        grid_document(command="verify", target={"builtin": "sine"}),
        grid_document(command="verify", target={"builtin": "random", "path": "t.json"}),
        grid_document(command="verify", conversion={"lambdas": [1.0], "epsilons": []}),
        grid_document(command="convert", conversion={"lambdas": [], "epsilons": []}),
        grid_document(
            command="convert", conversion={"lambdas": [0], "epsilons": ["1"]}
        ),
        grid_document(
            command="convert", conversion={"lambdas": [1], "epsilons": ["abc"]}
        ),
        {"command": "verify", "grid": {"delta": 0.5, "d": 1, "n": 2}},
        {"command": "verify", "grid": {"delta": "2/3", "d": 1, "n": 2}},
        {"command": "verify", "grid": {"delta": "1/2", "d": 1, "n": 1}},
        {"command": "verify", "grid": {"delta": "1/2", "d": 1}},
    ],
)
def test_invalid_config(document):
    with pytest.raises(ConfigError):
        config_from_dict(document)


def test_unreadable_config_files(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / "missing.toml"))
    broken = tmp_path / "broken.toml"
    broken.write_text("command = ", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(str(broken))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(str(listing))
