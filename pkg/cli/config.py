import json
import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import tomli
from django.conf import settings

from constructor.grid import GridParams
from constructor.targets import (
    BUILTIN_TARGETS,
    PiecewiseConstantFn,
    builtin_target,
    load_target,
)
from converter.annealing import ConversionParams
from seq2seq_univ.exceptions import (
    ConfigError,
    ConversionError,
    GridError,
    ModeError,
    ShapeError,
)
from tensorcore.scalars import Mode, format_delta
from verifier.convergence import DEFAULT_SCHEDULE

logger = logging.getLogger(__name__)

COMMANDS = ("construct", "verify", "convert", "dp-report", "layer-count")
DEFAULT_P_VALUES = (1, 2)
DEFAULT_SAMPLES = 10_000
DEFAULT_TARGETS = 10
DEFAULT_TRIALS = 20
SCHEDULE_ERRORS = (ConversionError, ModeError, TypeError, ValueError, ZeroDivisionError)
CONVERSION_OVERRIDES = {"lam": "lambdas", "eps": "epsilons"}


@dataclass(frozen=True)
class TargetSpec:
    """A builtin generator or a target JSON file, never both."""

    builtin: Optional[str] = "random"
    path: Optional[str] = None
    seed: int = 0
    value: str = "0"

    @property
    def positional(self) -> bool:
        return self.builtin == "random-positional"

    def load(self, grid: GridParams) -> PiecewiseConstantFn:
        if self.path:
            return load_target(self.path, grid)
        return builtin_target(self.builtin, grid, self.seed, self.value)

    def as_dict(self) -> dict:
        if self.path:
            return {"path": self.path, "seed": self.seed}
        return {"builtin": self.builtin, "seed": self.seed, "value": self.value}


@dataclass(frozen=True)
class RunConfig:
    command: str
    grid: GridParams
    target: TargetSpec
    schedule: Tuple[Tuple[float, str], ...]
    output: str
    mode: Mode = Mode.EXACT
    suite: str = "all"
    seed: int = 0
    budget: Optional[int] = None
    enumeration_limit: Optional[int] = None
    workers: Optional[int] = None
    samples: int = DEFAULT_SAMPLES
    targets: int = DEFAULT_TARGETS
    trials: int = DEFAULT_TRIALS
    p_values: Tuple[float, ...] = DEFAULT_P_VALUES

    def as_dict(self) -> dict:
        """The config as written into every output file."""
        return {
            "command": self.command,
            "grid": self.grid.as_dict(),
            "target": self.target.as_dict(),
            "conversion": {
                "lambdas": [lam for lam, _ in self.schedule],
                "epsilons": [epsilon for _, epsilon in self.schedule],
            },
            "output": self.output,
            "mode": self.mode.value,
            "suite": self.suite,
            "seed": self.seed,
            "budget": self.budget,
            "enumeration_limit": self.enumeration_limit,
            "workers": self.workers,
            "samples": self.samples,
            "targets": self.targets,
            "trials": self.trials,
            "p": list(self.p_values),
        }


def read_config_file(path: str) -> dict:
    """Parse a TOML or, by the .json suffix, a JSON run config."""
    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as fp:
                document = json.load(fp)
        else:
            with open(path, "rb") as fp:
                document = tomli.load(fp)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a table.")
    return document


def merge_overrides(document: dict, overrides: dict) -> dict:
    """Apply flat command line overrides on top of a config document.

    Keys "delta", "d" and "n" go to the grid table, "target" and "seed" to the
    target table (a target ending in .json is a file), "lam" and "eps" replace
    the lambdas and epsilons of the conversion table, everything else goes to
    the top level. None values are ignored.
    """
    merged = dict(document)
    grid = dict(merged.get("grid", {}))
    target = dict(merged.get("target", {}))
    conversion = dict(merged.get("conversion", {}))
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("delta", "d", "n"):
            grid[key] = value
        elif key == "target":
            target.pop("builtin", None)
            target.pop("path", None)
            target["path" if value.endswith(".json") else "builtin"] = value
        elif key == "seed":
            target["seed"] = value
            merged["seed"] = value
        elif key in CONVERSION_OVERRIDES:
            conversion[CONVERSION_OVERRIDES[key]] = list(value)
        else:
            merged[key] = value
    merged["grid"] = grid
    merged["target"] = target
    if conversion:
        merged["conversion"] = conversion
    return merged


def _integer(document: dict, key: str, default=None, minimum: int = 1):
    value = document.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f'"{key}" must be an integer of at least {minimum}.')
    return value


def _grid(raw: dict) -> GridParams:
    delta = raw.get("delta")
    if not isinstance(delta, str):
        raise ConfigError('Grid "delta" must be a string such as "1/4".')
    d = _integer(raw, "d")
    n = _integer(raw, "n", minimum=2)
    if d is None or n is None:
        raise ConfigError('Grid needs "d" and "n".')
    try:
        return GridParams.parse(delta, d, n)
    except (GridError, ShapeError) as e:
        raise ConfigError(str(e)) from e


def _target(raw: dict, seed: int) -> TargetSpec:
    if raw.get("path") and raw.get("builtin"):
        raise ConfigError('Target takes either "path" or "builtin", not both.')
    target_seed = _integer(raw, "seed", seed, minimum=0)
    if raw.get("path"):
        return TargetSpec(builtin=None, path=str(raw["path"]), seed=target_seed)
    builtin = raw.get("builtin", "random")
    if builtin not in BUILTIN_TARGETS:
        choices = ", ".join(BUILTIN_TARGETS)
        raise ConfigError(f'Unknown builtin target "{builtin}", expected {choices}.')
    return TargetSpec(builtin, None, target_seed, str(raw.get("value", "0")))


def _schedule(raw: dict, command: str) -> Tuple[Tuple[float, str], ...]:
    if not raw:
        return DEFAULT_SCHEDULE
    lambdas = list(raw.get("lambdas", []))
    epsilons = list(raw.get("epsilons", []))
    if len(lambdas) != len(epsilons):
        raise ConfigError("Conversion lambdas and epsilons differ in length.")
    if not lambdas:
        if command == "convert":
            raise ConfigError("Conversion schedule must not be empty.")
        return DEFAULT_SCHEDULE
    schedule = []
    for lam, epsilon in zip(lambdas, epsilons):
        try:
            ConversionParams(lam, epsilon)
        except SCHEDULE_ERRORS as e:
            raise ConfigError(f"Malformed conversion schedule: {e}") from e
        schedule.append((float(lam), str(epsilon)))
    return tuple(schedule)


def _p_values(raw) -> Tuple[float, ...]:
    values = raw if isinstance(raw, (list, tuple)) else [raw]
    try:
        values = tuple(float(value) for value in values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Malformed p values: {e}") from e
    if not values or any(not 1 <= value < float("inf") for value in values):
        raise ConfigError("Every p must satisfy 1 <= p < inf.")
    return values


def config_from_dict(document: dict) -> RunConfig:
    """Validate a config document and fill in defaults from settings.

    Raises:
        ConfigError: if a field is missing, malformed or out of range
    """
    command = document.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f'Unknown command "{command}", expected one of {", ".join(COMMANDS)}.'
        )
    grid = _grid(document.get("grid", {}))
    seed = _integer(document, "seed", settings.SEQ2SEQ_UNIV_SEED, minimum=0)
    try:
        mode = Mode(document.get("mode", Mode.EXACT.value))
    except ValueError as e:
        raise ConfigError(f"Unknown mode: {e}") from e
    output = document.get(
        "output", os.path.join(settings.SEQ2SEQ_UNIV_OUTPUT_DIR, command)
    )
    config = RunConfig(
        command=command,
        grid=grid,
        target=_target(document.get("target", {}), seed),
        schedule=_schedule(document.get("conversion", {}), command),
        output=str(output),
        mode=mode,
        suite=str(document.get("suite", "all")),
        seed=seed,
        budget=_integer(document, "budget"),
        enumeration_limit=_integer(document, "enumeration_limit"),
        workers=_integer(document, "workers"),
        samples=_integer(document, "samples", DEFAULT_SAMPLES),
        targets=_integer(document, "targets", DEFAULT_TARGETS),
        trials=_integer(document, "trials", DEFAULT_TRIALS),
        p_values=_p_values(document.get("p", DEFAULT_P_VALUES)),
    )
    logger.debug("Run config for %s on %s grid", command, format_delta(grid.delta))
    return config


def load_config(path: Optional[str] = None, **overrides) -> RunConfig:
    document = read_config_file(path) if path else {}
    return config_from_dict(merge_overrides(document, overrides))
