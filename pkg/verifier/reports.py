import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional

import numpy as np

from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode

logger = logging.getLogger(__name__)


class Outcome(Enum):
    PASS: str = "pass"
    FAIL: str = "fail"


def matrix_payload(X: SeqMatrix) -> dict:
    """JSON friendly form of a matrix that decodes back to the same values."""
    if X.mode is Mode.EXACT:
        values = [[str(value) for value in row] for row in X.to_list()]
    else:
        values = [[float(value) for value in row] for row in X.to_list()]
    return {"mode": X.mode.value, "values": values}


def matrix_from_payload(payload: dict) -> SeqMatrix:
    mode = Mode(payload["mode"])
    if mode is Mode.EXACT:
        values = [[Fraction(value) for value in row] for row in payload["values"]]
        return SeqMatrix(np.array(values, dtype=object), mode)
    return SeqMatrix(payload["values"], mode)


def plain(value):
    """Fractions to strings and numpy scalars to Python ones, recursively."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    return value


@dataclass
class VerificationReport:
    """Outcome of one property check.

    A failing check always carries the input that reproduces the failure.
    Checks that are meant to fail (negative controls) set expected to FAIL.
    """

    property: str
    scope: dict
    outcome: Outcome
    expected: Outcome = Outcome.PASS
    counterexample: Optional[dict] = None
    metrics: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.outcome is Outcome.FAIL and self.counterexample is None:
            raise ValueError(f"Failed check {self.property} has no counterexample.")

    @classmethod
    def passed(cls, property: str, scope: dict, **kwargs) -> "VerificationReport":
        return cls(property, scope, Outcome.PASS, **kwargs)

    @classmethod
    def failed(
        cls, property: str, scope: dict, witness: SeqMatrix, **kwargs
    ) -> "VerificationReport":
        payload = matrix_payload(witness)
        return cls(property, scope, Outcome.FAIL, counterexample=payload, **kwargs)

    @property
    def ok(self) -> bool:
        return self.outcome is self.expected

    def witness(self) -> Optional[SeqMatrix]:
        if self.counterexample is None:
            return None
        return matrix_from_payload(self.counterexample)

    def as_dict(self) -> dict:
        return {
            "property": self.property,
            "scope": plain(self.scope),
            "outcome": self.outcome.value,
            "expected": self.expected.value,
            "ok": self.ok,
            "counterexample": self.counterexample,
            "metrics": plain(self.metrics),
            "seed": self.seed,
        }

    def summary_row(self) -> dict:
        """One line of the CSV summary."""
        metric = next(iter(sorted(self.metrics.items())), ("", ""))
        return {
            "property": self.property,
            "scope": " ".join(
                f"{k}={v}" for k, v in sorted(plain(self.scope).items())
            ),
            "pass": self.ok,
            "metric": f"{metric[0]}={plain(metric[1])}" if metric[0] else "",
        }


def log_report(report: VerificationReport) -> VerificationReport:
    logger.info(
        "%s on %s: %s (expected %s)",
        report.property,
        plain(report.scope),
        report.outcome.value,
        report.expected.value,
    )
    return report


def sort_reports(reports: List[VerificationReport]) -> List[VerificationReport]:
    return sorted(
        reports,
        key=lambda report: (
            report.property,
            repr(plain(report.scope)),
            report.seed or 0,
        ),
    )
