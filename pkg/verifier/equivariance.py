import itertools
import logging
from typing import Callable, Optional, Sequence, Union

import factory.random
import numpy as np
from django.conf import settings

from seq2seq_univ.exceptions import ShapeError
from sublayers.factories import (
    AttnSublayerFactory,
    BProjSublayerFactory,
    FFSublayerFactory,
    SepConvSublayerFactory,
)
from sublayers.forward import network_forward, sublayer_forward
from sublayers.layers import (
    AttnSublayer,
    BProjSublayer,
    Network,
    Normalizer,
    SepConvSublayer,
    Sublayer,
)
from tensorcore.matrices import SeqMatrix
from tensorcore.scalars import Mode
from verifier.enumeration import random_matrix
from verifier.reports import Outcome, VerificationReport, log_report

logger = logging.getLogger(__name__)

FLOAT_TOLERANCE = 1e-9
MAX_EXHAUSTIVE_N = 4
DISTINCTNESS_SEEDS = 100
DISTINCTNESS_RATE = 0.99
MAX_DISTINCTNESS_VECTORS = 1024

Subject = Union[Network, Sublayer]
Sampler = Callable[[np.random.Generator, int, int, Mode], SeqMatrix]


def _breaks_equivariance(subject: Subject) -> bool:
    """Token mixers whose weights depend on absolute positions."""
    sublayers = subject.sublayers if isinstance(subject, Network) else (subject,)
    if isinstance(subject, Network) and subject.positional_encoding is not None:
        return True
    return any(isinstance(s, (BProjSublayer, SepConvSublayer)) for s in sublayers)


def _needs_float(subject: Subject) -> bool:
    sublayers = subject.sublayers if isinstance(subject, Network) else (subject,)
    return any(
        isinstance(s, AttnSublayer) and s.normalizer is Normalizer.SOFTMAX
        for s in sublayers
    )


def as_function(subject: Subject) -> Callable[[SeqMatrix], SeqMatrix]:
    if isinstance(subject, Network):
        return lambda X: network_forward(X, subject)
    return lambda X: sublayer_forward(X, subject)


def permutations(n: int, rng: np.random.Generator, trials: int):
    """All n! permutations for short sequences, seeded samples otherwise."""
    if n <= MAX_EXHAUSTIVE_N:
        return list(itertools.permutations(range(n)))
    return [tuple(int(i) for i in rng.permutation(n)) for _ in range(trials)]


def _matches(left: SeqMatrix, right: SeqMatrix) -> bool:
    if left.mode is Mode.EXACT:
        return left == right
    return left.allclose(right, FLOAT_TOLERANCE)


def check_equivariance(
    subject: Subject,
    n: int,
    trials: int = 20,
    mode: Mode = Mode.EXACT,
    seed: Optional[int] = None,
    name: Optional[str] = None,
    sampler: Sampler = random_matrix,
) -> VerificationReport:
    """f(XP) == f(X)P for every permutation P and `trials` random inputs X.

    Inputs come from `sampler`, standard random matrices unless given.

    BProj and SepConv sublayers, and networks with a positional encoding, are
    expected to fail; the report then carries the input that shows it.
    """
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    if n < 2:
        raise ShapeError(f"Sequence length must be at least 2, got {n}.")
    if _needs_float(subject):
        mode = Mode.FLOAT
    subject = subject.to_mode(mode)
    f = as_function(subject)
    rng = np.random.default_rng(seed)
    expected = Outcome.FAIL if _breaks_equivariance(subject) else Outcome.PASS
    perms = permutations(n, rng, trials)
    scope = {
        "subject": name or type(subject).__name__,
        "d": subject.d,
        "n": n,
        "mode": mode.value,
        "trials": trials,
        "permutations": len(perms),
    }
    worst = 0.0
    for _ in range(trials):
        X = sampler(rng, subject.d, n, mode)
        Y = f(X)
        for perm in perms:
            left, right = f(X.permute(perm)), Y.permute(perm)
            worst = max(worst, left.max_abs_diff(right))
            if not _matches(left, right):
                return log_report(
                    VerificationReport.failed(
                        "equivariance",
                        scope,
                        X,
                        expected=expected,
                        metrics={"permutation": list(perm), "deviation": worst},
                        seed=seed,
                    )
                )
    return log_report(
        VerificationReport.passed(
            "equivariance",
            scope,
            expected=expected,
            metrics={"max_deviation": worst},
            seed=seed,
        )
    )


def one_token_variants(n: int, count: Optional[int] = None) -> np.ndarray:
    """Context vectors that differ pairwise in the first token only.

    `count` defaults to 2^n, capped at MAX_DISTINCTNESS_VECTORS.
    """
    count = count or min(2**n, MAX_DISTINCTNESS_VECTORS)
    rows = np.tile(np.arange(1, n + 1, dtype=np.float64), (count, 1))
    rows[:, 0] += np.arange(count)
    return rows


def projection_is_dense(vectors: np.ndarray, W_P: np.ndarray, tolerance=1e-12) -> bool:
    """Projected rows have distinct entries and differ from each other everywhere."""
    projected = vectors @ W_P
    for i, row in enumerate(projected):
        if not np.all(np.diff(np.sort(row)) > tolerance):
            return False
        differences = projected[i + 1 :] - row
        if not np.all(np.abs(differences) > tolerance):
            return False
    return True


def check_projection_distinctness(
    n: int,
    seeds: int = DISTINCTNESS_SEEDS,
    seed: Optional[int] = None,
    rate: float = DISTINCTNESS_RATE,
) -> VerificationReport:
    """Random Gaussian W_P maps sparse context differences to dense ones."""
    if seed is None:
        seed = settings.SEQ2SEQ_UNIV_SEED
    vectors = one_token_variants(n)
    successes = 0
    witness = None
    for offset in range(seeds):
        W_P = np.random.default_rng(seed + offset).standard_normal((n, n))
        if projection_is_dense(vectors, W_P):
            successes += 1
        elif witness is None:
            witness = SeqMatrix(W_P, Mode.FLOAT)
    observed = successes / seeds
    scope = {"n": n, "vectors": len(vectors), "seeds": seeds}
    metrics = {"rate": observed, "required_rate": rate}
    if observed >= rate:
        report = VerificationReport.passed(
            "projection-distinctness", scope, metrics=metrics, seed=seed
        )
    else:
        report = VerificationReport.failed(
            "projection-distinctness", scope, witness, metrics=metrics, seed=seed
        )
    return log_report(report)


def equivariance_subjects(d: int, n: int, seed: int, kinds: Sequence[str]):
    """Named random sublayers used by the equivariance suite."""
    factory.random.reseed_random(seed)
    builders = {
        "attention": lambda: AttnSublayerFactory(d=d),
        "average_attention": lambda: AttnSublayerFactory(d=d, average=True),
        "feed_forward": lambda: FFSublayerFactory(d=d),
        "phi_feed_forward": lambda: FFSublayerFactory(d=d, phi=True),
        "bproj": lambda: BProjSublayerFactory(d=d, n=n),
        "sepconv": lambda: SepConvSublayerFactory(d=d, k=3),
    }
    return [(kind, builders[kind]()) for kind in kinds]
