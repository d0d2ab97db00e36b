import numpy as np
import pytest

from seq2seq_univ.exceptions import ShapeError
from sublayers.factories import (
    AttnSublayerFactory,
    BProjSublayerFactory,
    FFSublayerFactory,
    SepConvSublayerFactory,
)
from tensorcore.scalars import Mode
from verifier.equivariance import (
    MAX_DISTINCTNESS_VECTORS,
    check_equivariance,
    check_projection_distinctness,
    equivariance_subjects,
    one_token_variants,
    permutations,
    projection_is_dense,
)
from verifier.reports import Outcome


@pytest.mark.parametrize(
    "subject",
    [
        lambda: AttnSublayerFactory(d=2),
        lambda: AttnSublayerFactory(d=2, average=True),
        lambda: FFSublayerFactory(d=2),
        lambda: FFSublayerFactory(d=2, phi=True),
    ],
    ids=["attention", "average", "feed_forward", "phi"],
)
def test_token_wise_and_attention_sublayers_are_equivariant(subject):
    report = check_equivariance(subject(), 3, trials=5)
    assert report.outcome is Outcome.PASS
    assert report.ok
    assert report.scope["permutations"] == 6


@pytest.mark.parametrize(
    "subject",
    [lambda: BProjSublayerFactory(d=2, n=3), lambda: SepConvSublayerFactory(d=2, k=3)],
    ids=["bproj", "sepconv"],
)
def test_position_dependent_sublayers_are_expected_to_fail(subject):
    report = check_equivariance(subject(), 3, trials=5, mode=Mode.FLOAT)
    assert report.expected is Outcome.FAIL
    assert report.outcome is Outcome.FAIL
    assert report.ok
    assert report.witness().shape == (2, 3)


def test_equivariance_needs_two_tokens():
    with pytest.raises(ShapeError):
        check_equivariance(FFSublayerFactory(d=1), 1)


def test_long_sequences_sample_permutations():
    rng = np.random.default_rng(0)
    assert len(permutations(4, rng, 3)) == 24
    sampled = permutations(6, rng, 3)
    assert len(sampled) == 3
    assert all(sorted(perm) == list(range(6)) for perm in sampled)


def test_one_token_variants():
    vectors = one_token_variants(3)
    assert vectors.shape == (8, 3)
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            assert np.count_nonzero(vectors[i] - vectors[j]) == 1


def test_one_token_variants_count():
    assert one_token_variants(6).shape == (64, 6)
    assert one_token_variants(12).shape == (MAX_DISTINCTNESS_VECTORS, 12)
    assert one_token_variants(3, count=5).shape == (5, 3)


@pytest.mark.parametrize("W_P", [np.eye(3), np.ones((3, 3))])
def test_projection_density_rejects_sparse_or_repeated(W_P):
    assert not projection_is_dense(one_token_variants(3), W_P)


def test_projection_density():
    W_P = np.array([[1, 2, 4], [0, 1, 0], [0, 0, 1]], dtype=np.float64)
    assert projection_is_dense(one_token_variants(3), W_P)


def test_projection_density_checks_every_pair():
    W_P = np.array([[1, 2, 4], [0, 1, 0], [0, 0, 1]], dtype=np.float64)
    vectors = np.array([[1, 2, 3], [2, 2, 3], [2, 3, 3]], dtype=np.float64)
    assert not projection_is_dense(vectors, W_P)


@pytest.mark.parametrize("n,vectors", [(4, 16), (6, 64)])
def test_projection_distinctness(n, vectors):
    report = check_projection_distinctness(n, seeds=20, seed=1)
    assert report.ok
    assert report.scope["vectors"] == vectors
    assert report.metrics["rate"] >= 0.99


def test_equivariance_subjects_are_seeded():
    kinds = ("attention", "bproj")
    first = equivariance_subjects(2, 3, 5, kinds)
    second = equivariance_subjects(2, 3, 5, kinds)
    assert [name for name, _ in first] == list(kinds)
    assert np.array_equal(first[1][1].W_P, second[1][1].W_P)
