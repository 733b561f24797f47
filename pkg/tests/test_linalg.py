import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepinfo.errors import DegenerateRowError, InvalidDataError, InvalidRankError, NotPositiveDefiniteError
from deepinfo.linalg import batched_log_pivots, block_means, chol_logdet, randomized_pca, rdm
from deepinfo.linalg.logdet import _batched_log_pivots_numba, _batched_log_pivots_numpy

import oracles


def decaying(n, d, seed, rate=0.7):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, d)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (U * rate ** np.arange(d)) @ V.T * 10


# ---------------------------------------------------------------- randomized PCA

def test_rank_one_matrix():
    rng = np.random.default_rng(0)
    A = np.outer(rng.standard_normal(100), rng.standard_normal(40))
    m = randomized_pca(A, 3, oversampling=5)
    assert m.explained_variance[0] / m.total_variance >= 0.9999
    assert np.all(m.explained_variance[1:] < 1e-20 * m.total_variance + 1e-24)


@pytest.mark.parametrize("seed", range(5))
def test_singular_values_match_exact_svd_on_decaying_spectrum(seed):
    A = decaying(200, 50, seed)
    exact = np.linalg.svd(A - A.mean(0), compute_uv=False)[:6]
    got = randomized_pca(A, 6, seed=seed).singular_values
    np.testing.assert_allclose(got, exact, rtol=1e-6)


def test_components_orthonormal_and_variance_descending():
    A = np.random.default_rng(1).standard_normal((120, 30))
    m = randomized_pca(A, 6, seed=3)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(6), atol=1e-8)
    assert np.all(np.diff(m.explained_variance) <= 0)


def test_scores_are_projections_of_centred_data():
    A = np.random.default_rng(2).standard_normal((80, 20))
    m = randomized_pca(A, 4, seed=0)
    np.testing.assert_allclose(m.scores, m.transform(A), atol=1e-10)


def test_deterministic_given_seed():
    A = np.random.default_rng(3).standard_normal((60, 25))
    a, b = randomized_pca(A, 3, seed=9), randomized_pca(A, 3, seed=9)
    np.testing.assert_array_equal(a.components, b.components)
    np.testing.assert_array_equal(a.scores, b.scores)


@pytest.mark.parametrize("k,oversampling", [(0, 10), (45, 10), (3, -1)])
def test_invalid_rank(k, oversampling):
    with pytest.raises(InvalidRankError):
        randomized_pca(np.ones((50, 50)), k, oversampling)


def test_non_finite_data():
    A = np.ones((20, 20))
    A[3, 4] = np.inf
    with pytest.raises(InvalidDataError):
        randomized_pca(A, 2, 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_reconstruction_near_optimal(seed):
    A = decaying(150, 40, seed, rate=0.8)
    Ac = A - A.mean(0)
    U, s, Vt = np.linalg.svd(Ac, full_matrices=False)
    k = 5
    optimum = np.linalg.norm(Ac - (U[:, :k] * s[:k]) @ Vt[:k])
    m = randomized_pca(A, k, seed=seed)
    error = np.linalg.norm(Ac - m.scores @ m.components)
    assert error <= optimum * 1.05


# ---------------------------------------------------------------- RDM

def test_identical_and_anticorrelated_rows():
    x = np.array([1.0, 2.0, 4.0])
    r = rdm(np.stack([x, 3 * x + 1, -x]), [0, 0, 1])
    assert r.matrix[0, 1] == pytest.approx(0.0, abs=1e-12)
    assert r.matrix[0, 2] == pytest.approx(2.0, abs=1e-12)


def test_rdm_matches_corrcoef_oracle():
    scores = np.random.default_rng(0).standard_normal((30, 6))
    r = rdm(scores, np.repeat(np.arange(5), 6))
    expected = np.clip(oracles.rdm_matrix(scores), 0, 2)
    np.fill_diagonal(expected, 0)
    np.testing.assert_allclose(r.matrix, expected, atol=1e-12)


def test_block_structure_lowers_ratio():
    rng = np.random.default_rng(1)
    patterns = rng.standard_normal((5, 6))
    labels = np.repeat(np.arange(5), 20)
    scores = patterns[labels] + 0.3 * rng.standard_normal((100, 6))
    r = rdm(scores, labels)
    assert r.within_block_mean < r.between_block_mean
    assert r.ratio < 0.5


def test_block_means_by_hand():
    m = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
    assert block_means(m, [0, 0, 1]) == (1.0, 2.5)


def test_zero_variance_row_is_reported():
    scores = np.random.default_rng(2).standard_normal((4, 3))
    scores[2] = 7.0
    with pytest.raises(DegenerateRowError) as err:
        rdm(scores, [0, 0, 1, 1])
    assert list(err.value.details["rows"]) == [2]


def test_rdm_needs_two_columns():
    with pytest.raises(InvalidDataError):
        rdm(np.ones((3, 1)), [0, 1, 2])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_rdm_invariants(seed):
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal((12, 4))
    labels = np.repeat(np.arange(3), 4)
    r = rdm(scores, labels)
    assert np.abs(r.matrix - r.matrix.T).max() <= 1e-10
    assert np.all(np.diag(r.matrix) == 0)
    assert r.matrix.min() >= 0 and r.matrix.max() <= 2
    scaled = rdm(scores * rng.uniform(0.1, 10, (12, 1)) + rng.standard_normal((12, 1)), labels)
    np.testing.assert_allclose(scaled.matrix, r.matrix, atol=1e-10)


# ---------------------------------------------------------------- Cholesky log-determinant

def test_logdet_small_cases():
    assert chol_logdet(np.eye(4)) == 0.0
    assert chol_logdet(np.diag([2.0, 3.0])) == pytest.approx(np.log(6.0), abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_logdet_matches_eigenvalue_oracle(seed):
    a = np.random.default_rng(seed).standard_normal((10, 10))
    A = a @ a.T + 0.1 * np.eye(10)
    assert chol_logdet(A) == pytest.approx(np.log(np.linalg.eigvalsh(A)).sum(), abs=1e-10)


def test_logdet_ill_conditioned():
    A = np.diag(np.logspace(0, -12, 6))
    assert chol_logdet(A) == pytest.approx(np.log(np.logspace(0, -12, 6)).sum(), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_logdet_scaling(seed, c):
    a = np.random.default_rng(seed).standard_normal((5, 5))
    A = a @ a.T + np.eye(5)
    assert chol_logdet(c * A) == pytest.approx(chol_logdet(A) + 5 * np.log(c), abs=1e-9)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefiniteError):
        chol_logdet(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_batched_kernels_agree():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((50, 3, 5))
    C = a.transpose(0, 2, 1) @ a  # rank 3: every matrix fails at the fourth pivot
    C[:25] += np.eye(5)
    floor = np.full(50, 1e-9)
    fast, ok_fast = _batched_log_pivots_numba(C, floor)
    slow, ok_slow = _batched_log_pivots_numpy(C, floor)
    np.testing.assert_array_equal(ok_fast, ok_slow)
    assert ok_fast[:25].all() and not ok_fast[25:].any()
    np.testing.assert_allclose(fast[ok_fast], slow[ok_slow], atol=1e-12)
    logpiv, _ = batched_log_pivots(C[:25])
    np.testing.assert_allclose(logpiv.sum(1), [np.linalg.slogdet(c)[1] for c in C[:25]], atol=1e-10)
