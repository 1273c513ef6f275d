import numpy
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxgn_python.exceptions import InvalidMatrix, HypothesisViolated, HNotPositiveDefinite, DimensionMismatch
from proxgn_python.linalg import as_matrix, as_vector, svd_factors, pseudoinverse, injectivity, metric_operator, \
    check_spd, is_diagonal, check_perturbation_lemma, spectral_norm


def random_matrix(rng, m, n, rank=None):
    """m x n matrix with singular values in [0.1, 10], 'rank' of them nonzero."""
    k = min(m, n) if rank is None else rank
    U = numpy.linalg.qr(rng.standard_normal((m, m)))[0][:, :k]
    V = numpy.linalg.qr(rng.standard_normal((n, n)))[0][:, :k]
    s = rng.uniform(0.1, 10.0, k)
    return (U * s) @ V.T


def test_as_matrix_rejects_bad_input():
    with pytest.raises(InvalidMatrix):
        as_matrix([1.0, 2.0])
    with pytest.raises(InvalidMatrix):
        as_matrix([[1.0, numpy.nan]])
    with pytest.raises(InvalidMatrix):
        as_matrix([[1.0, numpy.inf]])
    assert as_matrix([[1, 2]]).dtype == numpy.float64


def test_as_vector_dimension_check():
    assert as_vector([[1.0], [2.0]]).shape == (2,)
    with pytest.raises(DimensionMismatch):
        as_vector([1.0, 2.0], dim=3)


def test_pseudoinverse_tall_orthonormal_columns():
    A = numpy.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    numpy.testing.assert_allclose(pseudoinverse(A), A.T, atol=1e-15)


def test_pseudoinverse_of_zero_matrix_is_zero():
    numpy.testing.assert_array_equal(pseudoinverse(numpy.zeros((3, 2))), numpy.zeros((2, 3)))


def test_pseudoinverse_rank_deficient():
    A = numpy.array([[1.0, 1.0], [1.0, 1.0]])
    numpy.testing.assert_allclose(pseudoinverse(A), numpy.full((2, 2), 0.25), atol=1e-14)


def test_pseudoinverse_explicit_rank_tolerance():
    A = numpy.diag([1.0, 1e-6])
    numpy.testing.assert_allclose(pseudoinverse(A, rank_tol=1e-3), numpy.diag([1.0, 0.0]))
    numpy.testing.assert_allclose(pseudoinverse(A), numpy.diag([1.0, 1e6]))


@pytest.mark.parametrize('shape', [(1, 1), (3, 2), (2, 3), (5, 5), (8, 3), (3, 8), (8, 8)])
def test_penrose_identities(shape):
    rng = numpy.random.default_rng(sum(shape))
    m, n = shape
    for trial in range(1000 // 7 + 1):
        rank = int(rng.integers(0, min(m, n) + 1))
        A = random_matrix(rng, m, n, rank)
        P = pseudoinverse(A)
        tol = 1e-10 * max(1.0, spectral_norm(A))
        assert numpy.linalg.norm(A @ P @ A - A, 2) <= tol
        assert numpy.linalg.norm(P @ A @ P - P, 2) <= tol
        assert numpy.linalg.norm((A @ P).T - A @ P, 2) <= tol
        assert numpy.linalg.norm((P @ A).T - P @ A, 2) <= tol


def test_injective_pseudoinverse_is_left_inverse():
    rng = numpy.random.default_rng(3)
    for _ in range(200):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, m + 1))
        A = random_matrix(rng, m, n)
        P = pseudoinverse(A)
        numpy.testing.assert_allclose(P @ A, numpy.eye(n), atol=1e-10)
        numpy.testing.assert_allclose(P, numpy.linalg.solve(A.T @ A, A.T), atol=1e-9)


def test_pseudoinverse_norm_of_injective_matrix():
    rng = numpy.random.default_rng(9)
    for _ in range(200):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, m + 1))
        A = random_matrix(rng, m, n)
        expected = spectral_norm(numpy.linalg.inv(A.T @ A))
        assert spectral_norm(pseudoinverse(A)) ** 2 == pytest.approx(expected, rel=1e-8)


def test_injectivity():
    assert injectivity(numpy.eye(3)).injective
    assert not injectivity(numpy.ones((3, 2))).injective
    wide = injectivity(numpy.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert not wide.injective
    assert wide.smallest_singular == 0.0


@settings(max_examples=50, deadline=None)
@given(arrays(numpy.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False)))
def test_svd_reconstructs_and_metric_is_symmetric(A):
    factors = svd_factors(A)
    numpy.testing.assert_allclose(factors.reconstruct(), A, atol=1e-12 * max(1.0, numpy.abs(A).max()) * 10)
    assert numpy.all(numpy.diff(factors.singulars) <= 0)
    H = metric_operator(A)
    numpy.testing.assert_array_equal(H, H.T)
    assert numpy.linalg.eigvalsh(H).min() >= -1e-10 * max(1.0, factors.largest ** 2)


def test_check_spd():
    H, smallest, largest = check_spd(numpy.diag([2.0, 3.0]))
    assert smallest == pytest.approx(2.0)
    assert largest == pytest.approx(3.0)
    with pytest.raises(HNotPositiveDefinite):
        check_spd(numpy.diag([1.0, 0.0]))
    with pytest.raises(HNotPositiveDefinite):
        check_spd(numpy.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(HNotPositiveDefinite):
        check_spd(numpy.ones((2, 3)))


def test_is_diagonal():
    assert is_diagonal(numpy.diag([1.0, 2.0]))
    assert not is_diagonal(numpy.array([[1.0, 1e-30], [1e-30, 1.0]]))


def test_perturbation_lemma_random_pairs():
    rng = numpy.random.default_rng(7)
    for _ in range(500):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, m + 1))
        A = random_matrix(rng, m, n)
        E = rng.standard_normal((m, n))
        smallest = svd_factors(A).smallest(n)
        E *= rng.uniform(0.0, 0.95) * smallest / max(spectral_norm(E), 1e-300)
        report = check_perturbation_lemma(A, A + E)
        assert report.contraction < 1
        assert report.lhs_norm_bound_ok and report.lhs_diff_bound_ok
        assert report.norm_slack >= -1e-10
        assert report.diff_slack >= -1e-10


def test_perturbation_lemma_hypotheses():
    with pytest.raises(HypothesisViolated):
        check_perturbation_lemma(numpy.eye(2), 2.0 * numpy.eye(2))
    with pytest.raises(HypothesisViolated):
        check_perturbation_lemma(numpy.ones((2, 2)), numpy.ones((2, 2)))
    with pytest.raises(DimensionMismatch):
        check_perturbation_lemma(numpy.eye(2), numpy.eye(3))
