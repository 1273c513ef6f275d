"""Dense linear algebra helpers: SVD factors, Moore-Penrose pseudoinverse, injectivity
gate, the metric operator H = J^T J and a numerical check of the pseudoinverse
perturbation bounds.

All matrices are float64 ``numpy.ndarray`` values; operator norms are spectral norms.
"""
import logging
from dataclasses import dataclass

import numpy

from .constants import DEFAULT_INJECTIVITY_THRESHOLD, PERTURBATION_SLACK_TOLERANCE, SQRT2
from .exceptions import InvalidMatrix, HypothesisViolated, HNotPositiveDefinite, DimensionMismatch


def as_matrix(A):
    """Returns 'A' as a 2-D float64 array. Raises InvalidMatrix if 'A' is not 2-D or has
    non-finite entries.
    """
    try:
        matrix = numpy.array(A, dtype=numpy.float64)
    except (TypeError, ValueError) as e:
        raise InvalidMatrix('Could not convert to a real matrix: {0}'.format(e))
    if matrix.ndim != 2:
        raise InvalidMatrix('Expected a 2-D matrix, got {0} dimension(s)'.format(matrix.ndim))
    if not numpy.all(numpy.isfinite(matrix)):
        raise InvalidMatrix('Matrix has non-finite entries')
    return matrix


def as_vector(v, dim=None):
    vector = numpy.array(v, dtype=numpy.float64).reshape(-1)
    if dim is not None and vector.shape[0] != dim:
        raise DimensionMismatch('Expected a vector of length {0}, got {1}'.format(dim, vector.shape[0]))
    return vector


@dataclass(frozen=True)
class SvdFactors:
    left: numpy.ndarray
    singulars: numpy.ndarray
    right: numpy.ndarray

    @property
    def largest(self):
        return float(self.singulars[0]) if self.singulars.size else 0.0

    def smallest(self, n_cols):
        # Wide matrices have n_cols - rank(...) additional zero singular values
        if self.singulars.size < n_cols or self.singulars.size == 0:
            return 0.0
        return float(self.singulars[-1])

    def reconstruct(self):
        return (self.left * self.singulars) @ self.right.T


def svd_factors(A):
    """Thin SVD A = U diag(s) V^T with singular values sorted nonincreasing."""
    A = as_matrix(A)
    u, s, vh = numpy.linalg.svd(A, full_matrices=False)
    return SvdFactors(left=u, singulars=s, right=vh.T)


def spectral_norm(A):
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(numpy.linalg.norm(A, 2))


def default_rank_tol(shape, largest_singular):
    return numpy.finfo(numpy.float64).eps * max(shape) * largest_singular


def pseudoinverse(A, rank_tol=None):
    """Moore-Penrose pseudoinverse computed from the SVD of 'A'. Singular values not larger
    than 'rank_tol' are treated as zero. Default 'rank_tol' is eps * max(rows, cols) * sigma_max.
    For injective 'A' the result equals (A^T A)^-1 A^T.
    """
    A = as_matrix(A)
    assert rank_tol is None or rank_tol >= 0, 'rank_tol must be nonnegative'
    factors = svd_factors(A)
    if rank_tol is None:
        rank_tol = default_rank_tol(A.shape, factors.largest)
    keep = factors.singulars > rank_tol
    inverse_singulars = numpy.zeros_like(factors.singulars)
    inverse_singulars[keep] = 1.0 / factors.singulars[keep]
    return (factors.right * inverse_singulars) @ factors.left.T


@dataclass(frozen=True)
class InjectivityReport:
    injective: bool
    smallest_singular: float
    threshold: float


def injectivity(A, threshold=DEFAULT_INJECTIVITY_THRESHOLD):
    A = as_matrix(A)
    smallest = svd_factors(A).smallest(A.shape[1])
    return InjectivityReport(injective=bool(smallest > threshold), smallest_singular=smallest, threshold=threshold)


def metric_operator(jac):
    """Metric H = J^T J induced by a Jacobian J (m x n). Symmetric positive semidefinite,
    positive definite iff J is injective.
    """
    jac = as_matrix(jac)
    return jac.T @ jac


def check_spd(H):
    """Returns (H, smallest eigenvalue, largest eigenvalue) for a symmetric positive definite H.
    Raises HNotPositiveDefinite otherwise.
    """
    H = as_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise HNotPositiveDefinite('Metric must be square, got shape {0}'.format(H.shape))
    scale = max(1.0, float(numpy.max(numpy.abs(H)))) if H.size else 1.0
    if not numpy.allclose(H, H.T, rtol=0.0, atol=1e-12 * scale):
        raise HNotPositiveDefinite('Metric is not symmetric')
    eigenvalues = numpy.linalg.eigvalsh(0.5 * (H + H.T))
    if eigenvalues.size == 0 or eigenvalues[0] <= 0.0:
        raise HNotPositiveDefinite('Metric is not positive definite (smallest eigenvalue {0})'.format(
            eigenvalues[0] if eigenvalues.size else None))
    return H, float(eigenvalues[0]), float(eigenvalues[-1])


def is_diagonal(H):
    return numpy.count_nonzero(H - numpy.diag(numpy.diag(H))) == 0


@dataclass(frozen=True)
class PerturbationReport:
    lhs_norm_bound_ok: bool
    lhs_diff_bound_ok: bool
    norm_slack: float
    diff_slack: float
    contraction: float  # ||A^+|| ||A - B||


def check_perturbation_lemma(A, B, threshold=DEFAULT_INJECTIVITY_THRESHOLD):
    """Checks numerically the pseudoinverse perturbation bounds for an injective 'A' and a
    perturbation 'B' with ||A^+|| ||A - B|| < 1:

        ||B^+|| <= ||A^+|| / (1 - ||A^+|| ||A - B||)
        ||B^+ - A^+|| <= sqrt(2) ||A^+||^2 ||A - B|| / (1 - ||A^+|| ||A - B||)

    Returns the slack (right-hand side minus left-hand side) of both inequalities.
    """
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch('A and B must have the same shape ({0} != {1})'.format(A.shape, B.shape))
    if not injectivity(A, threshold).injective:
        raise HypothesisViolated('A is not injective')
    A_pinv = pseudoinverse(A)
    B_pinv = pseudoinverse(B)
    norm_A_pinv = spectral_norm(A_pinv)
    distance = spectral_norm(A - B)
    contraction = norm_A_pinv * distance
    if contraction >= 1.0:
        raise HypothesisViolated('||A^+|| ||A - B|| = {0:.6g} >= 1'.format(contraction))
    norm_rhs = norm_A_pinv / (1.0 - contraction)
    diff_rhs = SQRT2 * norm_A_pinv ** 2 * distance / (1.0 - contraction)
    norm_slack = norm_rhs - spectral_norm(B_pinv)
    diff_slack = diff_rhs - spectral_norm(B_pinv - A_pinv)
    logging.debug('Perturbation lemma slacks: norm={0:.3e} diff={1:.3e}'.format(norm_slack, diff_slack))
    return PerturbationReport(
        lhs_norm_bound_ok=bool(norm_slack >= -PERTURBATION_SLACK_TOLERANCE),
        lhs_diff_bound_ok=bool(diff_slack >= -PERTURBATION_SLACK_TOLERANCE),
        norm_slack=float(norm_slack),
        diff_slack=float(diff_slack),
        contraction=float(contraction))
