"""Proximity operators of convex penalties in the metric induced by a symmetric positive
definite operator H:

    prox_J^H(z) = argmin_x { J(x) + 1/2 ||x - z||_H^2 } = (dJ + H)^-1 (H z)

Closed forms are used when J = 0 or when H is diagonal and J is separable (weighted l1,
box indicator). Any other case is solved with an accelerated forward-backward iteration
with gradient-based adaptive restart, stopped on the subdifferential residual
dist(H (z - p), dJ(p)).
"""
import logging
import math
from dataclasses import dataclass

import numpy

from .constants import DEFAULT_INNER_MAX_ITERATIONS, DEFAULT_PROX_TOLERANCE, PENALTY_ZERO, PENALTY_WEIGHTED_L1, \
    PENALTY_BOX_INDICATOR
from .exceptions import InnerSolverStalled, DimensionMismatch, ProblemFileError
from .linalg import as_vector, check_spd, is_diagonal


def shrink(v, thresholds):
    """Componentwise soft-thresholding: sign(v) * max(|v| - thresholds, 0)."""
    return numpy.sign(v) * numpy.maximum(numpy.abs(v) - thresholds, 0.0)


class AbstractPenalty(object):
    """Abstract class for proper, convex and lower semicontinuous penalties J. Subclasses
    implement the value, the Euclidean proximity operator with per-coordinate steps and
    the distance from a vector to the subdifferential.
    """

    kind = None

    def value(self, x):
        raise NotImplementedError

    def prox_euclidean(self, v, steps):
        """argmin_x J(x) + sum_i (x_i - v_i)^2 / (2 steps_i)"""
        raise NotImplementedError

    def subdifferential_distance(self, x, g):
        raise NotImplementedError

    def params(self):
        return {}

    def check_dim(self, dim):
        pass

    def is_feasible(self, x):
        return True

    def to_dict(self):
        return {'kind': self.kind, 'params': self.params()}

    def __repr__(self):
        return '{0}({1})'.format(self.kind, self.params())


class ZeroPenalty(AbstractPenalty):

    kind = PENALTY_ZERO

    def value(self, x):
        return 0.0

    def prox_euclidean(self, v, steps):
        return numpy.array(v, dtype=numpy.float64)

    def subdifferential_distance(self, x, g):
        return float(numpy.linalg.norm(g))


class WeightedL1Penalty(AbstractPenalty):
    """J(x) = sum_i w_i |x_i| with nonnegative weights."""

    kind = PENALTY_WEIGHTED_L1

    def __init__(self, weights):
        self.weights = as_vector(weights)
        assert numpy.all(numpy.isfinite(self.weights)), 'Weights must be finite'
        assert numpy.all(self.weights >= 0), 'Weights must be nonnegative'

    def params(self):
        return {'weights': self.weights.tolist()}

    def check_dim(self, dim):
        if self.weights.shape[0] != dim:
            raise DimensionMismatch('WeightedL1 has {0} weights for dimension {1}'.format(self.weights.shape[0], dim))

    def value(self, x):
        return float(numpy.dot(self.weights, numpy.abs(x)))

    def prox_euclidean(self, v, steps):
        return shrink(v, steps * self.weights)

    def subdifferential_distance(self, x, g):
        # dJ(x)_i = [-w_i, w_i] when x_i = 0, {w_i sign(x_i)} otherwise
        at_zero = x == 0
        distances = numpy.where(at_zero,
                                numpy.maximum(numpy.abs(g) - self.weights, 0.0),
                                numpy.abs(g - self.weights * numpy.sign(x)))
        return float(numpy.linalg.norm(distances))


class BoxIndicatorPenalty(AbstractPenalty):
    """Indicator of the box lower <= x <= upper (bounds may be infinite)."""

    kind = PENALTY_BOX_INDICATOR

    def __init__(self, lower, upper):
        self.lower = as_vector(lower)
        self.upper = as_vector(upper)
        assert self.lower.shape == self.upper.shape, 'Box bounds must have the same length'
        assert not numpy.any(numpy.isnan(self.lower)) and not numpy.any(numpy.isnan(self.upper)), \
            'Box bounds must not be NaN'
        assert numpy.all(self.lower <= self.upper), 'Box lower bounds must not exceed upper bounds'

    def params(self):
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist()}

    def check_dim(self, dim):
        if self.lower.shape[0] != dim:
            raise DimensionMismatch('BoxIndicator has {0} bounds for dimension {1}'.format(self.lower.shape[0], dim))

    def is_feasible(self, x):
        return bool(numpy.all(x >= self.lower) and numpy.all(x <= self.upper))

    def value(self, x):
        return 0.0 if self.is_feasible(x) else math.inf

    def prox_euclidean(self, v, steps):
        return numpy.clip(v, self.lower, self.upper)

    def subdifferential_distance(self, x, g):
        if not self.is_feasible(x):
            return math.inf
        # Normal cone of the box: R for fixed coordinates, (-inf, 0] at the lower face,
        # [0, inf) at the upper face, {0} in the interior
        at_lower = x == self.lower
        at_upper = x == self.upper
        distances = numpy.abs(g)
        distances = numpy.where(at_lower & ~at_upper, numpy.maximum(g, 0.0), distances)
        distances = numpy.where(at_upper & ~at_lower, numpy.maximum(-g, 0.0), distances)
        distances = numpy.where(at_lower & at_upper, 0.0, distances)
        return float(numpy.linalg.norm(distances))


def penalty_from_dict(data, dim=None):
    """Builds a penalty from its configuration dictionary {kind, params}."""
    if not isinstance(data, dict) or 'kind' not in data:
        raise ProblemFileError('Penalty must be an object with a "kind"', field='penalty.kind')
    kind = data['kind']
    params = data.get('params', {}) or {}
    try:
        if kind == PENALTY_ZERO:
            penalty = ZeroPenalty()
        elif kind == PENALTY_WEIGHTED_L1:
            penalty = WeightedL1Penalty(params['weights'])
        elif kind == PENALTY_BOX_INDICATOR:
            lower = [float(b) for b in params['lower']]
            upper = [float(b) for b in params['upper']]
            penalty = BoxIndicatorPenalty(lower, upper)
        else:
            raise ProblemFileError('Unknown penalty kind "{0}"'.format(kind), field='penalty.kind')
    except KeyError as e:
        raise ProblemFileError('Missing penalty parameter {0}'.format(e), field='penalty.params')
    except (AssertionError, TypeError, ValueError) as e:
        raise ProblemFileError('Invalid penalty parameters: {0}'.format(e), field='penalty.params')
    if dim is not None:
        try:
            penalty.check_dim(dim)
        except DimensionMismatch as e:
            raise ProblemFileError(str(e), field='penalty.params')
    return penalty


@dataclass(frozen=True)
class ProxResult:
    point: numpy.ndarray
    envelope_value: float
    inner_iterations: int
    inner_residual: float
    method: str


def envelope_value(spec, H, z, p):
    """Value J(p) + 1/2 ||p - z||_H^2 of the Moreau-Yosida subproblem at p."""
    d = p - z
    return float(spec.value(p) + 0.5 * d @ (H @ d))


def residual_scale(H_norm, z):
    return max(1.0, H_norm * float(numpy.linalg.norm(z)))


def _forward_backward(spec, H, H_norm, z, threshold, max_iterations):
    alpha = 1.0 / H_norm
    x = spec.prox_euclidean(z, alpha)
    residual = spec.subdifferential_distance(x, H @ (z - x))
    if residual <= threshold:
        return x, 0, residual
    x_old = x
    t = 1.0
    for k in range(1, max_iterations + 1):
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x + ((t - 1.0) / t_new) * (x - x_old)
        x_new = spec.prox_euclidean(y - alpha * (H @ (y - z)), alpha)
        # "gradient" adaptive restart: momentum points against the prox-gradient step
        if numpy.dot(y - x_new, x_new - x) > 0:
            t_new = 1.0
        x_old, x, t = x, x_new, t_new
        residual = spec.subdifferential_distance(x, H @ (z - x))
        if residual <= threshold:
            return x, k, residual
    raise InnerSolverStalled('Forward-backward prox solver did not reach residual {0:.3e} in {1} iterations '
                             '(last residual {2:.3e})'.format(threshold, max_iterations, residual))


def prox(spec, H, z, tol=DEFAULT_PROX_TOLERANCE, max_inner_iterations=DEFAULT_INNER_MAX_ITERATIONS,
         force_iterative=False):
    """Computes prox_J^H(z) for the penalty 'spec' and the SPD metric 'H'.

    The returned point p satisfies dist(H (z - p), dJ(p)) <= tol * max(1, ||H|| ||z||).
    Set 'force_iterative' to bypass the closed forms (used to cross-check them).
    """
    assert tol > 0, 'tol must be positive'
    H, _, largest = check_spd(H)
    z = as_vector(z, H.shape[0])
    threshold = tol * residual_scale(largest, z)

    if isinstance(spec, ZeroPenalty):
        return ProxResult(point=z.copy(), envelope_value=0.0, inner_iterations=0, inner_residual=0.0,
                          method='identity')

    if not force_iterative and is_diagonal(H):
        p = spec.prox_euclidean(z, 1.0 / numpy.diag(H))
        residual = spec.subdifferential_distance(p, H @ (z - p))
        logging.debug('Closed-form prox for {0}, residual {1:.3e}'.format(spec.kind, residual))
        return ProxResult(point=p, envelope_value=envelope_value(spec, H, z, p), inner_iterations=0,
                          inner_residual=residual, method='closed_form')

    p, iterations, residual = _forward_backward(spec, H, largest, z, threshold, max_inner_iterations)
    logging.debug('Forward-backward prox for {0}: {1} iterations, residual {2:.3e}'.format(
        spec.kind, iterations, residual))
    return ProxResult(point=p, envelope_value=envelope_value(spec, H, z, p), inner_iterations=iterations,
                      inner_residual=residual, method='forward_backward')


def subdifferential_distance(spec, x, g):
    """Euclidean distance from 'g' to the subdifferential of the penalty at 'x'
    (+inf for infeasible points of a box indicator).
    """
    return spec.subdifferential_distance(as_vector(x), as_vector(g))


@dataclass(frozen=True)
class TwoMetricReport:
    lhs: float
    rhs: float
    slack: float


def check_two_metric_bound(spec, H1, H2, z1, z2, tol=DEFAULT_PROX_TOLERANCE):
    """Checks the bound relating proximity operators in two metrics:

        ||prox^H1(z1) - prox^H2(z2)|| <= sqrt(||H1|| ||H1^-1||) ||z1 - z2||
                                         + ||H1^-1|| ||(H1 - H2)(z2 - prox^H2(z2))||
    """
    H1, smallest1, largest1 = check_spd(H1)
    H2, _, _ = check_spd(H2)
    z1 = as_vector(z1, H1.shape[0])
    z2 = as_vector(z2, H2.shape[0])
    p1 = prox(spec, H1, z1, tol).point
    p2 = prox(spec, H2, z2, tol).point
    inverse_norm1 = 1.0 / smallest1
    lhs = float(numpy.linalg.norm(p1 - p2))
    rhs = math.sqrt(largest1 * inverse_norm1) * float(numpy.linalg.norm(z1 - z2)) + \
        inverse_norm1 * float(numpy.linalg.norm((H1 - H2) @ (z2 - p2)))
    return TwoMetricReport(lhs=lhs, rhs=float(rhs), slack=float(rhs - lhs))


def metric_norm(H, v):
    """||v||_H = sqrt(v^T H v)"""
    return math.sqrt(max(float(v @ (H @ v)), 0.0))
