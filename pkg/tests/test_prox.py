import math

import numpy
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxgn_python.exceptions import HNotPositiveDefinite, InnerSolverStalled, ProblemFileError
from proxgn_python.prox import ZeroPenalty, WeightedL1Penalty, BoxIndicatorPenalty, prox, shrink, \
    subdifferential_distance, check_two_metric_bound, penalty_from_dict, envelope_value, residual_scale, \
    metric_norm


def random_spd(rng, n, low=0.5, high=5.0):
    Q = numpy.linalg.qr(rng.standard_normal((n, n)))[0]
    H = (Q * rng.uniform(low, high, n)) @ Q.T
    return 0.5 * (H + H.T)


def random_penalty(rng, n):
    if rng.uniform() < 0.5:
        return WeightedL1Penalty(rng.uniform(0.0, 2.0, n))
    lower = rng.uniform(-2.0, 0.0, n)
    upper = lower + rng.uniform(0.0, 3.0, n)
    lower[rng.uniform(size=n) < 0.2] = -math.inf
    upper[rng.uniform(size=n) < 0.2] = math.inf
    return BoxIndicatorPenalty(lower, upper)


def test_shrink():
    numpy.testing.assert_array_equal(shrink(numpy.array([3.0, -3.0, 0.5]), 1.0), [2.0, -2.0, 0.0])


def test_zero_penalty_is_identity():
    z = numpy.array([1.0, -2.0])
    result = prox(ZeroPenalty(), numpy.array([[2.0, 1.0], [1.0, 2.0]]), z)
    numpy.testing.assert_array_equal(result.point, z)
    assert result.envelope_value == 0.0
    assert result.inner_iterations == 0


def test_weighted_l1_identity_metric_is_soft_threshold():
    result = prox(WeightedL1Penalty([1.0, 0.5, 2.0]), numpy.eye(3), [2.0, -0.25, -3.0])
    numpy.testing.assert_allclose(result.point, [1.0, 0.0, -1.0])
    assert result.method == 'closed_form'


def test_weighted_l1_diagonal_metric_scales_thresholds():
    result = prox(WeightedL1Penalty([1.0, 1.0]), numpy.diag([2.0, 4.0]), [1.0, 1.0])
    numpy.testing.assert_allclose(result.point, [0.5, 0.75])
    assert result.envelope_value == pytest.approx(1.25 + 0.5 * (2.0 * 0.25 + 4.0 * 0.0625))


def test_box_diagonal_metric_is_clip():
    penalty = BoxIndicatorPenalty([0.0, -1.0], [1.0, math.inf])
    result = prox(penalty, numpy.diag([3.0, 0.5]), [2.0, -5.0])
    numpy.testing.assert_array_equal(result.point, [1.0, -1.0])


def test_prox_rejects_indefinite_metric():
    with pytest.raises(HNotPositiveDefinite):
        prox(WeightedL1Penalty([1.0, 1.0]), numpy.array([[1.0, 2.0], [2.0, 1.0]]), [1.0, 1.0])


def test_inner_solver_stall_is_reported():
    rng = numpy.random.default_rng(0)
    H = random_spd(rng, 4, 0.01, 10.0)
    with pytest.raises(InnerSolverStalled):
        prox(WeightedL1Penalty(numpy.full(4, 0.1)), H, rng.standard_normal(4) * 10, tol=1e-15,
             max_inner_iterations=2, force_iterative=True)


def test_subdifferential_distance_weighted_l1():
    penalty = WeightedL1Penalty([1.0, 1.0])
    assert subdifferential_distance(penalty, [0.0, 0.0], [0.5, -1.0]) == 0.0
    assert subdifferential_distance(penalty, [0.0, 0.0], [3.0, 0.0]) == pytest.approx(2.0)
    assert subdifferential_distance(penalty, [1.0, -1.0], [1.0, -1.0]) == 0.0
    assert subdifferential_distance(penalty, [1.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)


def test_subdifferential_distance_box():
    penalty = BoxIndicatorPenalty([0.0, 0.0], [1.0, 1.0])
    assert subdifferential_distance(penalty, [0.0, 0.5], [-2.0, 0.0]) == 0.0
    assert subdifferential_distance(penalty, [0.0, 0.5], [2.0, 0.0]) == pytest.approx(2.0)
    assert subdifferential_distance(penalty, [1.0, 1.0], [3.0, 3.0]) == 0.0
    assert subdifferential_distance(penalty, [0.5, 0.5], [0.0, 1.0]) == pytest.approx(1.0)
    assert subdifferential_distance(penalty, [2.0, 0.5], [0.0, 0.0]) == math.inf
    assert subdifferential_distance(BoxIndicatorPenalty([1.0], [1.0]), [1.0], [7.0]) == 0.0


def test_closed_form_agrees_with_inner_solver():
    rng = numpy.random.default_rng(1)
    tol = 1e-12
    for _ in range(200):
        n = int(rng.integers(1, 6))
        penalty = random_penalty(rng, n)
        H = numpy.diag(rng.uniform(0.5, 5.0, n))
        z = rng.uniform(-3.0, 3.0, n)
        closed = prox(penalty, H, z, tol)
        iterative = prox(penalty, H, z, tol, force_iterative=True)
        assert closed.method == 'closed_form'
        assert iterative.method == 'forward_backward'
        bound = 10 * tol * residual_scale(H.max(), z) / H.diagonal().min()
        assert numpy.linalg.norm(closed.point - iterative.point) <= bound


def test_general_metric_first_order_residual():
    rng = numpy.random.default_rng(2)
    tol = 1e-12
    for _ in range(500):
        n = int(rng.integers(2, 6))
        penalty = random_penalty(rng, n)
        H = random_spd(rng, n)
        z = rng.uniform(-3.0, 3.0, n)
        result = prox(penalty, H, z, tol)
        threshold = tol * residual_scale(numpy.linalg.eigvalsh(H).max(), z)
        assert result.inner_residual <= threshold
        assert penalty.is_feasible(result.point)
        assert subdifferential_distance(penalty, result.point, H @ (z - result.point)) <= threshold


def test_prox_point_minimizes_envelope():
    rng = numpy.random.default_rng(4)
    for _ in range(50):
        n = 3
        penalty = WeightedL1Penalty(rng.uniform(0.1, 1.0, n))
        H = random_spd(rng, n)
        z = rng.uniform(-3.0, 3.0, n)
        result = prox(penalty, H, z)
        for _ in range(10):
            other = result.point + 1e-3 * rng.standard_normal(n)
            assert envelope_value(penalty, H, z, other) >= result.envelope_value - 1e-12


def test_prox_is_nonexpansive_in_metric_norm():
    rng = numpy.random.default_rng(6)
    for _ in range(500):
        n = int(rng.integers(2, 6))
        penalty = random_penalty(rng, n)
        H = random_spd(rng, n)
        z1, z2 = rng.uniform(-3.0, 3.0, n), rng.uniform(-3.0, 3.0, n)
        p1 = prox(penalty, H, z1, force_iterative=True)
        p2 = prox(penalty, H, z2, force_iterative=True)
        assert p1.method == p2.method == 'forward_backward'
        assert metric_norm(H, p1.point - p2.point) <= metric_norm(H, z1 - z2) + 1e-6
    assert metric_norm(numpy.diag([4.0, 1.0]), numpy.array([1.0, 2.0])) == pytest.approx(math.sqrt(8.0))


def test_two_metric_bound():
    rng = numpy.random.default_rng(5)
    for _ in range(500):
        n = int(rng.integers(1, 5))
        penalty = random_penalty(rng, n)
        H1, H2 = random_spd(rng, n), random_spd(rng, n)
        z1, z2 = rng.uniform(-3.0, 3.0, n), rng.uniform(-3.0, 3.0, n)
        report = check_two_metric_bound(penalty, H1, H2, z1, z2)
        assert report.slack >= -1e-6
        assert report.slack == pytest.approx(report.rhs - report.lhs)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=4),
       st.floats(0.0, 3.0, allow_nan=False))
def test_soft_threshold_fixed_point(values, weight):
    z = numpy.array(values)
    penalty = WeightedL1Penalty(numpy.full(z.shape[0], weight))
    result = prox(penalty, numpy.eye(z.shape[0]), z)
    numpy.testing.assert_allclose(result.point, shrink(z, weight))
    assert result.inner_residual <= 1e-12 * max(1.0, numpy.linalg.norm(z))


def test_penalty_from_dict():
    assert isinstance(penalty_from_dict({'kind': 'Zero'}), ZeroPenalty)
    l1 = penalty_from_dict({'kind': 'WeightedL1', 'params': {'weights': [1.0, 2.0]}}, dim=2)
    numpy.testing.assert_array_equal(l1.weights, [1.0, 2.0])
    box = penalty_from_dict({'kind': 'BoxIndicator', 'params': {'lower': ['-inf', 0], 'upper': [1, 'inf']}})
    assert box.lower[0] == -math.inf and box.upper[1] == math.inf
    assert penalty_from_dict(box.to_dict()).to_dict() == box.to_dict()


@pytest.mark.parametrize('data, field', [
    ({'kind': 'Cubic'}, 'penalty.kind'),
    ({'params': {}}, 'penalty.kind'),
    ({'kind': 'WeightedL1', 'params': {}}, 'penalty.params'),
    ({'kind': 'WeightedL1', 'params': {'weights': [-1.0]}}, 'penalty.params'),
    ({'kind': 'BoxIndicator', 'params': {'lower': [2.0], 'upper': [1.0]}}, 'penalty.params'),
])
def test_penalty_from_dict_errors(data, field):
    with pytest.raises(ProblemFileError) as e:
        penalty_from_dict(data)
    assert e.value.field == field


def test_penalty_from_dict_dimension_error():
    with pytest.raises(ProblemFileError):
        penalty_from_dict({'kind': 'WeightedL1', 'params': {'weights': [1.0]}}, dim=2)
