"""Problems of the form

    min_x 1/2 ||F(x)||^2 + J(x),   x in a domain Omega

where F is a polynomial map (exact Jacobians and derivative tensors) and J a penalty from
the 'prox' module. The module also extracts the local constants (c, beta, kappa, delta)
at a known minimizer together with the Lipschitz or Smale parameter, and ships a catalog
of problems with ground truth used by the verification suite.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass

import numpy

from .constants import DOMAIN_WHOLE_SPACE, DOMAIN_BALL, MODEL_LIPSCHITZ, MODEL_SMALE, MODEL_KINDS, DEFAULT_SEED, \
    DEFAULT_INJECTIVITY_THRESHOLD, SPHERE_SAMPLES, SPHERE_SAMPLING_MAX_DIM, POWER_ITERATION_STEPS, \
    POWER_ITERATION_RESTARTS, LIPSCHITZ_SAMPLE_PAIRS
from .exceptions import DimensionMismatch, DomainError, MissingGroundTruth, NotInjectiveAtMinimizer, \
    ProblemFileError
from .linalg import as_vector, svd_factors, spectral_norm
from .majorant import LocalConstants, model_from_kind
from .prox import ZeroPenalty, WeightedL1Penalty, penalty_from_dict


def _falling_factorial(n, k):
    result = 1
    for i in range(k):
        result *= n - i
    return result


class PolynomialMap(object):
    """Map F: R^n -> R^m whose components are sparse multivariate polynomials. Each
    component is a list of terms (coefficient, exponents) with one nonnegative integer
    exponent per input variable.
    """

    def __init__(self, input_dim, components):
        assert input_dim >= 1, 'input_dim must be positive'
        self.input_dim = int(input_dim)
        self.components = []
        for i, terms in enumerate(components):
            parsed = []
            for coefficient, exponents in terms:
                exponents = tuple(int(e) for e in exponents)
                if len(exponents) != self.input_dim:
                    raise DimensionMismatch('Term of component {0} has {1} exponents for input dimension {2}'.format(
                        i, len(exponents), self.input_dim))
                assert all(e >= 0 for e in exponents), 'Exponents must be nonnegative'
                parsed.append((float(coefficient), exponents))
            self.components.append(parsed)

    @property
    def output_dim(self):
        return len(self.components)

    @property
    def total_degree(self):
        degrees = [sum(exponents) for terms in self.components for _, exponents in terms]
        return max(degrees) if degrees else 0

    def _check_x(self, x):
        try:
            return as_vector(x, self.input_dim)
        except DimensionMismatch:
            raise DimensionMismatch('Map expects inputs of dimension {0}, got {1}'.format(
                self.input_dim, numpy.asarray(x).size))

    @staticmethod
    def _term_derivative(coefficient, exponents, counts, x):
        # d^|counts| / dx^counts of coefficient * x^exponents
        value = coefficient
        for e, k, xv in zip(exponents, counts, x):
            if k > e:
                return 0.0
            value *= _falling_factorial(e, k) * xv ** (e - k)
        return value

    def evaluate(self, x):
        x = self._check_x(x)
        no_derivative = (0,) * self.input_dim
        return numpy.array([sum(self._term_derivative(c, e, no_derivative, x) for c, e in terms)
                            for terms in self.components], dtype=numpy.float64)

    def jacobian(self, x):
        return self.derivative_tensor(x, 1)

    def derivative_tensor(self, x, order):
        """n-th derivative F^(n)(x) as an array of shape (m, n_in, ..., n_in) with 'order'
        input axes. Entry [i, j1, ..., jn] is the partial derivative of F_i with respect to
        x_j1, ..., x_jn.
        """
        assert order >= 0, 'order must be nonnegative'
        x = self._check_x(x)
        if order == 0:
            return self.evaluate(x)
        tensor = numpy.zeros((self.output_dim,) + (self.input_dim,) * order)
        for index in itertools.product(range(self.input_dim), repeat=order):
            counts = [0] * self.input_dim
            for j in index:
                counts[j] += 1
            for i, terms in enumerate(self.components):
                tensor[(i,) + index] = sum(self._term_derivative(c, e, counts, x) for c, e in terms)
        return tensor

    def to_dict(self):
        return {
            'input_dim': self.input_dim,
            'output_dim': self.output_dim,
            'components': [[[c, list(e)] for c, e in terms] for terms in self.components],
        }


def evaluate(map, x):
    return map.evaluate(x)


def jacobian(map, x):
    return map.jacobian(x)


def derivative_tensor(map, x, order):
    return map.derivative_tensor(x, order)


def linear_map(matrix, offset):
    """PolynomialMap of F(x) = matrix @ x + offset."""
    matrix = numpy.atleast_2d(numpy.asarray(matrix, dtype=numpy.float64))
    offset = as_vector(offset, matrix.shape[0])
    n = matrix.shape[1]
    components = []
    for row, constant in zip(matrix, offset):
        terms = [(constant, [0] * n)] if constant != 0 else []
        for j, coefficient in enumerate(row):
            if coefficient != 0:
                exponents = [0] * n
                exponents[j] = 1
                terms.append((coefficient, exponents))
        components.append(terms)
    return PolynomialMap(n, components)


def contract(tensor, h):
    """T(h, ..., h) for a tensor of shape (m, n, ..., n)."""
    value = tensor
    for _ in range(tensor.ndim - 1):
        value = value @ h
    return value


def _sphere_directions(dim):
    if dim == 1:
        return numpy.array([[1.0]])
    if dim == 2:
        # T(-h, ..., -h) = +-T(h, ..., h), half a circle is enough
        angles = numpy.linspace(0.0, math.pi, SPHERE_SAMPLES, endpoint=False)
        return numpy.column_stack([numpy.cos(angles), numpy.sin(angles)])
    # Fibonacci lattice on the unit sphere
    i = numpy.arange(SPHERE_SAMPLES) + 0.5
    polar = numpy.arccos(1.0 - 2.0 * i / SPHERE_SAMPLES)
    azimuth = math.pi * (1.0 + math.sqrt(5.0)) * i
    return numpy.column_stack([numpy.cos(azimuth) * numpy.sin(polar),
                               numpy.sin(azimuth) * numpy.sin(polar),
                               numpy.cos(polar)])


def symmetric_tensor_norm(tensor, seed=DEFAULT_SEED):
    """Norm sup{||T(h, ..., h)|| : ||h|| = 1} of a symmetric multilinear form.

    Uses a dense direction grid of the unit sphere in dimension <= 3 and power iteration
    with random restarts above. Returns (norm, estimated) where 'estimated' is False only
    when the value is exact (one-dimensional inputs).
    """
    dim = tensor.shape[-1]
    if dim <= SPHERE_SAMPLING_MAX_DIM:
        best = max(float(numpy.linalg.norm(contract(tensor, h))) for h in _sphere_directions(dim))
        return best, dim > 1

    order = tensor.ndim - 1
    rng = numpy.random.default_rng(seed)
    best = 0.0
    for _ in range(POWER_ITERATION_RESTARTS):
        h = rng.standard_normal(dim)
        h /= numpy.linalg.norm(h)
        for _ in range(POWER_ITERATION_STEPS):
            partial = tensor
            for _ in range(order - 1):
                partial = partial @ h
            gradient = partial.T @ (partial @ h)
            gradient_norm = numpy.linalg.norm(gradient)
            if gradient_norm == 0:
                break
            h = gradient / gradient_norm
        best = max(best, float(numpy.linalg.norm(contract(tensor, h))))
    return best, True


def smale_gamma(map, x_star, beta, seed=DEFAULT_SEED):
    """gamma = max_{1 < n <= deg F} beta ||F^(n)(x*) / n!||^(1/(n-1)), exact as a finite max
    for polynomial maps. Returns (gamma, estimated).
    """
    gamma = 0.0
    estimated = False
    for n in range(2, map.total_degree + 1):
        norm, norm_estimated = symmetric_tensor_norm(map.derivative_tensor(x_star, n), seed=seed)
        estimated = estimated or norm_estimated
        gamma = max(gamma, beta * (norm / math.factorial(n)) ** (1.0 / (n - 1)))
    return gamma, estimated


def sample_ball(rng, center, radius, count):
    """'count' points uniformly distributed in the open ball B(center, radius)."""
    dim = center.shape[0]
    directions = rng.standard_normal((count, dim))
    directions /= numpy.linalg.norm(directions, axis=1)[:, None]
    radii = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / dim)
    return center + directions * radii[:, None]


def estimate_lipschitz(map, x_star, beta, radius, seed=DEFAULT_SEED):
    """Estimates L = beta * Lip(F') on B(x*, radius) as a max over sampled pairs. Affine maps
    give exactly 0.
    """
    if map.total_degree <= 1:
        return 0.0
    rng = numpy.random.default_rng(seed)
    xs = sample_ball(rng, x_star, radius, LIPSCHITZ_SAMPLE_PAIRS)
    ys = sample_ball(rng, x_star, radius, LIPSCHITZ_SAMPLE_PAIRS)
    best = 0.0
    for x, y in zip(xs, ys):
        distance = numpy.linalg.norm(x - y)
        if distance > 0:
            best = max(best, spectral_norm(map.jacobian(x) - map.jacobian(y)) / distance)
    return beta * best


class WholeSpace(object):
    """Omega = R^n; 'R' bounds the radius used as delta."""

    kind = DOMAIN_WHOLE_SPACE

    def __init__(self, R):
        assert R > 0, 'WholeSpace radius must be positive'
        self.R = float(R)

    def contains(self, x):
        return bool(numpy.all(numpy.isfinite(x)))

    def delta(self, x_star):
        return self.R

    def to_dict(self):
        return {'kind': self.kind, 'params': {'R': self.R}}


class Ball(object):

    kind = DOMAIN_BALL

    def __init__(self, center, radius):
        assert radius > 0, 'Ball radius must be positive'
        self.center = as_vector(center)
        self.radius = float(radius)

    def contains(self, x):
        return bool(numpy.linalg.norm(as_vector(x, self.center.shape[0]) - self.center) < self.radius)

    def delta(self, x_star):
        """Largest t with B(x*, t) inside the ball."""
        delta = self.radius - float(numpy.linalg.norm(as_vector(x_star, self.center.shape[0]) - self.center))
        if delta <= 0:
            raise DomainError('Reference point lies outside the domain ball')
        return delta

    def to_dict(self):
        return {'kind': self.kind, 'params': {'center': self.center.tolist(), 'radius': self.radius}}


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    map: PolynomialMap
    penalty: object
    domain: object
    known_minimizer: numpy.ndarray = None
    known_lipschitz_L: float = None
    known_gamma: float = None
    declared_model: str = MODEL_LIPSCHITZ
    description: str = ''

    def __post_init__(self):
        self.penalty.check_dim(self.dim)
        if isinstance(self.domain, Ball) and self.domain.center.shape[0] != self.dim:
            raise DimensionMismatch('Domain ball center has dimension {0}, expected {1}'.format(
                self.domain.center.shape[0], self.dim))
        if self.known_minimizer is not None:
            object.__setattr__(self, 'known_minimizer', as_vector(self.known_minimizer, self.dim))
            if not self.domain.contains(self.known_minimizer):
                raise DomainError('Known minimizer of "{0}" lies outside its domain'.format(self.name))
        assert self.declared_model in MODEL_KINDS, 'Unknown model kind "{0}"'.format(self.declared_model)

    @property
    def dim(self):
        return self.map.input_dim

    def residual(self, x):
        return self.map.evaluate(x)

    def jacobian(self, x):
        return self.map.jacobian(x)

    def stationarity(self, x):
        """dist(-F'(x)^T F(x), dJ(x)); zero exactly at stationary points."""
        x = as_vector(x, self.dim)
        return self.penalty.subdifferential_distance(x, -self.jacobian(x).T @ self.residual(x))

    def known_parameter(self, model_kind):
        return self.known_lipschitz_L if model_kind == MODEL_LIPSCHITZ else self.known_gamma


@dataclass(frozen=True)
class ExtractedConstants:
    constants: LocalConstants
    model: object
    estimated: bool
    smallest_singular: float
    largest_singular: float


def local_constants(problem, model_kind=None, seed=DEFAULT_SEED):
    """Extracts c = ||F(x*)||, beta = ||F'(x*)^+||, kappa = beta ||F'(x*)|| and delta at the
    known minimizer, plus the Lipschitz L or Smale gamma of 'model_kind' (known value when
    the problem declares one, estimate otherwise).
    """
    model_kind = model_kind or problem.declared_model
    assert model_kind in MODEL_KINDS, 'Unknown model kind "{0}"'.format(model_kind)
    x_star = problem.known_minimizer
    if x_star is None:
        raise MissingGroundTruth('Problem "{0}" has no known minimizer'.format(problem.name))
    factors = svd_factors(problem.jacobian(x_star))
    smallest = factors.smallest(problem.dim)
    if smallest <= DEFAULT_INJECTIVITY_THRESHOLD:
        raise NotInjectiveAtMinimizer('Jacobian of "{0}" is not injective at x* (sigma_min={1:.3e})'.format(
            problem.name, smallest))
    beta = 1.0 / smallest
    consts = LocalConstants(c=float(numpy.linalg.norm(problem.residual(x_star))), beta=beta,
                            kappa=beta * factors.largest, delta=problem.domain.delta(x_star))

    parameter = problem.known_parameter(model_kind)
    estimated = False
    if parameter is None:
        if model_kind == MODEL_LIPSCHITZ:
            radius = consts.delta if math.isfinite(consts.delta) else 1.0
            parameter = estimate_lipschitz(problem.map, x_star, beta, radius, seed=seed)
            estimated = problem.map.total_degree > 1
        else:
            parameter, estimated = smale_gamma(problem.map, x_star, beta, seed=seed)
        if estimated:
            logging.warning('Using estimated {0} parameter {1:.6g} for "{2}"'.format(
                model_kind, parameter, problem.name))
    return ExtractedConstants(constants=consts, model=model_from_kind(model_kind, parameter), estimated=estimated,
                              smallest_singular=smallest, largest_singular=factors.largest)


def _linear1d():
    return Problem(
        name='linear1d', map=linear_map([[1.0]], [-2.0]), penalty=ZeroPenalty(), domain=WholeSpace(10.0),
        known_minimizer=numpy.array([2.0]), known_lipschitz_L=0.0, known_gamma=0.0,
        declared_model=MODEL_LIPSCHITZ, description='F(x) = x - 2, J = 0')


def _softthresh1d():
    return Problem(
        name='softthresh1d', map=linear_map([[1.0]], [-2.0]), penalty=WeightedL1Penalty([1.0]),
        domain=WholeSpace(10.0), known_minimizer=numpy.array([1.0]), known_lipschitz_L=0.0, known_gamma=0.0,
        declared_model=MODEL_LIPSCHITZ, description='F(x) = x - 2, J = |x| (nonzero residual, c = 1)')


def _quad2d_map():
    return PolynomialMap(2, [
        [(1.0, [1, 0])],
        [(1.0, [0, 1])],
        [(1.0, [2, 0]), (1.0, [0, 2])],
    ])


def _quad2d():
    return Problem(
        name='quad2d', map=_quad2d_map(), penalty=ZeroPenalty(), domain=WholeSpace(10.0),
        known_minimizer=numpy.zeros(2), known_lipschitz_L=2.0, known_gamma=1.0,
        declared_model=MODEL_SMALE, description='F(x) = (x1, x2, x1^2 + x2^2), J = 0')


def _quad2d_l1():
    return Problem(
        name='quad2d-l1', map=_quad2d_map(), penalty=WeightedL1Penalty([0.5, 0.5]), domain=WholeSpace(10.0),
        known_minimizer=numpy.zeros(2), known_lipschitz_L=2.0, known_gamma=1.0,
        declared_model=MODEL_LIPSCHITZ, description='F(x) = (x1, x2, x1^2 + x2^2), J = 0.5 ||x||_1')


def _rosenbrock_res():
    # F'(x*) = [[-20, 10], [-1, 0]]; F' varies only through its (0, 0) entry -20 x1, so
    # Lip(F') = 20 and ||F''(x*)/2|| = 10
    map = PolynomialMap(2, [
        [(10.0, [0, 1]), (-10.0, [2, 0])],
        [(1.0, [0, 0]), (-1.0, [1, 0])],
    ])
    x_star = numpy.ones(2)
    beta = 1.0 / svd_factors(map.jacobian(x_star)).smallest(2)
    return Problem(
        name='rosenbrock-res', map=map, penalty=ZeroPenalty(), domain=WholeSpace(10.0),
        known_minimizer=x_star, known_lipschitz_L=20.0 * beta, known_gamma=10.0 * beta,
        declared_model=MODEL_LIPSCHITZ, description='F(x) = (10 (x2 - x1^2), 1 - x1), J = 0')


def catalog():
    """Problems with known minimizer and known L and gamma."""
    return [_linear1d(), _softthresh1d(), _quad2d(), _quad2d_l1(), _rosenbrock_res()]


def catalog_problem(name):
    for problem in catalog():
        if problem.name == name:
            return problem
    raise ProblemFileError('Unknown catalog problem "{0}" (available: {1})'.format(
        name, ', '.join(p.name for p in catalog())), field='problem')


def _require(data, key, path):
    if key not in data:
        raise ProblemFileError('Missing required field', field=path + key)
    return data[key]


def _as_float_list(values, path):
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise ProblemFileError('Expected a list of numbers', field=path)


def domain_from_dict(data, dim):
    if not isinstance(data, dict) or 'kind' not in data:
        raise ProblemFileError('Domain must be an object with a "kind"', field='domain.kind')
    params = data.get('params', {}) or {}
    try:
        if data['kind'] == DOMAIN_WHOLE_SPACE:
            return WholeSpace(float(params.get('R', math.inf)))
        if data['kind'] == DOMAIN_BALL:
            center = _as_float_list(_require(params, 'center', 'domain.params.'), 'domain.params.center')
            if len(center) != dim:
                raise ProblemFileError('Center must have {0} entries'.format(dim), field='domain.params.center')
            return Ball(center, float(_require(params, 'radius', 'domain.params.')))
    except (AssertionError, TypeError, ValueError) as e:
        raise ProblemFileError('Invalid domain parameters: {0}'.format(e), field='domain.params')
    raise ProblemFileError('Unknown domain kind "{0}"'.format(data['kind']), field='domain.kind')


def problem_from_dict(data, name=None):
    """Builds a Problem from its JSON document (see docs/schemas.md). Raises ProblemFileError
    naming the offending field.
    """
    if not isinstance(data, dict):
        raise ProblemFileError('Problem document must be an object')
    try:
        input_dim = int(_require(data, 'input_dim', ''))
        output_dim = int(_require(data, 'output_dim', ''))
    except (TypeError, ValueError):
        raise ProblemFileError('Dimensions must be integers', field='input_dim')
    if input_dim < 1 or output_dim < 1:
        raise ProblemFileError('Dimensions must be positive', field='input_dim')
    components = _require(data, 'components', '')
    if not isinstance(components, list) or len(components) != output_dim:
        raise ProblemFileError('Expected {0} components'.format(output_dim), field='components')
    parsed = []
    for i, terms in enumerate(components):
        if not isinstance(terms, list):
            raise ProblemFileError('Component must be a list of terms', field='components[{0}]'.format(i))
        parsed_terms = []
        for j, term in enumerate(terms):
            path = 'components[{0}][{1}]'.format(i, j)
            try:
                coefficient, exponents = term
                coefficient = float(coefficient)
                exponents = [int(e) for e in exponents]
            except (TypeError, ValueError):
                raise ProblemFileError('Term must be [coefficient, [exponents]]', field=path)
            if len(exponents) != input_dim or any(e < 0 for e in exponents):
                raise ProblemFileError('Expected {0} nonnegative exponents'.format(input_dim), field=path)
            parsed_terms.append((coefficient, exponents))
        parsed.append(parsed_terms)
    map = PolynomialMap(input_dim, parsed)

    penalty = penalty_from_dict(data.get('penalty', {'kind': 'Zero'}), dim=input_dim)
    domain = domain_from_dict(data.get('domain', {'kind': DOMAIN_WHOLE_SPACE, 'params': {'R': math.inf}}),
                              input_dim)
    truth = data.get('ground_truth', {}) or {}
    x_star = truth.get('x_star')
    if x_star is not None:
        x_star = _as_float_list(x_star, 'ground_truth.x_star')
        if len(x_star) != input_dim:
            raise ProblemFileError('Expected {0} entries'.format(input_dim), field='ground_truth.x_star')
    known = {}
    for key, attribute in (('L', 'known_lipschitz_L'), ('gamma', 'known_gamma')):
        if truth.get(key) is not None:
            try:
                known[attribute] = float(truth[key])
            except (TypeError, ValueError):
                raise ProblemFileError('Expected a number', field='ground_truth.' + key)
    model = data.get('model', MODEL_LIPSCHITZ)
    if model not in MODEL_KINDS:
        raise ProblemFileError('Unknown model "{0}"'.format(model), field='model')
    try:
        return Problem(name=name or data.get('name', 'problem'), map=map, penalty=penalty, domain=domain,
                       known_minimizer=x_star, declared_model=model, description=data.get('description', ''),
                       **known)
    except (DimensionMismatch, DomainError) as e:
        raise ProblemFileError(str(e), field='ground_truth.x_star')


def problem_to_dict(problem):
    data = {'name': problem.name, 'description': problem.description, 'model': problem.declared_model}
    data.update(problem.map.to_dict())
    data['penalty'] = problem.penalty.to_dict()
    data['domain'] = problem.domain.to_dict()
    truth = {}
    if problem.known_minimizer is not None:
        truth['x_star'] = problem.known_minimizer.tolist()
    if problem.known_lipschitz_L is not None:
        truth['L'] = problem.known_lipschitz_L
    if problem.known_gamma is not None:
        truth['gamma'] = problem.known_gamma
    if truth:
        data['ground_truth'] = truth
    return data


def load_problem_file(path):
    """Reads and validates a JSON problem file."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ProblemFileError('Could not read problem file {0}: {1}'.format(path, e.strerror))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError('Invalid JSON in {0}: {1}'.format(path, e.msg), line=e.lineno)
    problem = problem_from_dict(data)
    logging.info('Loaded problem "{0}" from {1}'.format(problem.name, path))
    return problem
