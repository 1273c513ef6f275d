"""Majorant functions of the Jacobian around a stationary point and the quantities derived
from them: the zero nu of f', the contraction radius rho, the certified radius
r = min(rho, delta), the h-condition gate and the coefficients of the error recursion.

Two models ship:

    LipschitzMajorant   f(t) = L t^2 / 2 - t
    SmaleMajorant       f(t) = t / (1 - gamma t) - 2 t

Both have closed-form (or quartic) radii which are always cross-checked against the
generic bisection on the contraction ratio Q(t) = 1.
"""
import logging
import math
from dataclasses import dataclass

import numpy
from scipy import optimize

from .classes import AbstractProxGNSection
from .constants import ONE_PLUS_SQRT2, SQRT2, BISECTION_MAX_ITERATIONS, BISECTION_ABSOLUTE_TOLERANCE, \
    BISECTION_RELATIVE_TOLERANCE, RHO_OPEN_ENDPOINT_FACTOR, CROSS_CHECK_RELATIVE_TOLERANCE, MODEL_LIPSCHITZ, \
    MODEL_SMALE, MODEL_KINDS, METHOD_GENERIC_BISECTION, METHOD_LIPSCHITZ_CLOSED_FORM, METHOD_SMALE_QUARTIC, \
    ACTION_CERTIFICATE_READY
from .exceptions import DegenerateModel, DomainError, H3Violated, CrossCheckMismatch, RadiusUndefined


def _bisect(function, lower, upper, scale):
    try:
        return optimize.bisect(function, lower, upper,
                               xtol=BISECTION_ABSOLUTE_TOLERANCE * scale,
                               rtol=BISECTION_RELATIVE_TOLERANCE,
                               maxiter=BISECTION_MAX_ITERATIONS)
    except (RuntimeError, ValueError) as e:
        raise RadiusUndefined('Bisection on [{0:.6g}, {1:.6g}] failed: {2}'.format(lower, upper, e))


class MajorantModel(object):
    """Base class for majorant functions f: [0, R) -> R with f(0) = 0, f'(0) = -1 and f'
    strictly increasing. Subclasses provide f, f' and the right derivative of f' at 0.
    'nu' defaults to a bisection on f' and can be overridden with a closed form.
    """

    kind = None

    def f(self, t):
        raise NotImplementedError

    def fprime(self, t):
        raise NotImplementedError

    @property
    def dplus_fprime0(self):
        raise NotImplementedError

    @property
    def domain_bound(self):
        return math.inf

    @property
    def parameter(self):
        return None

    def nu(self):
        return nu_bisection(self)

    def to_dict(self):
        return {'kind': self.kind}

    def __repr__(self):
        return '{0}({1})'.format(self.__class__.__name__, self.to_dict())


class LipschitzMajorant(MajorantModel):
    """f(t) = L t^2 / 2 - t, i.e. beta ||F'(x) - F'(y)|| <= L ||x - y||. L = 0 is the affine
    residual case, where f' is constant and nu is unbounded.
    """

    kind = MODEL_LIPSCHITZ

    def __init__(self, L, domain_bound=math.inf):
        if not (L >= 0) or not math.isfinite(L):
            raise DegenerateModel('Lipschitz model requires a finite L >= 0, got {0}'.format(L))
        assert domain_bound > 0, 'domain_bound must be positive'
        self.L = float(L)
        self._domain_bound = float(domain_bound)

    def f(self, t):
        return 0.5 * self.L * t * t - t

    def fprime(self, t):
        return self.L * t - 1.0

    @property
    def dplus_fprime0(self):
        return self.L

    @property
    def domain_bound(self):
        return self._domain_bound

    @property
    def parameter(self):
        return self.L

    def nu(self):
        if self.L == 0:
            return self._domain_bound
        return min(1.0 / self.L, self._domain_bound)

    def to_dict(self):
        return {'kind': self.kind, 'L': self.L}


class SmaleMajorant(MajorantModel):
    """f(t) = t / (1 - gamma t) - 2 t on [0, 1/gamma), the majorant of analytic maps with
    Smale constant gamma.
    """

    kind = MODEL_SMALE

    def __init__(self, gamma):
        if not (gamma > 0) or not math.isfinite(gamma):
            raise DegenerateModel('Smale model requires gamma > 0, got {0}'.format(gamma))
        self.gamma = float(gamma)

    def f(self, t):
        return t / (1.0 - self.gamma * t) - 2.0 * t

    def fprime(self, t):
        return 1.0 / (1.0 - self.gamma * t) ** 2 - 2.0

    @property
    def dplus_fprime0(self):
        return 2.0 * self.gamma

    @property
    def domain_bound(self):
        return 1.0 / self.gamma

    @property
    def parameter(self):
        return self.gamma

    def nu(self):
        return (2.0 - SQRT2) / (2.0 * self.gamma)

    def to_dict(self):
        return {'kind': self.kind, 'gamma': self.gamma}


def model_from_kind(kind, parameter):
    """Builds the model named 'kind' ('lipschitz' or 'smale') with parameter L or gamma."""
    assert kind in MODEL_KINDS, 'Unknown model kind "{0}"'.format(kind)
    if parameter is None:
        raise DegenerateModel('No {0} parameter available'.format(kind))
    if kind == MODEL_LIPSCHITZ:
        return LipschitzMajorant(parameter)
    return SmaleMajorant(parameter)


@dataclass(frozen=True)
class LocalConstants:
    c: float
    beta: float
    kappa: float
    delta: float

    def __post_init__(self):
        assert self.c >= 0, 'c must be nonnegative'
        assert self.beta > 0, 'beta must be positive'
        assert self.kappa > 0, 'kappa must be positive'
        assert self.delta > 0, 'delta must be positive'

    def to_dict(self):
        return {'c': self.c, 'beta': self.beta, 'kappa': self.kappa, 'delta': self.delta}


@dataclass(frozen=True)
class RadiusCertificate:
    model: str
    model_parameter: float
    c: float
    beta: float
    kappa: float
    delta: float
    h_value: float
    h_ok: bool
    nu: float
    rho: float
    r: float
    method: str
    cross_check_delta: float
    parameter_estimated: bool = False

    @property
    def constants(self):
        return LocalConstants(c=self.c, beta=self.beta, kappa=self.kappa, delta=self.delta)

    def to_dict(self):
        return {
            'model': self.model,
            'model_parameter': self.model_parameter,
            'parameter_estimated': self.parameter_estimated,
            'c': self.c,
            'beta': self.beta,
            'kappa': self.kappa,
            'delta': self.delta,
            'h': self.h_value,
            'h_ok': self.h_ok,
            'nu': self.nu,
            'rho': self.rho,
            'r': self.r,
            'method': self.method,
            'cross_check_delta': self.cross_check_delta,
        }


def condition_h(model, consts):
    """h = [(1 + sqrt(2)) kappa + 1] c beta D+f'(0). Local convergence needs h < 1."""
    return (ONE_PLUS_SQRT2 * consts.kappa + 1.0) * consts.c * consts.beta * model.dplus_fprime0


def _check_h(model, consts):
    h = condition_h(model, consts)
    if not h < 1.0:
        raise H3Violated(h)
    return h


def nu_bisection(model):
    """Zero of f' on (0, R_f) found by bisection (f' is strictly increasing)."""
    upper = model.domain_bound
    if math.isinf(upper):
        upper = 1.0
        while model.fprime(upper) < 0:
            upper *= 2.0
            if upper > 1e300:
                return math.inf
    else:
        upper = upper * RHO_OPEN_ENDPOINT_FACTOR
        if model.fprime(upper) < 0:
            return model.domain_bound
    return _bisect(model.fprime, 0.0, upper, upper)


def nu(model):
    """nu = sup{t in [0, R): f'(t) < 0}"""
    return model.nu()


def _check_t(model, t, nu_value=None):
    nu_value = model.nu() if nu_value is None else nu_value
    if not 0.0 < t < nu_value:
        raise DomainError('t={0:.6g} outside (0, nu={1:.6g})'.format(t, nu_value))


def contraction_ratio(model, consts, t):
    """Q(t) = ([f'+1+kappa][t f' - f + c beta (1+sqrt(2))(f'+1)] + c beta [f'+1]) / (t f'^2)

    Q is increasing on (0, nu), tends to h as t -> 0 and rho is its crossing with 1.
    """
    _check_t(model, t)
    d = model.fprime(t)
    cb = consts.c * consts.beta
    numerator = (d + 1.0 + consts.kappa) * (t * d - model.f(t) + cb * ONE_PLUS_SQRT2 * (d + 1.0)) + cb * (d + 1.0)
    return numerator / (t * d * d)


def rho_generic(model, consts):
    """rho = sup{t in (0, nu): Q(t) < 1}, by bisection on Q(t) - 1."""
    _check_h(model, consts)
    nu_value = model.nu()
    if math.isinf(nu_value):
        return nu_value
    lower = 1e-12 * nu_value
    upper = nu_value * RHO_OPEN_ENDPOINT_FACTOR

    def excess(t):
        return contraction_ratio(model, consts, t) - 1.0

    if excess(upper) < 0:
        logging.debug('Q < 1 on the whole of (0, nu), rho at the open endpoint')
        return upper
    if excess(lower) >= 0:
        raise RadiusUndefined('Q(t) >= 1 already at t={0:.3e}'.format(lower))
    rho = _bisect(excess, lower, upper, nu_value)
    logging.debug('Generic rho bisection on [{0:.3e}, {1:.3e}] -> {2:.12g}'.format(lower, upper, rho))
    return rho


def rho_lipschitz(consts, L):
    """Closed-form rho of the Lipschitz model:

        (4 + kappa + 2c(1+sqrt(2))beta L - sqrt((4 + kappa + 2c(1+sqrt(2))beta L)^2 - 8(1-h))) / (2L)
    """
    model = LipschitzMajorant(L)
    h = _check_h(model, consts)
    if L == 0:
        return math.inf
    b = 4.0 + consts.kappa + 2.0 * consts.c * ONE_PLUS_SQRT2 * consts.beta * L
    discriminant = b * b - 8.0 * (1.0 - h)
    # Stable form of the smaller root of y^2 - b y + 2(1-h)
    y = 4.0 * (1.0 - h) / (b + math.sqrt(discriminant))
    return y / L


def smale_quartic(consts, gamma, s):
    """p(s) = -4s^4 + (1-k+a+b(k-1)) s^3 + (3+k+a+b(k-1)) s^2 + (b-1) s + b,
    with a = gamma c beta and b = (1+sqrt(2)) gamma c beta.
    """
    k = consts.kappa
    a = gamma * consts.c * consts.beta
    b = ONE_PLUS_SQRT2 * a
    return numpy.polyval([-4.0, 1.0 - k + a + b * (k - 1.0), 3.0 + k + a + b * (k - 1.0), b - 1.0, b], s)


def rho_smale(consts, gamma):
    """rho = (1 - s) / gamma, s the root of the decreasing quartic p on (sqrt(2)/2, 1)."""
    model = SmaleMajorant(gamma)
    _check_h(model, consts)
    lower = SQRT2 / 2.0

    def p(s):
        return smale_quartic(consts, gamma, s)

    if not p(lower) > 0 or not p(1.0) < 0:
        raise RadiusUndefined('Quartic has no sign change on (sqrt(2)/2, 1): p={0:.6g}, {1:.6g}'.format(
            p(lower), p(1.0)))
    s_bar = _bisect(p, lower, 1.0, 1.0)
    return (1.0 - s_bar) / gamma


def certificate(model, consts, parameter_estimated=False):
    """Assembles nu, rho, r = min(rho, delta) and the h gate. The closed-form rho is always
    cross-checked against the generic bisection.
    """
    h = _check_h(model, consts)
    nu_value = model.nu()
    generic = rho_generic(model, consts)
    if isinstance(model, LipschitzMajorant):
        rho, method = rho_lipschitz(consts, model.L), METHOD_LIPSCHITZ_CLOSED_FORM
    elif isinstance(model, SmaleMajorant):
        rho, method = rho_smale(consts, model.gamma), METHOD_SMALE_QUARTIC
    else:
        rho, method = generic, METHOD_GENERIC_BISECTION

    if math.isinf(rho) or math.isinf(generic):
        cross_check_delta = 0.0 if rho == generic else math.inf
    else:
        cross_check_delta = abs(rho - generic) / max(abs(rho), numpy.finfo(float).tiny)
    if cross_check_delta > CROSS_CHECK_RELATIVE_TOLERANCE:
        raise CrossCheckMismatch('rho={0:.12g} ({1}) differs from generic bisection {2:.12g}'.format(
            rho, method, generic))

    rho = min(rho, nu_value)
    cert = RadiusCertificate(
        model=model.kind, model_parameter=model.parameter,
        c=consts.c, beta=consts.beta, kappa=consts.kappa, delta=consts.delta,
        h_value=h, h_ok=bool(h < 1.0), nu=nu_value, rho=rho, r=min(rho, consts.delta), method=method,
        cross_check_delta=cross_check_delta, parameter_estimated=parameter_estimated)
    logging.info('Certificate ({0}): h={1:.6g} nu={2:.6g} rho={3:.12g} r={4:.12g}'.format(
        method, h, nu_value, cert.rho, cert.r))
    return cert


@dataclass(frozen=True)
class RecursionCoefficients:
    quad_a: float
    quad_b: float
    lin: float

    def bound(self, sigma):
        """Upper bound for the next distance to x* given the current distance 'sigma'."""
        return (self.quad_a + self.quad_b) * sigma * sigma + self.lin * sigma


def error_recursion_coefficients(model, consts, t):
    """Coefficients of ||x_{k+1} - x*|| <= (quad_a + quad_b) ||x_k - x*||^2 + lin ||x_k - x*||
    evaluated at t in (0, nu).
    """
    _check_t(model, t)
    d = model.fprime(t)
    cb = consts.c * consts.beta
    td2 = (t * d) ** 2
    return RecursionCoefficients(
        quad_a=(d + 1.0 + consts.kappa) * (d * t - model.f(t)) / td2,
        quad_b=ONE_PLUS_SQRT2 * cb * (d + 1.0) ** 2 / td2,
        lin=cb * (ONE_PLUS_SQRT2 * consts.kappa + 1.0) * (d + 1.0) / (t * d * d))


def lipschitz_recursion_coefficients(consts, L, t):
    """Explicit Lipschitz coefficients; quad_a + quad_b = (kappa L + 2c(1+sqrt(2))beta L^2 + L^2 t) / (2(1-Lt)^2)."""
    model = LipschitzMajorant(L)
    _check_t(model, t)
    denominator = (1.0 - L * t) ** 2
    return RecursionCoefficients(
        quad_a=(consts.kappa * L + L * L * t) / (2.0 * denominator),
        quad_b=ONE_PLUS_SQRT2 * consts.c * consts.beta * L * L / denominator,
        lin=condition_h(model, consts) / denominator)


def smale_recursion_coefficients(consts, gamma, t):
    """Explicit Smale coefficients in s = 1 - gamma t."""
    model = SmaleMajorant(gamma)
    _check_t(model, t)
    s = 1.0 - gamma * t
    denominator = (1.0 - 2.0 * s * s) ** 2
    cb = consts.c * consts.beta
    return RecursionCoefficients(
        quad_a=gamma * (1.0 + (consts.kappa - 1.0) * s * s) / denominator,
        quad_b=ONE_PLUS_SQRT2 * cb * gamma * gamma * (1.0 + s) ** 2 / denominator,
        lin=cb * gamma * (ONE_PLUS_SQRT2 * consts.kappa + 1.0) * (1.0 + s) * s * s / denominator)


def linearization_error_bound(model, t):
    """e_f(t, 0) = f(0) - f(t) + f'(t) t"""
    return model.f(0.0) - model.f(t) + model.fprime(t) * t


def sample_monotone_functions(model, consts, grid):
    """Evaluates on 'grid' (points of (0, nu)) the four functions which are positive and
    increasing for every admissible majorant:

        -1/f'(t), -(f'(t)+1+kappa)/f'(t), (t f'(t) - f(t))/t^2, (f'(t)+1)/t
    """
    grid = numpy.asarray(grid, dtype=numpy.float64)
    f = numpy.array([model.f(t) for t in grid])
    d = numpy.array([model.fprime(t) for t in grid])
    return {
        'inverse_derivative': -1.0 / d,
        'shifted_derivative_ratio': -(d + 1.0 + consts.kappa) / d,
        'linearization_ratio': (grid * d - f) / grid ** 2,
        'derivative_slope': (d + 1.0) / grid,
    }


class ProxGNCertifier(AbstractProxGNSection):
    """Class to compute convergence certificates for the problem held by the ProxGN object.
    This class is not expected to be used directly, but instead through the 'certifier'
    attribute of the ProxGN object.

    Constants are extracted from the problem's known minimizer (see
    'problems.local_constants'), then passed to 'certificate'.
    """

    last_certificate = None

    def certify(self, model_kind=None):
        """Returns the RadiusCertificate of the problem for 'model_kind' (defaults to the
        model kind configured in the ProxGN object) and triggers 'on_certificate_ready'.
        """
        extracted = self.proxgn.extract_constants(model_kind)
        cert = certificate(extracted.model, extracted.constants, parameter_estimated=extracted.estimated)
        self.last_certificate = cert
        self.proxgn.trigger_action(ACTION_CERTIFICATE_READY, cert)
        return cert

    def recursion_coefficients(self, t, model_kind=None):
        extracted = self.proxgn.extract_constants(model_kind)
        return error_recursion_coefficients(extracted.model, extracted.constants, t)
