"""Audit of proximal Gauss-Newton runs against the local convergence bounds implied by a
majorant function: the error recursion, strict decrease of the distance to x*,
containment in the certified ball, the linearization error bound and the local bounds on
pseudoinverses and metrics. Also samples the majorant condition itself.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy

from .classes import AbstractProxGNSection
from .constants import SQRT2, SIGMA_FLOOR, RECURSION_SLACK_TOLERANCE, START_RADIUS_FRACTIONS, START_DIRECTIONS, \
    DEFAULT_SEED, LOCAL_BOUND_RELATIVE_TOLERANCE, FINAL_DISTANCE_TOLERANCE, \
    MAJORANT_SLACK_TOLERANCE
from .exceptions import MissingGroundTruth, DomainError, RadiusUndefined
from .linalg import as_vector, pseudoinverse, spectral_norm, metric_operator
from .majorant import SmaleMajorant, certificate, error_recursion_coefficients, linearization_error_bound, \
    contraction_ratio
from .problems import sample_ball, symmetric_tensor_norm
from .solver import linearization_error, with_recursion_slacks


@dataclass(frozen=True)
class LocalBoundsReport:
    """Slacks (bound minus observed value) of the local bounds at a point x with
    sigma = ||x - x*|| < min(nu, delta):

        ||F'(x)^+||                              <= -beta / f'(sigma)
        ||F'(x)^+ - F'(x*)^+||                   <= -sqrt(2) beta (f'(sigma) + 1) / f'(sigma)
        ||H(x)||^1/2                             <= (f'(sigma) + 1 + kappa) / beta
        ||H(x)^-1||^1/2                          <= -beta / f'(sigma)
        beta ||(H(x) - H(x*)) F'(x*)^+||         <= (f'(sigma) + 2 + kappa)(f'(sigma) + 1)
    """
    sigma: float
    pinv_norm_slack: float
    pinv_difference_slack: float
    metric_norm_slack: float
    metric_inverse_norm_slack: float
    metric_difference_slack: float
    scale: float

    @property
    def slacks(self):
        return [self.pinv_norm_slack, self.pinv_difference_slack, self.metric_norm_slack,
                self.metric_inverse_norm_slack, self.metric_difference_slack]

    @property
    def min_slack(self):
        return min(self.slacks)

    @property
    def ok(self):
        return self.min_slack >= -LOCAL_BOUND_RELATIVE_TOLERANCE * max(1.0, self.scale)


def check_local_bounds(problem, model, consts, x, x_star=None):
    x_star = problem.known_minimizer if x_star is None else as_vector(x_star, problem.dim)
    if x_star is None:
        raise MissingGroundTruth('Local bounds need a known minimizer')
    x = as_vector(x, problem.dim)
    sigma = float(numpy.linalg.norm(x - x_star))
    if not sigma < min(model.nu(), consts.delta):
        raise DomainError('sigma={0:.6g} is not below min(nu, delta)'.format(sigma))

    d = model.fprime(sigma)
    beta, kappa = consts.beta, consts.kappa
    jac, jac_star = problem.jacobian(x), problem.jacobian(x_star)
    pinv, pinv_star = pseudoinverse(jac), pseudoinverse(jac_star)
    H, H_star = metric_operator(jac), metric_operator(jac_star)

    bounds = [
        -beta / d,
        -SQRT2 * beta * (d + 1.0) / d,
        (d + 1.0 + kappa) / beta,
        -beta / d,
        (d + 2.0 + kappa) * (d + 1.0),
    ]
    observed = [
        spectral_norm(pinv),
        spectral_norm(pinv - pinv_star),
        math.sqrt(spectral_norm(H)),
        math.sqrt(spectral_norm(numpy.linalg.inv(H))),
        beta * spectral_norm((H - H_star) @ pinv_star),
    ]
    slacks = [b - o for b, o in zip(bounds, observed)]
    return LocalBoundsReport(sigma, *slacks, scale=max(abs(b) for b in bounds))


@dataclass(frozen=True)
class SampledBoundReport:
    min_slack: float
    samples: int
    seed: int

    @property
    def ok(self):
        return self.min_slack >= -MAJORANT_SLACK_TOLERANCE


def check_majorant_condition(problem, model, consts, samples=100, seed=DEFAULT_SEED):
    """Samples beta ||F'(x) - F'(x* + tau (x - x*))|| <= f'(sigma) - f'(tau sigma) for x in
    B(x*, min(nu, delta)) and tau in [0, 1]. Returns the minimum slack.
    """
    x_star = problem.known_minimizer
    if x_star is None:
        raise MissingGroundTruth('Majorant condition needs a known minimizer')
    radius = min(model.nu(), consts.delta)
    if not math.isfinite(radius):
        raise RadiusUndefined('Sampling radius min(nu, delta) is not finite')
    rng = numpy.random.default_rng(seed)
    points = sample_ball(rng, x_star, radius, samples)
    taus = rng.uniform(0.0, 1.0, samples)
    min_slack = math.inf
    for x, tau in zip(points, taus):
        sigma = float(numpy.linalg.norm(x - x_star))
        lhs = consts.beta * spectral_norm(problem.jacobian(x) - problem.jacobian(x_star + tau * (x - x_star)))
        rhs = model.fprime(sigma) - model.fprime(tau * sigma)
        min_slack = min(min_slack, rhs - lhs)
    return SampledBoundReport(min_slack=float(min_slack), samples=samples, seed=seed)


def check_smale_second_derivative(problem, gamma, consts, samples=100, seed=DEFAULT_SEED):
    """Samples beta ||F''(x)|| <= 2 gamma / (1 - gamma sigma)^3 on B(x*, 1/gamma)."""
    x_star = problem.known_minimizer
    if x_star is None:
        raise MissingGroundTruth('Second derivative bound needs a known minimizer')
    SmaleMajorant(gamma)
    rng = numpy.random.default_rng(seed)
    min_slack = math.inf
    for x in sample_ball(rng, x_star, 1.0 / gamma, samples):
        sigma = float(numpy.linalg.norm(x - x_star))
        norm, _ = symmetric_tensor_norm(problem.map.derivative_tensor(x, 2), seed=seed)
        min_slack = min(min_slack, 2.0 * gamma / (1.0 - gamma * sigma) ** 3 - consts.beta * norm)
    return SampledBoundReport(min_slack=float(min_slack), samples=samples, seed=seed)


@dataclass(frozen=True)
class VerificationReport:
    x0_sigma: float
    radius: float
    contraction_factor: float
    quad_a: float
    quad_b: float
    lin: float
    slack_tolerance: float
    recursion_slacks: list = field(default_factory=list)
    per_step_slacks: list = field(default_factory=list)
    linearization_slacks: list = field(default_factory=list)
    local_bound_slacks: list = field(default_factory=list)
    quadratic_ratio_estimates: list = field(default_factory=list)
    monotone_decrease_ok: bool = True
    stayed_in_ball_ok: bool = True
    local_bounds_ok: bool = True
    final_sigma: float = None

    @property
    def min_recursion_slack(self):
        return min(self.recursion_slacks) if self.recursion_slacks else math.inf

    @property
    def recursion_ok(self):
        return all(s >= -self.slack_tolerance for s in self.recursion_slacks)

    @property
    def linearization_ok(self):
        return all(s >= -self.slack_tolerance for s in self.linearization_slacks)

    @property
    def passed(self):
        return self.recursion_ok and self.linearization_ok and self.local_bounds_ok and \
            self.monotone_decrease_ok and self.stayed_in_ball_ok

    def to_dict(self):
        return {
            'passed': self.passed,
            'x0_sigma': self.x0_sigma,
            'radius': self.radius,
            'contraction_factor': self.contraction_factor,
            'coefficients': {'quad_a': self.quad_a, 'quad_b': self.quad_b, 'lin': self.lin},
            'slack_tolerance': self.slack_tolerance,
            'recursion_slacks': list(self.recursion_slacks),
            'per_step_slacks': list(self.per_step_slacks),
            'linearization_slacks': list(self.linearization_slacks),
            'local_bound_slacks': list(self.local_bound_slacks),
            'quadratic_ratio_estimates': list(self.quadratic_ratio_estimates),
            'monotone_decrease_ok': self.monotone_decrease_ok,
            'stayed_in_ball_ok': self.stayed_in_ball_ok,
            'local_bounds_ok': self.local_bounds_ok,
            'final_sigma': self.final_sigma,
        }


def verify_run(problem, report, model, consts, x_star=None, radius=None):
    """Audits the trace of 'report' against the bounds of the majorant 'model'.

    The recursion coefficients are frozen at t = sigma(x0). Runs started outside the
    certified ball are still audited; violations show up as negative slacks. 'radius'
    defaults to the r of the report's certificate (or of a fresh one).
    """
    x_star = problem.known_minimizer if x_star is None else as_vector(x_star, problem.dim)
    if x_star is None:
        raise MissingGroundTruth('Verification of "{0}" needs a known minimizer'.format(problem.name))
    if radius is None:
        cert = report.certificate if report.certificate is not None else certificate(model, consts)
        radius = cert.r

    sigmas = [float(numpy.linalg.norm(record.point - x_star)) for record in report.trace]
    sigma0 = sigmas[0]
    tolerance = RECURSION_SLACK_TOLERANCE * max(1.0, sigma0)
    floor = SIGMA_FLOOR * max(1.0, sigma0)
    nu_value = model.nu()

    if 0.0 < sigma0 < nu_value:
        coefficients = error_recursion_coefficients(model, consts, sigma0)
        contraction = contraction_ratio(model, consts, sigma0)
    else:
        coefficients = None
        contraction = 0.0 if sigma0 == 0.0 else math.inf

    recursion_slacks = []
    per_step_slacks = []
    ratios = []
    monotone = True
    for k in range(len(sigmas) - 1):
        current, following = sigmas[k], sigmas[k + 1]
        if coefficients is not None:
            recursion_slacks.append(coefficients.bound(current) - following)
        else:
            recursion_slacks.append(-following if sigma0 == 0.0 else -math.inf)
        if floor < current < nu_value:
            per_step_slacks.append(error_recursion_coefficients(model, consts, current).bound(current) - following)
        else:
            per_step_slacks.append(None)
        if current > floor:
            monotone = monotone and following < current
            if following > floor:
                ratios.append(following / current ** 2)

    inside = sigma0 < radius and all(s < radius for s in sigmas[1:])

    linearization_slacks = []
    local_bound_slacks = []
    local_ok = True
    for record, sigma in zip(report.trace, sigmas):
        if sigma < model.domain_bound:
            bound = linearization_error_bound(model, sigma)
            linearization_slacks.append(bound - consts.beta * linearization_error(problem, record.point, x_star))
        else:
            linearization_slacks.append(-math.inf)
        if sigma < min(nu_value, consts.delta):
            local = check_local_bounds(problem, model, consts, record.point, x_star)
            local_bound_slacks.append(local.min_slack)
            local_ok = local_ok and local.ok
        else:
            local_bound_slacks.append(None)

    verification = VerificationReport(
        x0_sigma=sigma0, radius=radius, contraction_factor=contraction,
        quad_a=coefficients.quad_a if coefficients else None,
        quad_b=coefficients.quad_b if coefficients else None,
        lin=coefficients.lin if coefficients else None,
        slack_tolerance=tolerance,
        recursion_slacks=recursion_slacks, per_step_slacks=per_step_slacks,
        linearization_slacks=linearization_slacks, local_bound_slacks=local_bound_slacks,
        quadratic_ratio_estimates=ratios, monotone_decrease_ok=monotone, stayed_in_ball_ok=inside,
        local_bounds_ok=local_ok,
        final_sigma=sigmas[-1])
    if not verification.passed:
        logging.warning('Verification of "{0}" failed (min recursion slack {1:.3e}, monotone={2}, inside={3})'.format(
            problem.name, verification.min_recursion_slack, monotone, inside))
    return verification


def start_points(x_star, radius, seed=DEFAULT_SEED, fractions=None, directions=START_DIRECTIONS):
    """Deterministic starting points x* + fraction * radius * u for 'directions' seeded
    unit vectors u and every fraction.
    """
    fractions = START_RADIUS_FRACTIONS if fractions is None else fractions
    rng = numpy.random.default_rng(seed)
    units = rng.standard_normal((directions, x_star.shape[0]))
    units /= numpy.linalg.norm(units, axis=1)[:, None]
    return [x_star + fraction * radius * u for fraction in fractions for u in units]


@dataclass(frozen=True)
class SuiteRun:
    x0: numpy.ndarray
    report: object

    @property
    def passed(self):
        if self.report is None:
            return False
        verification = self.report.verification
        return self.report.converged and verification is not None and verification.passed and \
            verification.final_sigma <= FINAL_DISTANCE_TOLERANCE


@dataclass(frozen=True)
class VerificationSuite:
    certificate: object
    radius_scale: float
    seed: int
    runs: list = field(default_factory=list)

    @property
    def passed(self):
        return all(run.passed for run in self.runs)

    @property
    def min_recursion_slack(self):
        slacks = [run.report.verification.min_recursion_slack for run in self.runs
                  if run.report is not None and run.report.verification is not None]
        return min(slacks) if slacks else math.inf


class ProxGNVerifier(AbstractProxGNSection):
    """Class to audit runs of the problem held by the ProxGN object. This class is not
    expected to be used directly, but instead through the 'verifier' attribute of the
    ProxGN object.
    """

    def verify(self, report, model_kind=None):
        extracted = self.proxgn.extract_constants(model_kind)
        return verify_run(self.problem, report, extracted.model, extracted.constants)

    def majorant_condition(self, samples=100, seed=DEFAULT_SEED, model_kind=None):
        extracted = self.proxgn.extract_constants(model_kind)
        return check_majorant_condition(self.problem, extracted.model, extracted.constants, samples, seed)

    def run_suite(self, radius_scale=1.0, seed=DEFAULT_SEED, model_kind=None):
        """Certifies the problem, then solves and audits from every starting point of
        'start_points' at radius 'radius_scale' * r.
        """
        assert radius_scale > 0, 'radius_scale must be positive'
        extracted = self.proxgn.extract_constants(model_kind)
        cert = self.proxgn.certifier.certify(model_kind)
        if not math.isfinite(cert.r):
            raise RadiusUndefined('Certified radius is not finite')
        runs = []
        for x0 in start_points(self.problem.known_minimizer, radius_scale * cert.r, seed=seed):
            try:
                report = self.proxgn.solver.solve(x0)
            except DomainError as e:
                logging.warning('Start point {0} is outside the domain: {1}'.format(x0.tolist(), e))
                runs.append(SuiteRun(x0=x0, report=None))
                continue
            verification = verify_run(self.problem, report, extracted.model, extracted.constants,
                                      radius=cert.r)
            report = with_recursion_slacks(report, verification.recursion_slacks)
            runs.append(SuiteRun(x0=x0, report=replace(report, certificate=cert, verification=verification)))
        suite = VerificationSuite(certificate=cert, radius_scale=radius_scale, seed=seed, runs=runs)
        logging.info('Verification suite for "{0}": {1}/{2} runs passed'.format(
            self.problem.name, sum(run.passed for run in runs), len(runs)))
        return suite
