"""Proximal Gauss-Newton iteration

    x_{k+1} = prox_J^{H(x_k)}(x_k - F'(x_k)^+ F(x_k)),   H(x) = F'(x)^T F'(x)

and the outer loop that runs it with reproducible stopping rules.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy

from .classes import AbstractProxGNSection
from .constants import DEFAULT_MAX_ITERATIONS, DEFAULT_STEP_TOLERANCE, DEFAULT_STATIONARITY_TOLERANCE, \
    DEFAULT_PROX_TOLERANCE, DEFAULT_INJECTIVITY_THRESHOLD, DEFAULT_INNER_MAX_ITERATIONS, STATUS_CONVERGED, \
    STATUS_MAX_ITERATIONS, STATUS_STALLED, STATUS_SINGULAR_JACOBIAN, STATUS_LEFT_DOMAIN, STATUS_PROX_FAILURE, \
    ACTION_ITERATION_COMPLETED, ACTION_RUN_FINISHED
from .exceptions import SingularJacobian, LeftDomain, ProxFailure, InnerSolverStalled, HNotPositiveDefinite, \
    DomainError
from .linalg import as_vector, injectivity, pseudoinverse, metric_operator, svd_factors
from .prox import prox


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    step_tolerance: float = DEFAULT_STEP_TOLERANCE
    stationarity_tolerance: float = DEFAULT_STATIONARITY_TOLERANCE
    prox_tolerance: float = DEFAULT_PROX_TOLERANCE
    jacobian_injectivity_threshold: float = DEFAULT_INJECTIVITY_THRESHOLD
    inner_max_iterations: int = DEFAULT_INNER_MAX_ITERATIONS

    def __post_init__(self):
        assert self.max_iterations >= 1, 'max_iterations must be at least 1'
        assert self.step_tolerance > 0, 'step_tolerance must be positive'
        assert self.stationarity_tolerance > 0, 'stationarity_tolerance must be positive'
        assert self.prox_tolerance > 0, 'prox_tolerance must be positive'
        assert self.jacobian_injectivity_threshold > 0, 'jacobian_injectivity_threshold must be positive'
        assert self.inner_max_iterations >= 1, 'inner_max_iterations must be at least 1'


@dataclass(frozen=True)
class IterationRecord:
    """State at the k-th iterate and the step taken from it (step_norm = 0 for the last
    point of a run).
    """
    index: int
    point: numpy.ndarray
    sigma: float
    step_norm: float
    residual_norm: float
    smallest_singular: float
    prox_inner_iterations: int
    stationarity_residual: float
    recursion_slack: float = None


@dataclass(frozen=True)
class RunReport:
    status: str
    trace: list = field(default_factory=list)
    certificate: object = None
    verification: object = None
    message: str = ''

    @property
    def iterations(self):
        """Number of steps taken (the trace also holds the final point)."""
        return max(len(self.trace) - 1, 0)

    @property
    def converged(self):
        return self.status == STATUS_CONVERGED

    @property
    def final_point(self):
        return self.trace[-1].point if self.trace else None

    @property
    def final_stationarity(self):
        return self.trace[-1].stationarity_residual if self.trace else None


@dataclass(frozen=True)
class IterationStep:
    next: numpy.ndarray
    record: IterationRecord


def get_individual_status_action_name(action_name, status):
    return '{0} - {1}'.format(action_name, status)


def _sigma(problem, x):
    if problem.known_minimizer is None:
        return None
    return float(numpy.linalg.norm(x - problem.known_minimizer))


def gn_step(F_val, Jac, x, cfg=None):
    """Gauss-Newton point x - F'(x)^+ F(x). Raises SingularJacobian if the Jacobian is not
    injective.
    """
    cfg = cfg or SolverConfig()
    x = as_vector(x)
    report = injectivity(Jac, cfg.jacobian_injectivity_threshold)
    if not report.injective:
        raise SingularJacobian('Jacobian is not injective (sigma_min={0:.3e} <= {1:.3e})'.format(
            report.smallest_singular, report.threshold))
    return x - pseudoinverse(Jac) @ as_vector(F_val)


def pgn_iterate(problem, x, cfg=None, index=0):
    """One proximal Gauss-Newton step from 'x'. Returns the next point and the record of 'x'."""
    cfg = cfg or SolverConfig()
    x = as_vector(x, problem.dim)
    F_val = problem.residual(x)
    Jac = problem.jacobian(x)
    z = gn_step(F_val, Jac, x, cfg)
    try:
        result = prox(problem.penalty, metric_operator(Jac), z, cfg.prox_tolerance,
                      max_inner_iterations=cfg.inner_max_iterations)
    except HNotPositiveDefinite as e:
        raise SingularJacobian('Metric F\'(x)^T F\'(x) is numerically singular: {0}'.format(e))
    except InnerSolverStalled as e:
        raise ProxFailure(str(e))
    next_point = result.point
    if not numpy.all(numpy.isfinite(next_point)):
        raise ProxFailure('Proximal point has non-finite entries')
    if not problem.domain.contains(next_point):
        raise LeftDomain('Iterate {0} left the domain'.format(index + 1))
    record = IterationRecord(
        index=index, point=x.copy(), sigma=_sigma(problem, x),
        step_norm=float(numpy.linalg.norm(next_point - x)),
        residual_norm=float(numpy.linalg.norm(F_val)),
        smallest_singular=svd_factors(Jac).smallest(problem.dim),
        prox_inner_iterations=result.inner_iterations,
        stationarity_residual=problem.stationarity(x))
    return IterationStep(next=next_point, record=record)


def _final_record(problem, x, index):
    return IterationRecord(
        index=index, point=x.copy(), sigma=_sigma(problem, x), step_norm=0.0,
        residual_norm=float(numpy.linalg.norm(problem.residual(x))),
        smallest_singular=svd_factors(problem.jacobian(x)).smallest(problem.dim),
        prox_inner_iterations=0, stationarity_residual=problem.stationarity(x))


def solve(problem, x0, cfg=None, callback=None):
    """Runs proximal Gauss-Newton from 'x0' until the stationarity residual is below
    'stationarity_tolerance' (Converged), a step is below 'step_tolerance' without
    stationarity (Stalled), 'max_iterations' steps were taken (MaxIterations), or an
    iteration fails (SingularJacobian, LeftDomain, ProxFailure).

    'callback', when given, is called with every IterationRecord added to the trace.
    """
    cfg = cfg or SolverConfig()
    x = as_vector(x0, problem.dim)
    if not problem.domain.contains(x):
        raise DomainError('Starting point lies outside the domain of "{0}"'.format(problem.name))

    trace = []

    def add(record):
        trace.append(record)
        logging.debug('Iteration {0}: sigma={1} step={2:.3e} |F|={3:.3e} stationarity={4:.3e}'.format(
            record.index, record.sigma, record.step_norm, record.residual_norm, record.stationarity_residual))
        if callback is not None:
            callback(record)

    logging.info('Solving "{0}" from x0={1}'.format(problem.name, x.tolist()))
    status = None
    message = ''
    stalled = False
    for k in range(cfg.max_iterations + 1):
        stationarity = problem.stationarity(x)
        if stationarity <= cfg.stationarity_tolerance:
            status = STATUS_CONVERGED
        elif stalled:
            status = STATUS_STALLED
        elif k == cfg.max_iterations:
            status = STATUS_MAX_ITERATIONS
        if status is not None:
            add(_final_record(problem, x, k))
            break
        try:
            step = pgn_iterate(problem, x, cfg, index=k)
        except (SingularJacobian, LeftDomain, ProxFailure) as e:
            status = {SingularJacobian: STATUS_SINGULAR_JACOBIAN, LeftDomain: STATUS_LEFT_DOMAIN,
                      ProxFailure: STATUS_PROX_FAILURE}[type(e)]
            message = str(e)
            logging.warning('Run stopped at iteration {0} with {1}: {2}'.format(k, status, message))
            add(_final_record(problem, x, k))
            break
        add(step.record)
        stalled = step.record.step_norm <= cfg.step_tolerance
        x = step.next

    report = RunReport(status=status, trace=trace, message=message)
    logging.info('Run finished with status {0} after {1} iterations'.format(status, report.iterations))
    return report


def with_recursion_slacks(report, slacks):
    """Copy of 'report' whose records carry the per-step recursion slacks."""
    trace = [replace(record, recursion_slack=slacks[i]) if i < len(slacks) else record
             for i, record in enumerate(report.trace)]
    return replace(report, trace=trace)


def linearization_error(problem, x, y):
    """||F(y) - F(x) - F'(x)(y - x)||"""
    x = as_vector(x, problem.dim)
    y = as_vector(y, problem.dim)
    return float(numpy.linalg.norm(problem.residual(y) - problem.residual(x) - problem.jacobian(x) @ (y - x)))


class ProxGNSolver(AbstractProxGNSection):
    """Class to run the proximal Gauss-Newton method on the problem held by the ProxGN
    object. This class is not expected to be used directly, but instead through the
    'solver' attribute of the ProxGN object.

    Every record added to a trace triggers 'on_iteration_completed', and the end of a run
    triggers 'on_run_finished'.
    """

    last_report = None

    def iterate(self, x):
        return pgn_iterate(self.problem, x, self.proxgn.config)

    def solve(self, x0):
        def notify(record):
            self.proxgn.trigger_action(ACTION_ITERATION_COMPLETED, record)

        report = solve(self.problem, x0, self.proxgn.config, callback=notify)
        self.last_report = report
        self.proxgn.trigger_action(ACTION_RUN_FINISHED, report)
        self.proxgn.trigger_action(get_individual_status_action_name(ACTION_RUN_FINISHED, report.status), report)
        return report
