import logging
import sys
from collections import defaultdict

from .constants import log_level_from_env, DEFAULT_SEED, ACTION_ITERATION_COMPLETED, ACTION_RUN_FINISHED, \
    ACTION_CERTIFICATE_READY
from .majorant import ProxGNCertifier
from .problems import Problem, catalog_problem, load_problem_file, local_constants
from .solver import ProxGNSolver, SolverConfig, get_individual_status_action_name
from .verification import ProxGNVerifier

logging.basicConfig(stream=sys.stdout, level=log_level_from_env())

action_handler_registry = defaultdict(list)


class ProxGN(object):
    """Class to solve and certify a penalized nonlinear least squares problem

        min_x 1/2 ||F(x)||^2 + J(x)

    with the proximal Gauss-Newton method. 'problem' can be a Problem object, the name of
    a catalog problem or the path of a JSON problem file (see docs/schemas.md).

    Functionality is split in sections available as attributes:
        * certifier: local constants and convergence radius certificates
        * solver: proximal Gauss-Newton runs
        * verifier: audit of runs against the certified bounds
    """
    problem = None
    config = None
    model_kind = None
    seed = DEFAULT_SEED
    certifier = None
    solver = None
    verifier = None

    def __init__(self, problem, config=None, model_kind=None, seed=DEFAULT_SEED):
        if isinstance(problem, Problem):
            self.problem = problem
        elif str(problem).endswith('.json'):
            self.problem = load_problem_file(problem)
        else:
            self.problem = catalog_problem(problem)
        self.config = config or SolverConfig()
        self.model_kind = model_kind or self.problem.declared_model
        self.seed = seed
        self._extracted_constants = {}

        self.certifier = ProxGNCertifier(self)
        self.solver = ProxGNSolver(self)
        self.verifier = ProxGNVerifier(self)

    def extract_constants(self, model_kind=None):
        """Local constants at the known minimizer and the majorant model of 'model_kind'
        (defaults to the configured model kind). Results are cached per model kind.
        """
        model_kind = model_kind or self.model_kind
        if model_kind not in self._extracted_constants:
            self._extracted_constants[model_kind] = local_constants(self.problem, model_kind, seed=self.seed)
        return self._extracted_constants[model_kind]

    def trigger_action(self, *args, **kwargs):
        action_name = args[0]
        new_args = [self]
        if len(args) > 1:
            new_args += list(args[1:])
        for func in action_handler_registry.get(action_name, []):
            func(*new_args, **kwargs)


def action_handler(action_name, status=None):
    """
    Generic action handler decorator used by other specific decorators.
    This decorator should not be used directly. Specific decorators for individual actions should be used instead.
    """
    def wrapper(func):
        action = action_name
        if action_name == ACTION_RUN_FINISHED and status is not None:
            # Handlers for a specific final status are registered under their own action name
            action = get_individual_status_action_name(action_name, status)
        logging.debug('Registered handler {0} for action {1}'.format(func, action))
        action_handler_registry[action].append(func)
        return func
    return wrapper


def on_iteration_completed():
    """Shortcut for registering handlers for ACTION_ITERATION_COMPLETED events.
    Functions decorated with this decorator will be called every time a record is added to
    the trace of a run, with the following positional arguments:
        * ProxGN object instance
        * IterationRecord

    Examples:

    @proxgn_python.on_iteration_completed()
    def function(proxgn, record):
        print('Iteration', record.index, 'sigma', record.sigma)
    """
    return action_handler(ACTION_ITERATION_COMPLETED)


def on_run_finished(status=None):
    """Shortcut for registering handlers for ACTION_RUN_FINISHED events.
    Optional "status" argument is to link the handler to runs ending with a specific status.
    Functions decorated with this decorator will be called with the following positional
    arguments:
        * ProxGN object instance
        * RunReport

    Examples:

    @proxgn_python.on_run_finished()
    def function(proxgn, report):
        print('Run finished with status', report.status)

    @proxgn_python.on_run_finished(proxgn_python.constants.STATUS_SINGULAR_JACOBIAN)
    def function(proxgn, report):
        print('Jacobian lost rank at', report.final_point)
    """
    return action_handler(ACTION_RUN_FINISHED, status=status)


def on_certificate_ready():
    """Shortcut for registering handlers for ACTION_CERTIFICATE_READY events.
    Functions decorated with this decorator will be called with the following positional
    arguments:
        * ProxGN object instance
        * RadiusCertificate
    """
    return action_handler(ACTION_CERTIFICATE_READY)
