import math
import os

# Logging
PROXGN_LOG_ENV_VAR = 'PROXGN_LOG'
DEFAULT_LOG_LEVEL = 'ERROR'
LOG_LEVEL_NAMES = ['DEBUG', 'INFO', 'WARNING', 'ERROR']


def log_level_from_env(environ=None):
    """Returns the logging level name selected by the PROXGN_LOG environment variable.
    Unknown or missing values fall back to DEFAULT_LOG_LEVEL.
    """
    environ = os.environ if environ is None else environ
    level = environ.get(PROXGN_LOG_ENV_VAR, DEFAULT_LOG_LEVEL).strip().upper()
    if level not in LOG_LEVEL_NAMES:
        return DEFAULT_LOG_LEVEL
    return level


SQRT2 = math.sqrt(2.0)
ONE_PLUS_SQRT2 = 1.0 + SQRT2

# Linear algebra
PENROSE_TOLERANCE = 1e-10
SVD_RECONSTRUCTION_TOLERANCE = 1e-12
PERTURBATION_SLACK_TOLERANCE = 1e-10

# Solver defaults
DEFAULT_MAX_ITERATIONS = 50
DEFAULT_STEP_TOLERANCE = 1e-12
DEFAULT_STATIONARITY_TOLERANCE = 1e-10
DEFAULT_PROX_TOLERANCE = 1e-12
DEFAULT_INJECTIVITY_THRESHOLD = 1e-12

# Inner forward-backward solver of the prox subproblem
DEFAULT_INNER_MAX_ITERATIONS = 10000

# Bisections (nu fallback, generic rho, Smale quartic)
BISECTION_MAX_ITERATIONS = 200
BISECTION_ABSOLUTE_TOLERANCE = 1e-14  # multiplied by nu
BISECTION_RELATIVE_TOLERANCE = 1e-12
RHO_OPEN_ENDPOINT_FACTOR = 1.0 - 1e-12  # rho := nu * factor when Q never reaches 1
CROSS_CHECK_RELATIVE_TOLERANCE = 1e-8

# Verification
SIGMA_FLOOR = 1e-13  # sigma values below this are at the floating-point floor
RECURSION_SLACK_TOLERANCE = 1e-8  # multiplied by max(1, sigma(x0))
START_RADIUS_FRACTIONS = [0.25, 0.5, 0.9]
START_DIRECTIONS = 8
FINAL_DISTANCE_TOLERANCE = 1e-10
LOCAL_BOUND_RELATIVE_TOLERANCE = 1e-9
MAJORANT_SLACK_TOLERANCE = 1e-10
AUTO_START_RADIUS_FRACTION = 0.5
DEFAULT_SEED = 0

# Constant extraction
SPHERE_SAMPLES = 10000  # directions for tensor norms in dims <= 3
SPHERE_SAMPLING_MAX_DIM = 3
POWER_ITERATION_STEPS = 200
POWER_ITERATION_RESTARTS = 20
LIPSCHITZ_SAMPLE_PAIRS = 2000
FINITE_DIFFERENCE_STEP = 1e-6

# Model kinds
MODEL_LIPSCHITZ = 'lipschitz'
MODEL_SMALE = 'smale'
MODEL_KINDS = [MODEL_LIPSCHITZ, MODEL_SMALE]

# Radius methods
METHOD_GENERIC_BISECTION = 'GenericBisection'
METHOD_LIPSCHITZ_CLOSED_FORM = 'LipschitzClosedForm'
METHOD_SMALE_QUARTIC = 'SmaleQuartic'

# Penalty kinds
PENALTY_ZERO = 'Zero'
PENALTY_WEIGHTED_L1 = 'WeightedL1'
PENALTY_BOX_INDICATOR = 'BoxIndicator'

# Domain kinds
DOMAIN_WHOLE_SPACE = 'WholeSpace'
DOMAIN_BALL = 'Ball'

# Run statuses
STATUS_CONVERGED = 'Converged'
STATUS_MAX_ITERATIONS = 'MaxIterations'
STATUS_STALLED = 'Stalled'
STATUS_SINGULAR_JACOBIAN = 'SingularJacobian'
STATUS_LEFT_DOMAIN = 'LeftDomain'
STATUS_PROX_FAILURE = 'ProxFailure'
RUN_STATUSES = [STATUS_CONVERGED, STATUS_MAX_ITERATIONS, STATUS_STALLED, STATUS_SINGULAR_JACOBIAN,
                STATUS_LEFT_DOMAIN, STATUS_PROX_FAILURE]

# ProxGN actions
ACTION_ITERATION_COMPLETED = 'on_iteration_completed'
ACTION_RUN_FINISHED = 'on_run_finished'
ACTION_CERTIFICATE_READY = 'on_certificate_ready'

# Reports
SCHEMA_VERSION = 1
TRACE_CSV_COLUMNS = ['index', 'sigma', 'step_norm', 'residual_norm', 'smallest_singular', 'stationarity_residual']
RUN_REPORT_FILE_NAME = 'run_report.json'
TRACE_FILE_NAME = 'trace.csv'
CERTIFICATE_FILE_NAME = 'certificate.json'
VERIFICATION_FILE_NAME = 'verification.json'

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_MISSING_GROUND_TRUTH = 2
EXIT_VERIFICATION_FAILED = 2
EXIT_H3_VIOLATED = 3
