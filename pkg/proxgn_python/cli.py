"""Command line front end:

    proxgn solve    (--problem NAME | --problem-file PATH) [--x0 CSV|auto] [--model lipschitz|smale] ...
    proxgn certify  (--problem NAME | --problem-file PATH) [--model lipschitz|smale]
    proxgn verify   (--problem NAME | --problem-file PATH) [--radius-scale S] [--seed N]
    proxgn catalog

Exit codes: 0 success, 1 usage error, 2 non-convergence / missing ground truth / failed
verification, 3 h-condition violated or degenerate model.
"""
import argparse
import logging
import math
import os
import sys
from dataclasses import replace

import numpy

import proxgn_python
from .constants import MODEL_KINDS, DEFAULT_SEED, DEFAULT_MAX_ITERATIONS, DEFAULT_STEP_TOLERANCE, \
    DEFAULT_STATIONARITY_TOLERANCE, DEFAULT_PROX_TOLERANCE, AUTO_START_RADIUS_FRACTION, EXIT_OK, EXIT_USAGE_ERROR, \
    EXIT_NOT_CONVERGED, EXIT_MISSING_GROUND_TRUTH, EXIT_VERIFICATION_FAILED, EXIT_H3_VIOLATED, RUN_REPORT_FILE_NAME, \
    TRACE_FILE_NAME, CERTIFICATE_FILE_NAME, VERIFICATION_FILE_NAME
from .exceptions import ProxGNError, UsageError, ProblemFileError, MissingGroundTruth, NotInjectiveAtMinimizer, \
    H3Violated, DegenerateModel, DimensionMismatch, DomainError, RadiusUndefined
from .problems import catalog
from .reports import run_report_to_dict, certificate_to_dict, suite_to_dict, write_json, write_trace_csv
from .solver import SolverConfig, with_recursion_slacks
from .verification import start_points, verify_run


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError(message)


@proxgn_python.on_iteration_completed()
def log_iteration(proxgn, record):
    logging.debug('[{0}] k={1} sigma={2} step={3:.3e}'.format(
        proxgn.problem.name, record.index, record.sigma, record.step_norm))


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError('expected a number, got "{0}"'.format(text))
    if not value > 0:
        raise argparse.ArgumentTypeError('expected a positive number, got "{0}"'.format(text))
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError('expected an integer, got "{0}"'.format(text))
    if value < 1:
        raise argparse.ArgumentTypeError('expected a positive integer, got "{0}"'.format(text))
    return value


def _add_problem_arguments(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--problem', help='name of a catalog problem')
    source.add_argument('--problem-file', help='path of a JSON problem file')
    parser.add_argument('--model', choices=MODEL_KINDS, default=None,
                        help='majorant model (defaults to the model declared by the problem)')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED, help='seed for start directions and sampling')
    parser.add_argument('--out', default='.', help='output directory')


def _add_solver_arguments(parser):
    parser.add_argument('--tol-step', type=_positive_float, default=DEFAULT_STEP_TOLERANCE)
    parser.add_argument('--tol-stationarity', type=_positive_float, default=DEFAULT_STATIONARITY_TOLERANCE)
    parser.add_argument('--tol-prox', type=_positive_float, default=DEFAULT_PROX_TOLERANCE)
    parser.add_argument('--max-iter', type=_positive_int, default=DEFAULT_MAX_ITERATIONS)


def build_parser():
    parser = _ArgumentParser(prog='proxgn', description='Proximal Gauss-Newton solver with convergence certificates')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    solve_parser = commands.add_parser('solve', help='run proximal Gauss-Newton')
    _add_problem_arguments(solve_parser)
    _add_solver_arguments(solve_parser)
    solve_parser.add_argument('--x0', default='auto',
                              help='comma separated starting point, or "auto" for x* + r/2 u with a seeded direction u')

    certify_parser = commands.add_parser('certify', help='compute the certified convergence radius')
    _add_problem_arguments(certify_parser)

    verify_parser = commands.add_parser('verify', help='solve from a grid of starting points and audit every run')
    _add_problem_arguments(verify_parser)
    _add_solver_arguments(verify_parser)
    verify_parser.add_argument('--radius-scale', type=_positive_float, default=1.0,
                               help='place starting points at radius-scale * r')

    commands.add_parser('catalog', help='list catalog problems')
    return parser


def _config(args):
    return SolverConfig(max_iterations=args.max_iter, step_tolerance=args.tol_step,
                        stationarity_tolerance=args.tol_stationarity, prox_tolerance=args.tol_prox)


def _proxgn(args, config=None):
    problem = args.problem
    if args.problem_file is not None:
        if not os.path.isfile(args.problem_file):
            raise ProblemFileError('Problem file {0} does not exist'.format(args.problem_file), field='--problem-file')
        problem = proxgn_python.load_problem_file(args.problem_file)
    return proxgn_python.ProxGN(problem, config=config, model_kind=args.model, seed=args.seed)


def _parse_x0(text, dim):
    try:
        x0 = numpy.array([float(v) for v in text.split(',')])
    except ValueError:
        raise UsageError('--x0 must be "auto" or comma separated numbers, got "{0}"'.format(text))
    if x0.shape[0] != dim:
        raise UsageError('--x0 has {0} entries, problem dimension is {1}'.format(x0.shape[0], dim))
    return x0


def cmd_solve(args):
    proxgn = _proxgn(args, _config(args))
    problem = proxgn.problem
    cert = None
    if problem.known_minimizer is not None:
        try:
            cert = proxgn.certifier.certify()
        except (H3Violated, DegenerateModel, RadiusUndefined, NotInjectiveAtMinimizer) as e:
            logging.warning('No certificate for "{0}": {1}'.format(problem.name, e))

    if args.x0 == 'auto':
        if cert is None:
            raise MissingGroundTruth('--x0 auto needs a certified radius (known minimizer and valid model)')
        if not math.isfinite(cert.r):
            raise UsageError('--x0 auto needs a finite certified radius, the radius of "{0}" is unbounded'.format(
                problem.name))
        x0 = start_points(problem.known_minimizer, AUTO_START_RADIUS_FRACTION * cert.r, seed=args.seed,
                          fractions=[1.0], directions=1)[0]
        print('x0 auto: x* + {0} r u, seed={1}, x0={2}'.format(AUTO_START_RADIUS_FRACTION, args.seed, x0.tolist()))
    else:
        x0 = _parse_x0(args.x0, problem.dim)

    report = proxgn.solver.solve(x0)
    if cert is not None:
        extracted = proxgn.extract_constants()
        verification = verify_run(problem, report, extracted.model, extracted.constants, radius=cert.r)
        report = with_recursion_slacks(report, verification.recursion_slacks)
        report = replace(report, certificate=cert, verification=verification)

    write_json(os.path.join(args.out, RUN_REPORT_FILE_NAME),
               run_report_to_dict(report, problem_name=problem.name, x0=x0, seed=args.seed, model=proxgn.model_kind))
    write_trace_csv(os.path.join(args.out, TRACE_FILE_NAME), report.trace)
    print('{0}: {1} after {2} iterations, final point {3}'.format(
        problem.name, report.status, report.iterations, report.final_point.tolist()))
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_certify(args):
    proxgn = _proxgn(args)
    cert = proxgn.certifier.certify()
    write_json(os.path.join(args.out, CERTIFICATE_FILE_NAME), certificate_to_dict(cert, problem_name=proxgn.problem.name))
    print('{0} ({1}): h={2:.6g} nu={3:.6g} rho={4:.12g} r={5:.12g} method={6}'.format(
        proxgn.problem.name, cert.model, cert.h_value, cert.nu, cert.rho, cert.r, cert.method))
    return EXIT_OK


def cmd_verify(args):
    proxgn = _proxgn(args, _config(args))
    suite = proxgn.verifier.run_suite(radius_scale=args.radius_scale, seed=args.seed)
    write_json(os.path.join(args.out, VERIFICATION_FILE_NAME), suite_to_dict(suite, problem_name=proxgn.problem.name))
    print('{0}: {1}/{2} runs passed, min recursion slack {3:.3e}'.format(
        proxgn.problem.name, sum(run.passed for run in suite.runs), len(suite.runs), suite.min_recursion_slack))
    return EXIT_OK if suite.passed else EXIT_VERIFICATION_FAILED


def cmd_catalog(args):
    for problem in catalog():
        print('{0:<16} n={1} m={2} penalty={3:<12} model={4:<9} x*={5}  {6}'.format(
            problem.name, problem.dim, problem.map.output_dim, problem.penalty.kind, problem.declared_model,
            problem.known_minimizer.tolist(), problem.description))
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'certify': cmd_certify,
    'verify': cmd_verify,
    'catalog': cmd_catalog,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ProblemFileError, DimensionMismatch, DomainError, AssertionError) as e:
        logging.error('Usage error: {0}'.format(e))
        return EXIT_USAGE_ERROR
    except (MissingGroundTruth, NotInjectiveAtMinimizer, RadiusUndefined) as e:
        logging.error('{0}'.format(e))
        return EXIT_MISSING_GROUND_TRUTH
    except H3Violated as e:
        logging.error('h-condition violated: h={0:.6g} >= 1'.format(e.h))
        return EXIT_H3_VIOLATED
    except DegenerateModel as e:
        logging.error('Degenerate majorant model: {0}'.format(e))
        return EXIT_H3_VIOLATED
    except ProxGNError as e:
        logging.error('{0}: {1}'.format(e.__class__.__name__, e))
        return EXIT_NOT_CONVERGED


if __name__ == '__main__':
    sys.exit(main())
