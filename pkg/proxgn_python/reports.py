"""Machine-readable outputs: JSON documents (run report, certificate, verification) and
the CSV iteration trace. Every document carries 'schema_version'; non-finite numbers are
written as the strings "inf", "-inf" and "nan". Files are written atomically.
"""
import csv
import io
import json
import logging
import math
import os
import tempfile

import numpy

from .constants import SCHEMA_VERSION, TRACE_CSV_COLUMNS


def json_safe(value):
    """Converts 'value' to JSON-compatible builtins."""
    if hasattr(value, 'to_dict'):
        return json_safe(value.to_dict())
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, numpy.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (bool, numpy.bool_)):
        return bool(value)
    if isinstance(value, (int, numpy.integer)):
        return int(value)
    if isinstance(value, (float, numpy.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def document(kind, payload):
    data = {'schema_version': SCHEMA_VERSION, 'kind': kind}
    data.update(json_safe(payload))
    return data


def record_to_dict(record):
    return {
        'index': record.index,
        'point': record.point,
        'sigma': record.sigma,
        'step_norm': record.step_norm,
        'residual_norm': record.residual_norm,
        'smallest_singular': record.smallest_singular,
        'prox_inner_iterations': record.prox_inner_iterations,
        'stationarity_residual': record.stationarity_residual,
        'recursion_slack': record.recursion_slack,
    }


def run_report_to_dict(report, problem_name=None, x0=None, seed=None, model=None):
    return document('run_report', {
        'problem': problem_name,
        'model': model,
        'seed': seed,
        'x0': x0,
        'status': report.status,
        'message': report.message,
        'iterations': report.iterations,
        'final_point': report.final_point,
        'final_stationarity': report.final_stationarity,
        'certificate': report.certificate,
        'verification': report.verification,
        'trace': [record_to_dict(record) for record in report.trace],
    })


def certificate_to_dict(certificate, problem_name=None):
    return document('certificate', dict(certificate.to_dict(), problem=problem_name))


def suite_to_dict(suite, problem_name=None):
    return document('verification', {
        'problem': problem_name,
        'passed': suite.passed,
        'radius_scale': suite.radius_scale,
        'seed': suite.seed,
        'min_recursion_slack': suite.min_recursion_slack,
        'certificate': suite.certificate,
        'runs': [{
            'x0': run.x0,
            'passed': run.passed,
            'status': run.report.status if run.report is not None else None,
            'iterations': run.report.iterations if run.report is not None else 0,
            'verification': run.report.verification if run.report is not None else None,
        } for run in suite.runs],
    })


def _format_number(value):
    if value is None:
        return ''
    if isinstance(value, (int, numpy.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def trace_to_csv(trace):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(TRACE_CSV_COLUMNS)
    for record in trace:
        writer.writerow([_format_number(getattr(record, column)) for column in TRACE_CSV_COLUMNS])
    return buffer.getvalue()


def write_atomic(path, text):
    """Writes 'text' to a temporary file next to 'path', then renames it over 'path'."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temporary = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise
    logging.info('Wrote {0}'.format(path))


def write_json(path, data):
    write_atomic(path, json.dumps(json_safe(data), indent=2, sort_keys=True, allow_nan=False) + '\n')


def write_trace_csv(path, trace):
    write_atomic(path, trace_to_csv(trace))
