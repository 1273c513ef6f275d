class ProxGNError(Exception):
    pass

class InvalidMatrix(ProxGNError):
    pass

class DimensionMismatch(ProxGNError):
    pass

class HypothesisViolated(ProxGNError):
    pass

class HNotPositiveDefinite(ProxGNError):
    pass

class InnerSolverStalled(ProxGNError):
    pass

class DomainError(ProxGNError):
    pass

class DegenerateModel(ProxGNError):
    pass

class H3Violated(ProxGNError):

    def __init__(self, h, message=None):
        self.h = h
        super().__init__(message or 'h-condition violated: h={0:.6g} >= 1'.format(h))

class CrossCheckMismatch(ProxGNError):
    pass

class RadiusUndefined(ProxGNError):
    pass

class SingularJacobian(ProxGNError):
    pass

class LeftDomain(ProxGNError):
    pass

class ProxFailure(ProxGNError):
    pass

class MissingGroundTruth(ProxGNError):
    pass

class NotInjectiveAtMinimizer(ProxGNError):
    pass

class ProblemFileError(ProxGNError):

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        location = ''
        if field is not None:
            location += ' (field "{0}")'.format(field)
        if line is not None:
            location += ' (line {0})'.format(line)
        super().__init__(message + location)

class UsageError(ProxGNError):
    pass
