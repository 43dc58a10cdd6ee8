"""
Exception types shared across MagnetoSense.
Library code raises these; only the CLI layer catches and maps them to exit codes.
"""


class MagnetoSenseError(Exception):
    """Base class for every error raised by the package"""


class ValidationError(MagnetoSenseError):
    """A document, invariant or pre-condition was violated"""


class SchemaError(ValidationError):
    """Malformed configuration or field document"""


class CoefficientError(ValidationError):
    """Invalid breakpoints or a positivity bound that does not hold"""


class GridError(ValidationError):
    """Quadrature grid pre-condition violated"""


class SolverError(MagnetoSenseError):
    """A solve failed at runtime"""


class BlowUpError(SolverError):
    def __init__(self, message, last_valid_time=None):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class MaxStepsExceeded(SolverError):
    def __init__(self, message, time_reached=None):
        super().__init__(message)
        self.time_reached = time_reached


class CFLViolation(SolverError):
    def __init__(self, message, cfl_number=None):
        super().__init__(message)
        self.cfl_number = cfl_number
