"""Exception hierarchy shared by every xlstm_scaling module."""


class ScalingError(Exception):
    """Base class for all toolkit errors; the CLI maps it to exit code 2."""


class InvalidConfigError(ScalingError):
    """
    An architecture, cost-factor, byte-width or workload description is invalid.

    Args:
        violations: every violated constraint, in the order they were checked.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__('; '.join(self.violations))


class ModeMismatchError(ScalingError):
    """A workload, fit or metric was paired with an incompatible counterpart."""


class InsufficientDataError(ScalingError):
    """Too few points, or too few distinct values, to determine a fit."""


class NoConvergenceError(ScalingError):
    """No optimizer start converged."""


class DegenerateFitError(ScalingError):
    """The least-squares design matrix is rank deficient."""


class NegativeRateError(ScalingError):
    """A runtime fit produced a non-positive slope, i.e. no physical rate."""


class UndefinedIntensityError(ScalingError):
    """Arithmetic intensity was requested for an operation moving zero bytes."""


class DataError(ScalingError):
    """
    A record in an input file could not be parsed or violates its invariants.

    Args:
        message: what is wrong with the record.
        line: 1-based line number in the source file, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        self.message = message
        prefix = f'line {line}: ' if line is not None else ''
        super().__init__(prefix + message)


class SchemaVersionError(ScalingError):
    """An artifact was written with a schema version this tool cannot read."""


class UsageError(ScalingError):
    """Command-line usage error; mapped to exit code 1."""
