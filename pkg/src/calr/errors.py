"""Exception types shared across the package."""


class CalrError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CalrError):
    """Invalid user input: bad domains, broken preconditions, malformed config."""


class SolverError(CalrError):
    """Numerical failure: singular or ill-conditioned systems, integrator
    breakdown, residuals above tolerance."""


class NormalizationError(SolverError):
    """The shell gradient energy vanished, so the normalization constant
    c_delta is undefined."""


class VerificationFailure(CalrError):
    """A verification suite or a demo assertion did not hold."""
