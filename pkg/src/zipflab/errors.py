"""Exception hierarchy.

Three top-level branches map onto the CLI exit codes: bad inputs or
configuration (exit 2), data that cannot support the requested computation
(exit 3), and internal invariant violations (exit 4).
"""


class ZipflabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ZipflabError, ValueError):
    """Invalid model parameters, profile, or configuration."""


class DataError(ZipflabError):
    """The supplied data cannot support the requested computation."""


class InternalError(ZipflabError):
    """An internal invariant was violated; indicates a bug."""


class OverflowUnrepresentable(DataError):
    """An exact integer result exceeds the representable range.

    Kept for API completeness: Python integers are unbounded, so the
    analytic path never raises this in practice.
    """


class EmptyLengthClass(DataError):
    """No surviving types at the requested word length."""


class CapExceeded(DataError):
    """Expanding the table would exceed the configured entry cap."""


class ProfileNotAsymptotic(DataError):
    """Rank inversion requires a geometric-growth survival profile."""


class NoSurvivors(DataError):
    """Every length class in range has zero surviving types."""


class NonTermination(DataError):
    """Rejection sampling would run effectively forever."""


class WindowTooSmall(DataError):
    """Too few entries in the requested fit window."""


class EmptyInput(DataError):
    """An operation received an empty table or token stream."""


class NoConvergence(DataError):
    """Numerical root finding failed to converge."""


class TailTooThin(DataError):
    """The tail holds too little mass for maximum-likelihood fitting."""


class EmptyCorpus(DataError):
    """No tokens survived tokenization."""


class IoFailure(DataError):
    """An input file could not be read."""
