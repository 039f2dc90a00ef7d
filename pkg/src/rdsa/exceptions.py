"""Exception hierarchy.

Every error carries a short ``category`` string so the command-line runner
can report failures in a machine-readable way.
"""


class RDSAError(Exception):
    category = "error"


class DomainError(RDSAError, ValueError):
    """An argument lies outside the set on which the operation is defined."""

    category = "domain"


class OutOfRangeError(RDSAError, IndexError):
    """An index (inner-loop counter, row number) is out of range."""

    category = "range"


class AccumulationOverflowError(RDSAError, OverflowError):
    category = "overflow"


class NumericalError(RDSAError, ArithmeticError):
    category = "numerical"


class UnsupportedDiagnosticError(RDSAError):
    category = "unsupported"
