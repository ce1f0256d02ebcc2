"""Exception types shared across the toolkit.

The CLI maps them onto exit codes: usage 1, data 2, numerical 3.
"""


class DataError(ValueError):
    """Unreadable, malformed or inconsistent dataset / checkpoint input."""


class NumericalError(ArithmeticError):
    """Non-finite values appeared in a computation that must stay finite."""
