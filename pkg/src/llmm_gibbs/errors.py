"""Exception hierarchy shared across the package.

Input problems (bad files, inconsistent dimensions, invalid hyperparameters)
derive from :class:`InputError`; numerical breakdowns derive from
:class:`NumericalError`. The CLI maps the two families to exit codes 1 and 2.
"""


class LLMMError(Exception):
    """Base class for all package errors."""


class InputError(LLMMError, ValueError):
    """Invalid user input: malformed data, configuration or model."""


class DomainError(InputError):
    """An argument lies outside the domain of a function."""


class DimensionError(InputError):
    """Array shapes are inconsistent with each other."""


class UnsupportedDimensionError(InputError):
    """The requested computation is only available in low dimension."""


class ParseError(InputError):
    """A dataset or configuration file could not be parsed.

    ``row`` and ``column`` locate the offending cell when known (``row`` is
    1-based over data lines, header excluded).
    """

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        full = f"{message} ({', '.join(loc)})" if loc else message
        super().__init__(full)
        self.row = row
        self.column = column


class NumericalError(LLMMError, ArithmeticError):
    """A computation produced a non-finite or otherwise invalid result."""


class SingularityError(NumericalError):
    """Cholesky factorization failed; ``pivot`` is the 0-based failing index."""

    def __init__(self, message, pivot=None):
        super().__init__(message if pivot is None else f"{message} (pivot {pivot})")
        self.pivot = pivot


class DegenerateVarianceError(NumericalError):
    """A series has (numerically) zero variance."""


class RankError(NumericalError):
    """A covariance estimate is singular.

    ``direction`` holds a unit vector spanning (part of) the null space.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class ChainError(NumericalError):
    """A sampler step failed; ``iteration`` is the 1-based step index."""

    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
