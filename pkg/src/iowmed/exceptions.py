"""Exception hierarchy.

Errors are split into two families so the command line can map them onto
exit codes: :class:`DataError` (bad input, exit 2) and
:class:`NumericalError` (a model could not be fit, exit 3).
"""


class IowmedError(Exception):
    """Base class for every error raised by this package."""


class DataError(IowmedError, ValueError):
    """Input data or parameters violate a documented contract."""


class InvalidParameterError(DataError):
    pass


class DomainError(DataError):
    """A value lies outside the domain of a transform (e.g. log of zero)."""


class ShapeError(DataError):
    pass


class InvalidPartitionError(DataError):
    pass


class ParseError(DataError):
    """A delimited text file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NumericalError(IowmedError, ArithmeticError):
    """A numerical procedure failed to produce a usable answer."""


class RankZeroError(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class SingularDesignError(NumericalError):
    pass


class SeparationError(NumericalError):
    """Logistic fit diverges because the classes are (quasi-)separable."""


class DegenerateOutcomeError(NumericalError):
    """Binary response with only one observed class."""


class WrongLinkError(IowmedError, TypeError):
    pass


class WeightModelFailure(NumericalError):
    """The exposure model used to build inverse odds weights failed."""


class MediationTestFailure(NumericalError):
    """The mediation statistic could not be computed on the observed data."""


class BootstrapFailure(NumericalError):
    pass
