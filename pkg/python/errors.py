"""
Exception hierarchy shared by the library and the command line.

The command line maps the three families below to its exit codes:
configuration problems (2), numeric failures (3) and partial results (4).
"""


class CornerUnfoldError(Exception):
    exit_code = 1


class ConfigError(CornerUnfoldError):
    exit_code = 2


class NumericError(CornerUnfoldError):
    exit_code = 3


class PartialResultsError(CornerUnfoldError):
    exit_code = 4

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class InvalidPointError(NumericError, ValueError):
    pass


class NoFixedPointError(NumericError):
    pass


class NonInvertibleError(NumericError):
    pass


class NonUniqueOrbitError(NumericError):
    pass


class BracketError(NumericError):
    pass


class EscapeError(NumericError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BudgetError(NumericError):
    pass


class NotASaddleError(NumericError):
    pass


class NoKinkError(NumericError):
    pass


class GenericityError(NumericError):
    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class NotObservableError(NumericError):
    pass


class PreconditionError(NumericError):
    pass
