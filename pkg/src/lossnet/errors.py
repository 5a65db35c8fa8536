"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes to distinct process exit statuses.
"""


class LossNetError(Exception):
    exit_code = 1


class NonpositiveMean(LossNetError, ValueError):
    exit_code = 5


class IncompatibleScv(LossNetError, ValueError):
    exit_code = 5


class NonpositiveServiceRate(LossNetError, ValueError):
    """An effective service time of the two-moment chain is not positive.

    Happens for smooth arrivals (scv < 1) when ``m_L - i*(m_A - q_A)`` reaches
    zero before ``i = c``; the approximation is not defined there.
    """

    exit_code = 5

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotMarkovian(LossNetError, ValueError):
    exit_code = 5


class StateSpaceTooLarge(LossNetError):
    exit_code = 7


class InvalidHorizon(LossNetError, ValueError):
    exit_code = 5


class SimulationInvariantError(LossNetError, AssertionError):
    exit_code = 8


class UndefinedApe(LossNetError, ZeroDivisionError):
    exit_code = 5


class TargetUnreachable(LossNetError):
    exit_code = 6


class ConfigError(LossNetError):
    """Base for configuration problems; ``line`` is 1-based when known."""

    exit_code = 3

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ParseError(ConfigError):
    exit_code = 3


class ValidationError(ConfigError):
    exit_code = 4
