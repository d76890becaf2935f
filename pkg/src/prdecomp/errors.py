"""Exception types shared across the package."""


class PRDecompError(Exception):
    """Base class for all errors raised by prdecomp."""


class NotPrime(PRDecompError, ValueError):
    pass


class DivisionByZero(PRDecompError, ZeroDivisionError):
    pass


class OutsideDomain(PRDecompError, ZeroDivisionError):
    """A rational function was evaluated where a denominator vanishes."""


class ShapeMismatch(PRDecompError, ValueError):
    pass


class DimsMismatch(PRDecompError, ValueError):
    pass


class DegreeBlowup(PRDecompError, ArithmeticError):
    """A polynomial exceeded the configured total-degree ceiling."""


class SingularPivot(PRDecompError, ArithmeticError):
    pass


class RankDeficient(PRDecompError, ArithmeticError):
    pass


class BudgetExceeded(PRDecompError, RuntimeError):
    pass


class Unstable(PRDecompError, RuntimeError):
    """Dimension estimates disagree across extension degrees."""


class NoPoint(PRDecompError, RuntimeError):
    pass


class AllCandidatesFailed(PRDecompError, RuntimeError):
    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)
