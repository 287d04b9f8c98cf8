"""Exception types raised by the solvers and I/O helpers."""


class CSCError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(CSCError, ValueError):
    """Array shapes are not conformable."""


class SymmetryViolation(CSCError, ArithmeticError):
    """An inverse transform produced a non-negligible imaginary part."""


class DomainError(CSCError, ValueError):
    """A scalar argument lies outside the domain of the function."""


class NonFinite(CSCError, FloatingPointError):
    """An iterate became NaN or infinite."""


class NotBracketable(CSCError, ValueError):
    """The residual-energy target cannot be reached for any positive multiplier."""


class NoConvergence(CSCError, RuntimeError):
    """The multiplier search exhausted its iteration budget.

    The last iterate is available as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateFilter(CSCError, ArithmeticError):
    """A filter collapsed to (numerically) zero before normalization."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AgreementFailure(CSCError, AssertionError):
    """Benchmarked kernels disagree, so their timings are meaningless."""


class FormatError(CSCError, ValueError):
    """An input file is not in a supported format."""
