"""Exception types raised by qsched."""


class QSchedError(Exception):
    """Base class for all library errors."""


class DomainError(QSchedError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ScheduleError(QSchedError, ValueError):
    """A quarantine schedule is malformed (unsorted, overlapping, wrong total)."""


class PreconditionError(QSchedError, ValueError):
    """A verifier was called on a configuration that violates its hypothesis."""


class ConvergenceError(QSchedError, RuntimeError):
    """An iterative solver hit its iteration cap."""


class BracketError(QSchedError, RuntimeError):
    """A sign change that the theory guarantees could not be located."""


class BudgetExceeded(QSchedError, RuntimeError):
    """An enumeration would exceed its combinatorial budget."""
