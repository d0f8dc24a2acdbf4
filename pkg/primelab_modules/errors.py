"""
Exceptions for PrimeLab
Each family maps onto one CLI exit code
"""


class PrimeLabError(Exception):
    """Base class for all PrimeLab errors"""
    exit_code = 1


class PreconditionError(PrimeLabError, ValueError):
    """An input was rejected before any computation ran"""
    exit_code = 1

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class BudgetError(PreconditionError):
    """A table or window would not fit the configured memory budget"""


class SpecSyntaxError(PreconditionError):
    """Malformed sequence text"""


class PropertyViolation(PrimeLabError):
    """A checked mathematical property failed; signals a bug"""
    exit_code = 2


class ConstructionError(PropertyViolation):
    """An interval that must contain a prime turned out empty"""

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n
