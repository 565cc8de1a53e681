"""Exception hierarchy shared across the package."""


class QuadmapError(Exception):
    """Base class for all errors raised by quadmap."""


class DimensionError(QuadmapError, ValueError):
    """Grid shapes or depths do not match."""


class DomainError(QuadmapError, ValueError):
    """A value lies outside its admissible range."""


class ValidityError(QuadmapError, ValueError):
    """A tree topology violates the parent-expansion constraint."""


class BudgetError(QuadmapError, ValueError):
    """A leaf budget is not a positive integer."""


class CapacityError(QuadmapError, ValueError):
    """A problem is too large for an exhaustive routine."""


class ConfigurationError(QuadmapError, ValueError):
    """Inconsistent run configuration (lengths, keys, values)."""


class ContractViolation(QuadmapError, RuntimeError):
    """An internal postcondition failed; indicates a bug rather than bad input."""


class FormatError(QuadmapError, ValueError):
    """Malformed payload bytes."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class IngestionError(QuadmapError, ValueError):
    """A map file could not be parsed into an occupancy grid."""

    def __init__(self, message, row=None, col=None):
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {col})" if col is not None else ")")
        super().__init__(message + where)
        self.row = row
        self.col = col
