"""Exception types raised across the package."""


class PatrolGameError(Exception):
    """Base class for all errors raised by patrolgame."""


class ValidationError(PatrolGameError, ValueError):
    """An input violates a documented precondition or invariant."""


class EmptyInstanceError(ValidationError):
    pass


class CsvParseError(ValidationError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.row = row
        self.column = column


class DomainError(ValidationError):
    """A numeric argument lies outside the domain of the operation."""


class HorizonError(ValidationError):
    """A requested window runs past the available horizon."""


class TruncationError(PatrolGameError):
    """First-visit distributions were truncated with too much missing mass."""

    def __init__(self, message, pair, tail_mass):
        super().__init__(message)
        self.pair = pair
        self.tail_mass = tail_mass


class ReducibleChainError(PatrolGameError):
    """A transition matrix is reducible, so some hitting time is infinite."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ResourceLimitError(PatrolGameError):
    """A computation would exceed a configured memory or state-count cap."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class NoFeasibleScheduleError(PatrolGameError):
    pass


class UnsupportedError(PatrolGameError):
    pass


class ConfigError(ValidationError):
    pass
