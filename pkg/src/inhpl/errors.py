"""Exception and warning classes shared across the toolkit."""


class PathLossError(ValueError):
    """Base class for every domain or validation failure raised by inhpl."""


class DomainError(PathLossError):
    """An input lies outside the range where a model is defined."""


class DomainWarning(UserWarning):
    """Emitted instead of :class:`DomainError` when evaluating permissively."""


class EmptyInputError(PathLossError):
    pass


class RankDeficiencyError(PathLossError):
    """The regressors of a fit do not span the parameter space.

    ``regressor`` names the degree of freedom that collapsed
    (``"distance"``, ``"frequency"`` or ``"distance+frequency"``).
    """

    def __init__(self, message: str, regressor: str):
        super().__init__(message)
        self.regressor = regressor


class FormatError(PathLossError):
    """Malformed input file (bad header, unreadable stream)."""


class ConfigError(PathLossError):
    pass


class BoundaryWarning(UserWarning):
    """Brute-force optimum landed on the edge of the search box."""
