"""Exception types shared across the package."""


class RuinlabError(Exception):
    """Base class for all ruinlab errors."""


class ParameterError(RuinlabError, ValueError):
    """A model or estimator parameter is outside its admissible domain."""


class DomainError(RuinlabError, ValueError):
    """An operation argument violates the operation's precondition."""


class NumericalError(RuinlabError, RuntimeError):
    """A numerical routine failed to reach its requested tolerance.

    Attributes:
        achieved: error estimate actually reached (may be None).
        requested: tolerance that was asked for (may be None).
    """

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class ModelConsistencyError(RuinlabError, RuntimeError):
    """A declared model bound was violated at runtime (e.g. intensity above its envelope)."""


class DegenerateModelError(RuinlabError, ValueError):
    """The model is degenerate for the requested operation (e.g. zero cumulative intensity)."""


class BudgetError(RuinlabError, ValueError):
    """A configured computation exceeds its documented budget."""


class ConfigError(RuinlabError, ValueError):
    """Configuration text failed to parse or validate.

    Carries the full list of error messages, one per problem, each prefixed
    with ``line:col:`` where a source position is known.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))
