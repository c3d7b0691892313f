"""Exception types shared across the package."""


class FlipsimError(Exception):
    """Base class for all package errors."""


class InvalidPrefixError(FlipsimError):
    """A transcript prefix is malformed or unreachable under honest play."""


class NoNextRoundError(FlipsimError):
    """A round view was requested for a completed transcript."""


class BudgetExceededError(FlipsimError):
    """An exact operation needed more tree nodes than the configured budget."""


class InvalidUtilityError(FlipsimError):
    """A utility function is not centered under the paired distribution."""


class InvalidBiasError(FlipsimError):
    """A tilt strength violates the utility's lower-bound requirement."""


class AttackInfeasibleError(FlipsimError):
    """A corrupted round admits no valid tilted message distribution.

    Only reachable when a round with a too-negative jump was misclassified,
    so it doubles as an internal consistency check.
    """


class UndefinedPosteriorError(FlipsimError):
    """A corruption posterior was requested for a party that never spoke."""


class CompositionContractError(FlipsimError):
    """The inner adversary of a composition is not deterministic."""


class ConfigError(FlipsimError):
    """An experiment or protocol description file is invalid.

    ``field`` carries the dotted path of the offending entry.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
