"""Exception types shared across the package."""


class Dqc1Error(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(Dqc1Error, ValueError):
    """Operands act on different qubit counts or matrix dimensions."""


class ResourceLimitError(Dqc1Error, ValueError):
    """A dense computation would exceed the configured qubit cap."""


class PreconditionError(Dqc1Error, ValueError):
    """An operation's stated precondition does not hold for the inputs."""


class ConfigError(Dqc1Error, ValueError):
    """Experiment configuration failed validation.

    Carries the full list of violations so a campaign can report every
    problem at once instead of stopping at the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
