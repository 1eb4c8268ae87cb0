"""Exception types shared across the package."""


class FpCloakError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FpCloakError, ValueError):
    """Invalid world, map or experiment parameters."""


class NoCandidates(FpCloakError):
    """No vertex passes the clustering-coefficient threshold."""

    def __init__(self, epsilon: float):
        super().__init__(f"no vertex with clustering coefficient above {epsilon}")
        self.epsilon = epsilon


class InsufficientDensity(FpCloakError):
    """Re-draw budget exhausted before enough dense pointers were found."""

    def __init__(self, needed: int, max_available: int, attempts: int):
        super().__init__(
            f"needed a pointer with >= {needed} neighbours, best candidate has "
            f"{max_available} (after {attempts} draws)"
        )
        self.needed = needed
        self.max_available = max_available
        self.attempts = attempts


class IntegrityError(FpCloakError):
    """A bundle or noise set violates its structural invariants."""


class Unlocatable(FpCloakError):
    """The location provider cannot match a fingerprint to its radio map."""
