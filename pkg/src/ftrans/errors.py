"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Missing or inconsistent parameters (horizon too small, unknown names)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class InvariantViolation(AssertionError):
    """A checked mathematical invariant failed; signals a soundness bug."""
