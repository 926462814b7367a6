"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised for invalid construction-time settings (sizes, modes, flags)."""


class UsageError(ValueError):
    """Raised when an operation is called with inconsistent arguments."""


class OracleSizeError(ValueError):
    """Raised when the dense-unitary oracle is asked for too many qubits."""
