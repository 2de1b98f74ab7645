"""Exception types shared across the package."""


class UsageError(ValueError):
    """A caller violated a documented precondition."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured memory or work budget."""


class ConsistencyError(RuntimeError):
    """An internal invariant that should hold by construction failed."""
