"""Error types shared across the package."""


class PreconditionError(ValueError):
    """Raised when an input violates a documented precondition."""


class InternalInconsistencyError(RuntimeError):
    """Raised when two routes that must agree have diverged."""
