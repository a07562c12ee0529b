"""Exception types shared across the package."""


class NetworkDesignError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(NetworkDesignError):
    """Invalid input document, instance data, or solution document."""


class UnreachableError(NetworkDesignError):
    """No path exists between two hubs."""


class SolveError(NetworkDesignError):
    """Numerical failure inside the LP or branch-and-bound machinery."""
