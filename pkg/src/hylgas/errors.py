"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergenceError(DomainError):
    """The requested quantity is infinite at the given arguments."""


class BracketError(RuntimeError):
    """A root or maximizer could not be bracketed."""


class ConvergenceError(RuntimeError):
    """An iterative solve did not reach the requested accuracy."""


class EnumerationCapError(RuntimeError):
    """A combinatorial enumeration would exceed the configured cap."""
