"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point (or a computed image) lies outside the domain it must belong to."""


class DescriptorError(ValueError):
    """Malformed or inconsistent map descriptor."""


class BranchError(ArithmeticError):
    """Differentiation requested on the branch cut of the principal square root."""


class ConvergenceError(ArithmeticError):
    """A limit could not be certified to the requested tolerance.

    ``last`` carries the last two iterates (or accelerated values) so callers
    can write partial diagnostics.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class Inconclusive(RuntimeError):
    """The numerical evidence does not support either branch of a decision."""


class NotSelfMap(DomainError):
    """A map descriptor failed the sampled self-map certificate."""
