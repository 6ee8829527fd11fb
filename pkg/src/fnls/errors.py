class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class RegimeError(ValueError):
    """Parameters violate the exponent regime an operation needs."""


class ResourceError(RuntimeError):
    """A discretization exceeds the desk-scale node or step budget."""


class TruncationError(RuntimeError):
    """Spectral mass reached the truncation edge of a lattice."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
