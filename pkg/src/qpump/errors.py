"""Exception hierarchy shared by all qpump modules."""


class QPumpError(ValueError):
    pass


class DimensionError(QPumpError):
    pass


class HermiticityError(QPumpError):
    def __init__(self, violation: float, message: str | None = None):
        self.violation = violation
        super().__init__(message or f"matrix is not Hermitian (||M - M^dag||_F = {violation:.3e})")


class NotPsdError(QPumpError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")


class InvalidModelError(QPumpError):
    """Raised when an operation receives a model that fails validation."""


class NotBipartiteError(QPumpError):
    pass


class ConservationError(QPumpError):
    pass


class ConfigError(QPumpError):
    """Malformed configuration document; ``location`` points at the offending field."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")
