"""Exception types shared across the package."""


class SpectralPointError(ValueError):
    """Raised when a resolvent is requested at (or too close to) a spectral
    point. Carries the nearest eigenvalue and its distance to the probe."""

    def __init__(self, mu, nearest, distance):
        self.mu = complex(mu)
        self.nearest = complex(nearest)
        self.distance = float(distance)
        super().__init__(
            f"resolvent probe mu={mu} is within {distance:.3e} of the "
            f"eigenvalue {nearest}"
        )


class EigenSolverError(RuntimeError):
    """Eigen-solver failed to converge; carries the backward residual norm."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class PositivityError(ValueError):
    """An entrywise-positivity precondition failed. Names the offending
    entry so the caller can see which coefficient breaks the cone."""

    def __init__(self, index, value, context=""):
        self.index = tuple(index)
        self.value = value
        what = f"entry {self.index} = {value:.6g} is negative"
        if context:
            what = f"{context}: {what}"
        super().__init__(what)


class InputError(ValueError):
    """Malformed input file or option; message carries a field diagnostic."""
