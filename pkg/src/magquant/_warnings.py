"""Warning categories used across the package."""


class QuadratureWarning(UserWarning):
    """A quadrature did not reach its refinement target."""


class BoundaryWarning(UserWarning):
    """A state or phase-space point sits too close to the box boundary."""


class AliasingWarning(UserWarning):
    """Spectral content of sampled data is not negligible at the grid Nyquist."""
