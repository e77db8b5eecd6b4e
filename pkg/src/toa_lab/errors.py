"""Exception hierarchy shared by all toa_lab modules."""


class ToaLabError(Exception):
    """Base class for every error raised by toa_lab."""


class GridError(ToaLabError, ValueError):
    """Invalid grid: non power-of-two size, degenerate interval, mismatch."""


class LeakageError(ToaLabError, ValueError):
    """A wave packet has too much amplitude at the edge of the grid."""


class StepSizeError(ToaLabError, ValueError):
    """A time step violates the stability precondition of an integrator."""


class DistributionError(ToaLabError, ValueError):
    """An arrival distribution cannot be processed (e.g. zero total)."""


class ResourceError(ToaLabError):
    """A request would exceed the resource guard (e.g. kernel too large)."""


class ConfigError(ToaLabError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
