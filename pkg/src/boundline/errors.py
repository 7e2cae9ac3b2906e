"""Exception types shared across the toolkit."""


class BoundlineError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(BoundlineError):
    """A parameter or configuration value is invalid."""


class WorldFileError(BoundlineError):
    """World file missing or malformed."""


class RasterFormatError(BoundlineError):
    """Raster input has an unsupported format or is malformed."""


class GridMismatchError(BoundlineError):
    """Two rasters expected on the same grid differ in shape or transform."""


class TopologyError(BoundlineError):
    """Line work violates a topology precondition."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class UnknownNodeError(BoundlineError):
    """A node id is not present in the network."""


class NoPathError(BoundlineError):
    """Terminals cannot be connected on the network."""

    def __init__(self, message: str, unreachable_pairs=()):
        super().__init__(message)
        self.unreachable_pairs = list(unreachable_pairs)


class UndefinedMeasureError(BoundlineError):
    """A geometric measure is undefined for the given input."""


class SessionStateError(BoundlineError):
    """Session operation not valid in the current state."""


class SpectralConvergenceError(BoundlineError):
    """The eigensolver did not converge."""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations
