"""Exception types raised by the geometry and pose-recovery pipeline."""


class LumiposeError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateLine(LumiposeError):
    """Two image points are too close to define a line."""


class ParallelLines(LumiposeError):
    """Two image lines are (numerically) parallel and do not intersect."""


class BehindCamera(LumiposeError):
    """A world point lies on or behind the image plane of the camera."""


class DegenerateQuad(LumiposeError):
    """Four image points do not form a strictly convex quadrilateral."""


class SingularConfiguration(LumiposeError):
    """A linear system of the recovery pipeline is (numerically) singular."""


class NonPositiveVolume(LumiposeError):
    """The pyramid volumes used for scale recovery vanish."""


class HeightMismatch(LumiposeError):
    """The luminaire vertices do not share a single height."""


class AmbiguousSelection(LumiposeError):
    """Two candidate solutions tie exactly.

    Ties are broken deterministically (smaller residual, then lowest
    index), so this is currently never raised; it exists so callers can
    guard against a future stricter mode.
    """


class DegenerateObjective(LumiposeError):
    """The height-search objective carries no information (flat luminaire)."""


class SamplingExhausted(LumiposeError):
    """Pose rejection sampling failed to find an admissible camera pose."""


class ConfigError(LumiposeError):
    """A scene or experiment configuration is invalid."""


class InputFileError(LumiposeError):
    """An observation file could not be parsed."""
