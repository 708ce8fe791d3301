"""Exception hierarchy shared by every orthoris module."""


class OrthorisError(Exception):
    """Base class for errors raised by orthoris."""

    pass


class DegenerateProjectionError(OrthorisError):
    """Raised when a Stiefel projection is not unique (rank-deficient input)."""

    pass


class MapUndefinedError(OrthorisError):
    """Raised when Z + I is singular and no reflection matrix exists."""

    pass


class OpenCircuitError(OrthorisError):
    """Raised when I - Theta is singular (open-circuit limit of the impedance map)."""

    pass


class InfeasibleError(OrthorisError):
    """Raised when the channels cannot support the requested reflection solve."""

    pass


class DegenerateSelectionError(OrthorisError):
    """Raised when channel selection hits a degenerate point (g(U) = 0, no positive root)."""

    pass


class GeometryError(OrthorisError):
    """Raised when a scenario geometry places a user on top of a panel element."""

    pass


class ConfigError(OrthorisError):
    """Raised when a sweep configuration is invalid."""

    pass
