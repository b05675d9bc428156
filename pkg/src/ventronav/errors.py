"""Exception types shared across the navigation engine."""


class VentronavError(Exception):
    """Base class for all errors raised by this package."""


# geometry / camera

class BehindCamera(VentronavError):
    """Point has non-positive depth in the camera frame."""


class NonPositiveDepth(VentronavError):
    """Unprojection requested with depth <= 0."""


# registration

class IncompleteCorrespondence(VentronavError):
    """Landmark sets do not cover the same complete id set."""


class DegenerateConfiguration(VentronavError):
    """Point configuration is collinear (or otherwise rank-deficient)."""


class ScaleOutOfBounds(VentronavError):
    """Estimated scale fell outside the configured bounds; signals gross mis-picks."""


class TooFewPoints(VentronavError):
    """Operation needs more points than were supplied."""


# acquisition

class UnknownLandmark(VentronavError):
    """Landmark id not present in the scene."""


class NotVisible(VentronavError):
    """Aim ray missed the head surface near the requested landmark."""


# guidance

class NoSurfaceHit(VentronavError):
    """Entry-point ray does not intersect the head mesh."""


class NotRegistered(VentronavError):
    """Operation requires a registration result that is not available."""


class MeshNotWatertight(VentronavError):
    """Inside/outside test requested on a mesh that is not watertight."""


# session

class RejectedEvent(VentronavError):
    """Event is not applicable in the current workflow phase. State is unchanged."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class WrongPhase(VentronavError):
    """Operation invoked outside the phase it belongs to."""


# io

class ParseError(VentronavError):
    """File could not be parsed; carries an approximate byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class EmptyMesh(VentronavError):
    """Mesh file contained no usable triangles."""


class IoError(VentronavError):
    """Report or scenario file could not be written/read."""
