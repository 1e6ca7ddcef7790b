"""Exception types shared across the workbench.

Every error that can cross the session protocol boundary is forwarded to
clients by class name, so the names here are part of the wire contract.
"""

from __future__ import annotations


class MechSketchError(Exception):
    """Base class for all workbench errors."""


class RejectedStroke(MechSketchError):
    """Stroke input failed validation (too few points, zero length, non-finite)."""


class FormatError(MechSketchError):
    """Malformed document or message payload."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at byte {position})"
        super().__init__(message)
        self.position = position


class VersionError(FormatError):
    """Document version is not supported."""

    def __init__(self, version) -> None:
        super().__init__(f"unsupported document version {version!r}")
        self.version = version


class NotAGesture(MechSketchError):
    """Operation requires a gesture-mode stroke."""


class AmbiguousJoint(MechSketchError):
    """A joint gesture touched a number of links other than two."""

    def __init__(self, count: int, links=()):
        super().__init__(f"joint gesture touches {count} link(s), expected exactly 2")
        self.count = count
        self.links = tuple(links)


class UnknownEntity(MechSketchError):
    """Referenced stroke/link/joint/trace id does not exist."""


class InvalidInput(MechSketchError):
    """Joint cannot serve as an input in its current mechanism."""


class DegenerateLink(MechSketchError):
    """Edit would collapse a link's anchors onto one point."""


class Underdriven(MechSketchError):
    """Fewer drivers than degrees of freedom."""

    def __init__(self, mobility: int, drivers: int):
        super().__init__(f"mechanism has mobility {mobility} but {drivers} driver(s)")
        self.mobility = mobility
        self.drivers = drivers


class Overdriven(MechSketchError):
    """More drivers than degrees of freedom."""

    def __init__(self, mobility: int, drivers: int):
        super().__init__(f"mechanism has mobility {mobility} but {drivers} driver(s)")
        self.mobility = mobility
        self.drivers = drivers


class NotSimulatable(MechSketchError):
    """Mechanism has no degrees of freedom to drive."""

    def __init__(self, mobility: int):
        super().__init__(f"mechanism is a structure (mobility {mobility})")
        self.mobility = mobility


class NoGround(MechSketchError):
    """Mechanism instance has no ground link designated."""


class BadEnvelope(MechSketchError):
    """Protocol message is missing required envelope fields."""


class UnknownSession(MechSketchError):
    """Protocol message addressed a session id that does not exist."""


class StaleRevision(MechSketchError):
    """Client acted on an outdated document revision."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"client revision {actual} is stale, server is at {expected}")
        self.expected = expected
        self.actual = actual
