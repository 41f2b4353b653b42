"""Exception types raised by risloc.

Library code raises these; only the CLI catches them and turns them into exit codes.
"""

from typing import Optional


class RislocError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidArgumentError(RislocError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(RislocError, ValueError):
    """Array, channel or frame dimensions do not line up."""


class EmptyChannelError(RislocError):
    """A channel was requested from an empty path list."""


class UnsupportedOrderError(RislocError):
    """The tracer was asked for reflections beyond its supported order."""


class NumericalDegeneracyError(RislocError):
    """A matrix failed a numerical precondition (e.g. not PSD)."""


class NoPeakError(RislocError):
    """Peak picking had no admissible grid point left."""


class AlignmentError(RislocError):
    """A time shift does not fit inside the frame it applies to."""


class DegenerateGeometryError(RislocError):
    """Rays are (nearly) parallel, so they have no usable intersection."""


class ScenarioError(RislocError):
    """A scenario or scene file failed to parse or validate."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ProtocolStageError(RislocError):
    """A sub-operation of the positioning and mapping protocol failed."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
