"""Antenna-array geometry, wave vectors and far-field array responses.

Conventions used throughout the package:

* azimuth is measured counter-clockwise from the global +x axis, in (-pi, pi];
  elevation is measured from the azimuth plane, up positive;
* an array's local frame is its pose rotated by ``yaw`` about the vertical axis;
  a ULA lies along local x, a URA in the local x-z plane;
* elements are ordered row-major (horizontal index fastest);
* ``array_response`` takes angles in the array's LOCAL frame. Convert global
  angles with ``to_local_azimuth`` before calling it.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from risloc.errors import InvalidArgumentError

SPEED_OF_LIGHT = 299_792_458.0


class ArrayKind(str, Enum):
    ULA = "ULA"
    URA = "URA"


@dataclass(frozen=True)
class Pose:
    """Origin position in meters plus a yaw rotation (radians) about +z."""

    position: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "yaw", float(self.yaw))
        if len(self.position) != 3:
            raise InvalidArgumentError(f"pose position must have 3 coordinates, got {len(self.position)}")

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)

    def to_dict(self) -> dict:
        return {"position": list(self.position), "yaw": self.yaw}


@dataclass(frozen=True)
class ArraySpec:
    kind: ArrayKind
    count_h: int
    count_v: int = 1
    spacing: float = 0.5
    pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        object.__setattr__(self, "kind", ArrayKind(self.kind))
        if self.count_h < 1 or self.count_v < 1:
            raise InvalidArgumentError(f"array counts must be >= 1, got {self.count_h}x{self.count_v}")
        if self.spacing <= 0:
            raise InvalidArgumentError(f"element spacing must be positive, got {self.spacing}")
        if self.kind is ArrayKind.ULA and self.count_v != 1:
            raise InvalidArgumentError("a ULA has a single row (count_v must be 1)")

    @property
    def size(self) -> int:
        return self.count_h * self.count_v

    def at(self, pose: Pose) -> "ArraySpec":
        """Same aperture, placed at another pose."""
        return ArraySpec(self.kind, self.count_h, self.count_v, self.spacing, pose)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "count_h": self.count_h, "count_v": self.count_v, "spacing": self.spacing}


@dataclass(frozen=True)
class WaveVector:
    components: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def wrap_angle(angle):
    """Wrap radians into (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def to_local_azimuth(azimuth, pose: Pose):
    return wrap_angle(np.asarray(azimuth, dtype=float) - pose.yaw)


def to_global_azimuth(azimuth, pose: Pose):
    return wrap_angle(np.asarray(azimuth, dtype=float) + pose.yaw)


def unit_direction(azimuth: float, elevation: float) -> np.ndarray:
    return np.array(
        [np.cos(elevation) * np.cos(azimuth), np.cos(elevation) * np.sin(azimuth), np.sin(elevation)]
    )


def direction_angles(vector: np.ndarray) -> Tuple[float, float]:
    """Azimuth and elevation of a 3-vector."""
    dx, dy, dz = (float(v) for v in vector)
    azimuth = wrap_angle(np.arctan2(dy, dx))
    elevation = float(np.arctan2(dz, np.hypot(dx, dy)))
    return azimuth, elevation


def wave_vector(azimuth: float, elevation: float, wavelength: float) -> WaveVector:
    if not wavelength > 0:
        raise InvalidArgumentError(f"wavelength must be positive, got {wavelength}")
    return WaveVector((2 * np.pi / wavelength) * unit_direction(azimuth, elevation))


def _rotation(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def local_element_positions(spec: ArraySpec, wavelength: float) -> np.ndarray:
    """Element positions (N x 3, meters) in the array's local frame."""
    h = np.arange(spec.count_h, dtype=float)
    v = np.arange(spec.count_v, dtype=float)
    vv, hh = np.meshgrid(v, h, indexing="ij")
    step = spec.spacing * wavelength
    positions = np.zeros((spec.size, 3))
    positions[:, 0] = hh.ravel() * step
    positions[:, 2] = vv.ravel() * step
    return positions


def element_positions(spec: ArraySpec, wavelength: float) -> np.ndarray:
    """Element positions (N x 3, meters) in the global frame, row-major order."""
    local = local_element_positions(spec, wavelength)
    return local @ _rotation(spec.pose.yaw).T + spec.pose.origin


def steering_matrix(spec: ArraySpec, azimuths: Sequence[float], elevation, wavelength: float) -> np.ndarray:
    """Column-stacked array responses, shape (N, len(azimuths)), local-frame angles."""
    azimuths = np.atleast_1d(np.asarray(azimuths, dtype=float))
    elevations = np.broadcast_to(np.asarray(elevation, dtype=float), azimuths.shape)
    directions = np.stack(
        [np.cos(elevations) * np.cos(azimuths), np.cos(elevations) * np.sin(azimuths), np.sin(elevations)]
    )
    phase = (2 * np.pi / wavelength) * (local_element_positions(spec, wavelength) @ directions)
    return np.exp(-1j * phase)


def array_response(spec: ArraySpec, azimuth: float, elevation: float, wavelength: float) -> np.ndarray:
    """Far-field response exp(-j k(az, el)^T u_i) for local-frame angles."""
    k = wave_vector(azimuth, elevation, wavelength).components
    return np.exp(-1j * (local_element_positions(spec, wavelength) @ k))
