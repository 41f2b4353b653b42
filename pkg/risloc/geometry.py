"""Indoor scene description and an image-method ray tracer.

The tracer returns the LoS path plus specular reflections of order <= 2. Every
surface is a planar parallelogram (rectangle in practice); room walls are six
such facets named ``x_min, x_max, y_min, y_max, floor, ceiling``. A surface
with reflection coefficient 0 still blocks rays but never reflects them.
"""

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from risloc.arrays import SPEED_OF_LIGHT, Pose, direction_angles
from risloc.errors import InvalidArgumentError, ScenarioError, UnsupportedOrderError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAX_SUPPORTED_ORDER = 2
DEFAULT_WALL_GAMMA = 0.7
DEFAULT_SCATTERER_GAMMA = 0.9
NODE_NAMES = ("ap", "ris", "ue")

_PLANAR_TOL = 1e-9
_INSIDE_TOL = 1e-9
_SEGMENT_EPS = 1e-9


@dataclass(frozen=True)
class Plane:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(normal)
        if not norm > 0:
            raise InvalidArgumentError("plane normal must be non-zero")
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "normal", normal / norm)


@dataclass(frozen=True, eq=False)
class Facet:
    """A planar parallelogram given by four corners in order (c0, c1, c2, c3)."""

    name: str
    corners: np.ndarray
    gamma: float = DEFAULT_SCATTERER_GAMMA

    def __post_init__(self):
        corners = np.array(self.corners, dtype=float)
        if corners.shape != (4, 3):
            raise InvalidArgumentError(f"facet {self.name!r} needs 4 corners of 3 coordinates")
        corners.setflags(write=False)
        object.__setattr__(self, "corners", corners)
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgumentError(f"facet {self.name!r}: reflection coefficient {self.gamma} outside [0, 1]")
        u, v = self.edges
        normal = np.cross(u, v)
        if not np.linalg.norm(normal) > 0:
            raise InvalidArgumentError(f"facet {self.name!r} is degenerate")
        normal = normal / np.linalg.norm(normal)
        if abs(np.dot(corners[2] - corners[0], normal)) > _PLANAR_TOL:
            raise InvalidArgumentError(f"facet {self.name!r} corners are not coplanar")
        if np.linalg.norm(corners[2] - (corners[0] + u + v)) > 1e-6:
            raise InvalidArgumentError(f"facet {self.name!r} is not a parallelogram")
        gram = np.array([[u @ u, u @ v], [u @ v, v @ v]])
        object.__setattr__(self, "_dual", np.linalg.solve(gram, np.stack([u, v])))
        object.__setattr__(self, "_normal", normal)

    @property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.corners[1] - self.corners[0], self.corners[3] - self.corners[0]

    @property
    def plane(self) -> Plane:
        return Plane(self.corners[0], self._normal)

    def contains(self, point: np.ndarray, tol: float = _INSIDE_TOL) -> bool:
        offset = np.asarray(point, dtype=float) - self.corners[0]
        if abs(offset @ self._normal) > tol:
            return False
        s, t = self._dual @ offset
        scale = tol / max(np.linalg.norm(self.edges[0]), np.linalg.norm(self.edges[1]))
        return bool(-scale <= s <= 1 + scale and -scale <= t <= 1 + scale)

    def segment_hit(self, start: np.ndarray, end: np.ndarray) -> Optional[float]:
        """Parameter t in (0, 1) where the open segment crosses the facet, or None."""
        direction = end - start
        denom = direction @ self._normal
        if abs(denom) < 1e-15:
            return None
        t = ((self.corners[0] - start) @ self._normal) / denom
        if not _SEGMENT_EPS < t < 1 - _SEGMENT_EPS:
            return None
        return float(t) if self.contains(start + t * direction) else None

    def to_dict(self) -> dict:
        return {"name": self.name, "corners": self.corners.tolist(), "gamma": self.gamma}


@dataclass(frozen=True)
class PathRecord:
    """One propagation path. Angles are global; AoA points from the receiver back along the last segment."""

    order: int
    gain: float
    delay: float
    aod_azimuth: float
    aod_elevation: float
    aoa_azimuth: float
    aoa_elevation: float
    reflection_points: Tuple[Tuple[float, float, float], ...] = ()
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    destination: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    surfaces: Tuple[str, ...] = ()

    @property
    def length(self) -> float:
        return self.delay * SPEED_OF_LIGHT

    @property
    def vertices(self) -> np.ndarray:
        return np.array([self.origin, *self.reflection_points, self.destination], dtype=float)


@dataclass(frozen=True, eq=False)
class Scene:
    room_size: Tuple[float, float, float]
    surfaces: Tuple[Facet, ...]
    carrier_frequency: float
    nodes: Dict[str, Pose] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "room_size", tuple(float(v) for v in self.room_size))
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        if not self.carrier_frequency > 0:
            raise InvalidArgumentError(f"carrier frequency must be positive, got {self.carrier_frequency}")
        names = [s.name for s in self.surfaces]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("surface names must be unique")
        size = np.asarray(self.room_size)
        for name, pose in self.nodes.items():
            position = pose.origin
            if not (np.all(position > 0) and np.all(position < size)):
                raise InvalidArgumentError(f"node {name!r} at {pose.position} is not strictly inside the room")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def node(self, name: str) -> Pose:
        try:
            return self.nodes[name]
        except KeyError:
            raise InvalidArgumentError(f"scene has no node named {name!r}")

    def surface(self, name: str) -> Facet:
        for facet in self.surfaces:
            if facet.name == name:
                return facet
        raise InvalidArgumentError(f"scene has no surface named {name!r}")

    def with_node(self, name: str, pose: Pose) -> "Scene":
        return replace(self, nodes={**self.nodes, name: pose})

    def to_dict(self) -> dict:
        walls = {f.name: f.gamma for f in self.surfaces if f.name in _WALL_NAMES}
        return {
            "schema": SCHEMA_VERSION,
            "carrier_frequency_hz": self.carrier_frequency,
            "room": {"size": list(self.room_size), "walls": walls},
            "surfaces": [f.to_dict() for f in self.surfaces if f.name not in _WALL_NAMES],
            "nodes": {name: pose.to_dict() for name, pose in sorted(self.nodes.items())},
        }


_WALL_NAMES = ("x_min", "x_max", "y_min", "y_max", "floor", "ceiling")


def room_walls(size: Sequence[float], gammas: Dict[str, float]) -> List[Facet]:
    lx, ly, lz = size
    corners = {
        "x_min": [(0, 0, 0), (0, ly, 0), (0, ly, lz), (0, 0, lz)],
        "x_max": [(lx, 0, 0), (lx, ly, 0), (lx, ly, lz), (lx, 0, lz)],
        "y_min": [(0, 0, 0), (lx, 0, 0), (lx, 0, lz), (0, 0, lz)],
        "y_max": [(0, ly, 0), (lx, ly, 0), (lx, ly, lz), (0, ly, lz)],
        "floor": [(0, 0, 0), (lx, 0, 0), (lx, ly, 0), (0, ly, 0)],
        "ceiling": [(0, 0, lz), (lx, 0, lz), (lx, ly, lz), (0, ly, lz)],
    }
    return [Facet(name, corners[name], gammas[name]) for name in _WALL_NAMES]


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError("missing required key", key=f"{where}{key}")
    return data[key]


def _object(value, key: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"expected an object, got {value!r}", key=key)
    return value


def _list(value, key: str) -> list:
    if not isinstance(value, list):
        raise ScenarioError(f"expected a list, got {value!r}", key=key)
    return value


def _as_float(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", key=key)
    return float(value)


def _as_vector(value, key: str, length: int = 3) -> Tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ScenarioError(f"expected a list of {length} numbers, got {value!r}", key=key)
    return tuple(_as_float(v, f"{key}[{i}]") for i, v in enumerate(value))


def scene_from_dict(data: dict) -> Scene:
    """Build a Scene from the versioned JSON schema (``schema: 1``)."""
    if not isinstance(data, dict):
        raise ScenarioError("scene must be a JSON object", key="scene")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema version {schema!r}", key="schema")

    room = _object(_require(data, "room", ""), "room")
    size = _as_vector(_require(room, "size", "room."), "room.size")
    if min(size) <= 0:
        raise ScenarioError("room dimensions must be positive", key="room.size")
    default_gamma = _as_float(room.get("gamma", DEFAULT_WALL_GAMMA), "room.gamma")
    wall_overrides = _object(room.get("walls", {}), "room.walls")
    unknown = set(wall_overrides) - set(_WALL_NAMES)
    if unknown:
        raise ScenarioError(f"unknown wall names {sorted(unknown)}", key="room.walls")
    gammas = {
        name: _as_float(wall_overrides.get(name, default_gamma), f"room.walls.{name}") for name in _WALL_NAMES
    }

    try:
        surfaces = room_walls(size, gammas)
        for i, entry in enumerate(_list(data.get("surfaces", []), "surfaces")):
            key = f"surfaces[{i}]"
            corners = _list(_require(_object(entry, key), "corners", f"{key}."), f"{key}.corners")
            corners = [_as_vector(c, f"{key}.corners[{j}]") for j, c in enumerate(corners)]
            gamma = _as_float(entry.get("gamma", DEFAULT_SCATTERER_GAMMA), f"{key}.gamma")
            surfaces.append(Facet(entry.get("name", f"scatterer_{i}"), corners, gamma))
    except InvalidArgumentError as e:
        raise ScenarioError(str(e), key="surfaces")

    nodes = {}
    for name, entry in _object(_require(data, "nodes", ""), "nodes").items():
        entry = _object(entry, f"nodes.{name}")
        position = _as_vector(_require(entry, "position", f"nodes.{name}."), f"nodes.{name}.position")
        nodes[name] = Pose(position, _as_float(entry.get("yaw", 0.0), f"nodes.{name}.yaw"))
    missing = [n for n in NODE_NAMES if n not in nodes]
    if missing:
        raise ScenarioError(f"missing nodes {missing}", key="nodes")

    frequency = _as_float(_require(data, "carrier_frequency_hz", ""), "carrier_frequency_hz")
    try:
        return Scene(size, surfaces, frequency, nodes)
    except InvalidArgumentError as e:
        raise ScenarioError(str(e), key="nodes")


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON in {path}: {e}")
    return scene_from_dict(data)


def mirror_point(point, plane: Plane) -> np.ndarray:
    """Reflect a point across a plane."""
    if not isinstance(plane, Plane):
        plane = Plane(*plane)
    point = np.asarray(point, dtype=float)
    distance = (point - plane.point) @ plane.normal
    return point - 2 * distance * plane.normal


def _make_path(vertices: Sequence[np.ndarray], surfaces: Sequence[Facet], wavelength: float) -> PathRecord:
    vertices = [np.asarray(v, dtype=float) for v in vertices]
    length = sum(float(np.linalg.norm(b - a)) for a, b in zip(vertices[:-1], vertices[1:]))
    gain = wavelength / (4 * np.pi * length)
    for facet in surfaces:
        gain *= facet.gamma
    aod = direction_angles(vertices[1] - vertices[0])
    aoa = direction_angles(vertices[-2] - vertices[-1])
    return PathRecord(
        order=len(surfaces),
        gain=float(gain),
        delay=length / SPEED_OF_LIGHT,
        aod_azimuth=aod[0],
        aod_elevation=aod[1],
        aoa_azimuth=aoa[0],
        aoa_elevation=aoa[1],
        reflection_points=tuple(tuple(float(c) for c in v) for v in vertices[1:-1]),
        origin=tuple(float(c) for c in vertices[0]),
        destination=tuple(float(c) for c in vertices[-1]),
        surfaces=tuple(f.name for f in surfaces),
    )


def los_path(scene: Scene, tx: str, rx: str) -> PathRecord:
    """Closed-form direct path between two nodes (occlusion not checked)."""
    return _make_path([scene.node(tx).origin, scene.node(rx).origin], [], scene.wavelength)


def _segment_blocked(scene: Scene, start: np.ndarray, end: np.ndarray, exclude: Iterable[str]) -> bool:
    skip = set(exclude)
    return any(f.segment_hit(start, end) is not None for f in scene.surfaces if f.name not in skip)


def validate_path(candidate: PathRecord, scene: Scene) -> bool:
    """True iff every reflection point lies on its facet and no segment is occluded."""
    vertices = candidate.vertices
    try:
        reflectors = [scene.surface(name) for name in candidate.surfaces]
    except InvalidArgumentError:
        return False
    if len(reflectors) != len(vertices) - 2:
        return False
    for facet, point in zip(reflectors, vertices[1:-1]):
        if not facet.contains(point):
            return False
    for k in range(len(vertices) - 1):
        exclude = [reflectors[i].name for i in (k - 1, k) if 0 <= i < len(reflectors)]
        if _segment_blocked(scene, vertices[k], vertices[k + 1], exclude):
            return False
    return True


def _plane_crossing(start: np.ndarray, end: np.ndarray, facet: Facet) -> Optional[np.ndarray]:
    plane = facet.plane
    direction = end - start
    denom = direction @ plane.normal
    if abs(denom) < 1e-15:
        return None
    t = ((plane.point - start) @ plane.normal) / denom
    if not _SEGMENT_EPS < t < 1 - _SEGMENT_EPS:
        return None
    return start + t * direction


def _image_path(tx: np.ndarray, rx: np.ndarray, sequence: Sequence[Facet]) -> Optional[List[np.ndarray]]:
    """Vertices of the specular path through ``sequence``, or None if it does not exist."""
    images = [tx]
    for facet in sequence:
        images.append(mirror_point(images[-1], facet.plane))
    points = []
    target = rx
    for depth in range(len(sequence), 0, -1):
        point = _plane_crossing(images[depth], target, sequence[depth - 1])
        if point is None:
            return None
        points.append(point)
        target = point
    return [tx, *reversed(points), rx]


def trace_paths(scene: Scene, tx: str, rx: str, max_order: int = 1) -> List[PathRecord]:
    """LoS plus specular paths up to ``max_order`` reflections, sorted by delay."""
    if tx == rx:
        raise InvalidArgumentError("transmitter and receiver must differ")
    if max_order < 0:
        raise InvalidArgumentError(f"max_order must be >= 0, got {max_order}")
    if max_order > MAX_SUPPORTED_ORDER:
        raise UnsupportedOrderError(f"reflection order {max_order} > supported {MAX_SUPPORTED_ORDER}")

    p_tx, p_rx = scene.node(tx).origin, scene.node(rx).origin
    wavelength = scene.wavelength
    paths = []

    direct = los_path(scene, tx, rx)
    if validate_path(direct, scene):
        paths.append(direct)

    reflectors = [f for f in scene.surfaces if f.gamma > 0]
    for order in range(1, max_order + 1):
        for sequence in itertools.product(reflectors, repeat=order):
            if any(a is b for a, b in zip(sequence[:-1], sequence[1:])):
                continue
            vertices = _image_path(p_tx, p_rx, sequence)
            if vertices is None:
                continue
            candidate = _make_path(vertices, sequence, wavelength)
            if validate_path(candidate, scene):
                paths.append(candidate)

    paths.sort(key=lambda p: (p.delay, p.order, p.surfaces))
    logger.debug(f"Traced {len(paths)} paths {tx} -> {rx} (max_order={max_order})")
    return paths


def path_table(paths: Sequence[PathRecord]) -> List[dict]:
    """Rows of a path table: type, AoA azimuth/elevation (deg), delay (ns), gain (dB), surfaces."""
    rows = []
    for number, path in enumerate(paths, start=1):
        rows.append(
            {
                "path": number,
                "type": "LoS" if path.order == 0 else "NLoS",
                "order": path.order,
                "aoa_azimuth_deg": float(np.degrees(path.aoa_azimuth)),
                "aoa_elevation_deg": float(np.degrees(path.aoa_elevation)),
                "aod_azimuth_deg": float(np.degrees(path.aod_azimuth)),
                "aod_elevation_deg": float(np.degrees(path.aod_elevation)),
                "delay_ns": path.delay * 1e9,
                "gain_db": 20 * float(np.log10(path.gain)),
                "surfaces": "+".join(path.surfaces),
            }
        )
    return rows
