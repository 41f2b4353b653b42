"""RIS power pattern, MRT configurations, 1-bit quantization and codebooks.

RIS angles are in the RIS local frame. Element spacing is expressed in
wavelengths, so responses here do not depend on the carrier; ``wavelength``
defaults to 1.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from risloc.arrays import ArraySpec, array_response, steering_matrix, wrap_angle
from risloc.errors import InvalidArgumentError, ScenarioError, ShapeError

logger = logging.getLogger(__name__)

AnglePair = Tuple[float, float]
HALF_PI = np.pi / 2


class BitDepth(str, Enum):
    CONTINUOUS = "continuous"
    ONE_BIT = "one_bit"


@dataclass(frozen=True, eq=False)
class RISConfig:
    phases: np.ndarray
    bit_depth: BitDepth = BitDepth.CONTINUOUS
    target_azimuth: float = float("nan")
    target_elevation: float = 0.0

    def __post_init__(self):
        phases = np.array(self.phases, dtype=float).ravel()
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "bit_depth", BitDepth(self.bit_depth))
        if self.bit_depth is BitDepth.ONE_BIT and not np.all(np.isclose(np.abs(phases), HALF_PI, atol=1e-12)):
            raise InvalidArgumentError("one-bit configurations only take phases -pi/2 and +pi/2")

    @property
    def size(self) -> int:
        return self.phases.size

    @property
    def weights(self) -> np.ndarray:
        """omega = exp(j theta), one unit-modulus weight per element."""
        return np.exp(1j * self.phases)

    def __eq__(self, other):
        if not isinstance(other, RISConfig):
            return NotImplemented
        return (
            self.bit_depth is other.bit_depth
            and np.array_equal(self.phases, other.phases)
            and np.array_equal([self.target_azimuth, self.target_elevation], [other.target_azimuth, other.target_elevation], equal_nan=True)
        )


@dataclass(frozen=True)
class Codebook:
    entries: Tuple[RISConfig, ...]
    angle_step: float
    incidence: AnglePair
    elevations: Tuple[float, ...] = field(default=(0.0,))

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise InvalidArgumentError("a codebook needs at least one entry")
        depths = {e.bit_depth for e in self.entries}
        if len(depths) != 1:
            raise InvalidArgumentError("codebook entries must share one bit depth")
        for elevation in self.elevations:
            row = [e.target_azimuth for e in self.entries if np.isclose(e.target_elevation, elevation)]
            if len(row) > 1 and not np.allclose(np.diff(row), self.angle_step, atol=1e-9):
                raise InvalidArgumentError("codebook azimuths must form a strictly increasing grid")

    @property
    def bit_depth(self) -> BitDepth:
        return self.entries[0].bit_depth

    @property
    def target_azimuths(self) -> np.ndarray:
        return np.array([e.target_azimuth for e in self.entries])

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> RISConfig:
        return self.entries[index]


def _check_size(config: RISConfig, ris_spec: ArraySpec):
    if config.size != ris_spec.size:
        raise ShapeError(f"configuration has {config.size} phases, RIS has {ris_spec.size} elements")


def power_pattern(
    config: RISConfig,
    reflect_azimuth: float,
    reflect_elevation: float,
    incidence: AnglePair,
    ris_spec: ArraySpec,
    wavelength: float = 1.0,
) -> float:
    """A(phi, theta) = |omega^T (a(incidence) . a*(phi, theta))|^2."""
    _check_size(config, ris_spec)
    a_in = array_response(ris_spec, incidence[0], incidence[1], wavelength)
    a_out = array_response(ris_spec, reflect_azimuth, reflect_elevation, wavelength)
    return float(np.abs(config.weights @ (a_in * a_out.conj())) ** 2)


def pattern_table(
    codebook: Codebook, azimuths: Sequence[float], ris_spec: ArraySpec, elevation: float = 0.0
) -> np.ndarray:
    """Power pattern of every entry at every azimuth, shape (len(codebook), len(azimuths))."""
    a_in = array_response(ris_spec, codebook.incidence[0], codebook.incidence[1], 1.0)
    reflected = a_in[:, None] * steering_matrix(ris_spec, azimuths, elevation, 1.0).conj()
    weights = np.stack([e.weights for e in codebook.entries])
    return np.abs(weights @ reflected) ** 2


def mrt_config(incidence: AnglePair, target: AnglePair, ris_spec: ArraySpec) -> RISConfig:
    """omega^T = (a(incidence) . a*(target))^H, which attains N^2 at the target."""
    v = array_response(ris_spec, incidence[0], incidence[1], 1.0) * array_response(
        ris_spec, target[0], target[1], 1.0
    ).conj()
    return RISConfig(np.angle(v.conj()), BitDepth.CONTINUOUS, float(target[0]), float(target[1]))


def quantize_config(config: RISConfig) -> RISConfig:
    """Map each phase to the nearer of -pi/2 and +pi/2 on the circle; ties go to +pi/2."""
    quantized = np.where(np.sin(config.phases) >= 0, HALF_PI, -HALF_PI)
    return RISConfig(quantized, BitDepth.ONE_BIT, config.target_azimuth, config.target_elevation)


def negate_config(config: RISConfig) -> RISConfig:
    """-Phi: every weight multiplied by -1."""
    if config.bit_depth is BitDepth.ONE_BIT:
        phases = -config.phases
    else:
        phases = np.atleast_1d(wrap_angle(config.phases + np.pi))
    return RISConfig(phases, config.bit_depth, config.target_azimuth, config.target_elevation)


def onoff_base_config(n_elements: int) -> RISConfig:
    """Phi^1: every element at +pi/2 (weight j)."""
    return RISConfig(np.full(n_elements, HALF_PI), BitDepth.ONE_BIT)


def build_codebook(
    incidence: AnglePair,
    azimuth_range: Tuple[float, float],
    angle_step: float,
    ris_spec: ArraySpec,
    bit_depth: BitDepth = BitDepth.ONE_BIT,
    elevations: Sequence[float] = (0.0,),
) -> Codebook:
    """One MRT entry per grid azimuth (and per elevation for a 2-D codebook)."""
    low, high = azimuth_range
    if not angle_step > 0:
        raise InvalidArgumentError(f"angle step must be positive, got {angle_step}")
    if not high >= low:
        raise InvalidArgumentError(f"empty azimuth range [{low}, {high}]")
    if low < 0 or high > np.pi:
        raise InvalidArgumentError("codebook azimuths must stay in the RIS front halfspace [0, pi]")
    bit_depth = BitDepth(bit_depth)

    n_angles = int(np.floor((high - low) / angle_step + 1e-9)) + 1
    azimuths = low + angle_step * np.arange(n_angles)
    entries = []
    for elevation in elevations:
        for azimuth in azimuths:
            entry = mrt_config(incidence, (float(azimuth), float(elevation)), ris_spec)
            if bit_depth is BitDepth.ONE_BIT:
                entry = quantize_config(entry)
            entries.append(entry)

    logger.debug(f"Built {bit_depth.value} codebook with {len(entries)} entries for {ris_spec.size} elements")
    return Codebook(tuple(entries), float(angle_step), (float(incidence[0]), float(incidence[1])), tuple(elevations))


def export_codebook(codebook: Codebook, path) -> Path:
    """Write a codebook as JSON: one-bit phases as +/-1 signs, continuous phases in radians."""
    path = Path(path)
    entries = []
    for entry in codebook.entries:
        item = {
            "target_azimuth_deg": float(np.degrees(entry.target_azimuth)),
            "target_elevation_deg": float(np.degrees(entry.target_elevation)),
        }
        if codebook.bit_depth is BitDepth.ONE_BIT:
            item["signs"] = [1 if p > 0 else -1 for p in entry.phases]
        else:
            item["phases"] = entry.phases.tolist()
        entries.append(item)
    payload = {
        "schema": 1,
        "bit_depth": codebook.bit_depth.value,
        "angle_step_deg": float(np.degrees(codebook.angle_step)),
        "incidence_deg": [float(np.degrees(a)) for a in codebook.incidence],
        "elevations_deg": [float(np.degrees(e)) for e in codebook.elevations],
        "entries": entries,
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
    return path


def import_codebook(path) -> Codebook:
    with open(path, "r") as f:
        data = json.load(f)
    try:
        bit_depth = BitDepth(data["bit_depth"])
        entries = []
        for item in data["entries"]:
            if bit_depth is BitDepth.ONE_BIT:
                phases = HALF_PI * np.asarray(item["signs"], dtype=float)
            else:
                phases = np.asarray(item["phases"], dtype=float)
            entries.append(
                RISConfig(
                    phases,
                    bit_depth,
                    float(np.radians(item["target_azimuth_deg"])),
                    float(np.radians(item.get("target_elevation_deg", 0.0))),
                )
            )
        return Codebook(
            tuple(entries),
            float(np.radians(data["angle_step_deg"])),
            tuple(float(np.radians(a)) for a in data["incidence_deg"]),
            tuple(float(np.radians(e)) for e in data.get("elevations_deg", [0.0])),
        )
    except (KeyError, ValueError) as e:
        raise ScenarioError(f"malformed codebook file {path}: {e}")
