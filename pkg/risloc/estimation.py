"""MUSIC direction-of-arrival estimation at the UE.

Spectra are evaluated over [0, pi] in the UE's local frame: the patch antenna
does not receive from its back half-plane, and a ULA cannot tell the two
half-planes apart anyway.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.signal import find_peaks

from risloc.arrays import ArraySpec, steering_matrix, wrap_angle
from risloc.channel import Frame
from risloc.errors import InvalidArgumentError, NoPeakError, NumericalDegeneracyError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_GRID_STEP = np.radians(0.1)
REFINE_MODES = ("parabolic", "null", "none")


@dataclass(frozen=True, eq=False)
class Covariance:
    matrix: np.ndarray
    n_snapshots: int

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"covariance must be square, got {matrix.shape}")
        scale = linalg.norm(matrix)
        if linalg.norm(matrix - matrix.conj().T) > 1e-10 * scale:
            raise NumericalDegeneracyError("covariance is not Hermitian")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: np.ndarray
    values: np.ndarray
    grid_step: float

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.values))


def sample_covariance(frame: Union[Frame, np.ndarray]) -> Covariance:
    """R = (1/N_s) sum_n r[n] r[n]^H."""
    samples = frame.samples if isinstance(frame, Frame) else np.atleast_2d(np.asarray(frame, dtype=complex))
    n_antennas, n_samples = samples.shape
    if n_samples == 0 or n_antennas == 0:
        raise InvalidArgumentError("cannot estimate a covariance from an empty frame")
    if n_samples < n_antennas:
        logger.warning(f"⚠️ Only {n_samples} snapshots for {n_antennas} antennas; covariance is rank deficient")
    r = samples @ samples.conj().T / n_samples
    return Covariance((r + r.conj().T) / 2, n_samples)


def _noise_subspace(matrix: np.ndarray, n_sources: int) -> np.ndarray:
    eigenvalues, eigenvectors = linalg.eigh(matrix)
    if not np.all(np.isfinite(eigenvalues)):
        raise NumericalDegeneracyError("covariance eigenvalues are not finite")
    largest = np.max(np.abs(eigenvalues))
    if largest > 0 and eigenvalues.min() < -1e-10 * largest:
        raise NumericalDegeneracyError(f"covariance is not positive semi-definite (min eigenvalue {eigenvalues.min():.3e})")
    # Descending magnitude, ties by ascending index.
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvectors[:, order[n_sources:]]


def dominance_ratio(cov: Covariance) -> float:
    """Largest eigenvalue over the mean of the others; near 1 when the frame is noise only."""
    eigenvalues = np.clip(linalg.eigvalsh(cov.matrix), 0.0, None)
    if cov.n_antennas < 2 or eigenvalues[-1] == 0:
        return 0.0
    rest = max(float(np.mean(eigenvalues[:-1])), np.finfo(float).tiny)
    return float(eigenvalues[-1]) / rest


def music_spectrum(
    cov: Covariance, rx_spec: ArraySpec, n_sources: int = 1, grid_step: float = DEFAULT_GRID_STEP
) -> Spectrum:
    """P(phi) = 1 / (a^H E_n E_n^H a) on a grid over [0, pi] in the UE local frame."""
    if cov.n_antennas != rx_spec.size:
        raise ShapeError(f"covariance is {cov.n_antennas}x{cov.n_antennas}, array has {rx_spec.size} elements")
    if not 1 <= n_sources < rx_spec.size:
        raise InvalidArgumentError(f"n_sources must be in [1, {rx_spec.size - 1}], got {n_sources}")
    if not grid_step > 0:
        raise InvalidArgumentError(f"grid step must be positive, got {grid_step}")

    noise = _noise_subspace(cov.matrix, n_sources)
    n_points = int(round(np.pi / grid_step)) + 1
    grid = np.linspace(0.0, np.pi, n_points)
    projection = noise.conj().T @ steering_matrix(rx_spec, grid, 0.0, 1.0)
    denominator = np.sum(np.abs(projection) ** 2, axis=0)
    values = 1.0 / np.maximum(denominator, np.finfo(float).tiny)
    return Spectrum(grid, values, float(grid[1] - grid[0]))


def _vertex_offset(left: float, centre: float, right: float, maximum: bool) -> Optional[float]:
    curvature = left - 2 * centre + right
    if (maximum and curvature >= 0) or (not maximum and curvature <= 0):
        return None
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def pick_peak(
    spectrum: Spectrum, exclude: Optional[Tuple[float, float]] = None, refine: str = "null"
) -> float:
    """Azimuth of the spectrum maximum, optionally ignoring a window around an angle.

    ``exclude`` is (angle, halfwidth) in radians. ``refine`` fits a parabola
    through the three points around the discrete peak: on the values
    ("parabolic"), on the null spectrum 1/P ("null"), or not at all ("none").
    """
    if refine not in REFINE_MODES:
        raise InvalidArgumentError(f"refine must be one of {REFINE_MODES}, got {refine!r}")
    values = np.asarray(spectrum.values, dtype=float)
    if values.size == 0:
        raise NoPeakError("empty spectrum")
    allowed = np.ones(values.size, dtype=bool)
    if exclude is not None:
        angle, halfwidth = exclude
        allowed &= np.abs(wrap_angle(spectrum.grid - angle)) > halfwidth
    if not np.any(allowed):
        raise NoPeakError("exclusion window covers the whole spectrum")

    k = int(np.argmax(np.where(allowed, values, -np.inf)))
    azimuth = float(spectrum.grid[k])
    if refine == "none" or k == 0 or k == values.size - 1 or not (allowed[k - 1] and allowed[k + 1]):
        return azimuth

    if refine == "parabolic":
        offset = _vertex_offset(values[k - 1], values[k], values[k + 1], maximum=True)
    else:
        nulls = 1.0 / values[k - 1 : k + 2]
        offset = _vertex_offset(nulls[0], nulls[1], nulls[2], maximum=False)
    if offset is None:
        return azimuth
    return azimuth + offset * float(spectrum.grid[k + 1] - spectrum.grid[k])


def spectrum_peaks(spectrum: Spectrum, count: int) -> np.ndarray:
    """Grid azimuths of the ``count`` highest local maxima, ascending."""
    indices, _ = find_peaks(spectrum.values)
    if indices.size < count:
        raise NoPeakError(f"spectrum has {indices.size} local maxima, {count} requested")
    strongest = indices[np.argsort(spectrum.values[indices])[::-1][:count]]
    return np.sort(spectrum.grid[strongest])


def dump_spectrum(spectrum: Spectrum, path) -> Path:
    path = Path(path)
    pd.DataFrame({"azimuth_deg": np.degrees(spectrum.grid), "value": spectrum.values}).to_csv(path, index=False)
    logger.debug(f"Spectrum with {spectrum.grid.size} points written to {path}")
    return path
