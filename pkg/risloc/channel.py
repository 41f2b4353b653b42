"""Discrete-time MIMO channels built from traced paths, and the received-signal model.

``RisLink`` ties the pieces together: it is the measurement callable the
protocol drives, returning the UE's received frame for one RIS configuration.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from risloc.arrays import SPEED_OF_LIGHT, ArraySpec, array_response, to_local_azimuth
from risloc.errors import EmptyChannelError, InvalidArgumentError, ShapeError
from risloc.geometry import PathRecord
from risloc.ris import RISConfig

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 122.88e6
DEFAULT_PILOT_SAMPLES = 256
FRACTIONAL_DELAY_HALF_LENGTH = 8

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


@dataclass(frozen=True, eq=False)
class ChannelTaps:
    taps: np.ndarray
    sample_rate: float
    carrier_frequency: float
    first_tap_delay: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        if taps.ndim != 3 or taps.shape[2] < 1:
            raise ShapeError(f"taps must have shape (n_rx, n_tx, n_taps>=1), got {taps.shape}")
        if not self.sample_rate > 0:
            raise InvalidArgumentError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(taps)):
            raise InvalidArgumentError("channel taps contain NaN or Inf")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_taps(self) -> int:
        return self.taps.shape[2]


@dataclass(frozen=True, eq=False)
class Frame:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if samples.ndim != 2 or samples.shape[1] < 1:
            raise ShapeError(f"frame must be (n_antennas, n_samples>=1), got {samples.shape}")
        object.__setattr__(self, "samples", samples)

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    @property
    def mean_power(self) -> float:
        """Mean received power per sample, ||r||^2 / N_s."""
        return self.energy / self.n_samples


def _check_rates(a: float, b: float):
    if not np.isclose(a, b, rtol=1e-12, atol=0.0):
        raise ShapeError(f"sample rate mismatch: {a} vs {b}")


def _padded(samples: np.ndarray, length: int) -> np.ndarray:
    if samples.shape[1] >= length:
        return samples
    return np.pad(samples, ((0, 0), (0, length - samples.shape[1])))


def add_frames(a: Frame, b: Frame, sign: float = 1.0) -> Frame:
    """Elementwise a + sign * b, zero-padding the shorter frame at the end."""
    if a.n_antennas != b.n_antennas:
        raise ShapeError(f"antenna count mismatch: {a.n_antennas} vs {b.n_antennas}")
    _check_rates(a.sample_rate, b.sample_rate)
    length = max(a.n_samples, b.n_samples)
    return Frame(_padded(a.samples, length) + sign * _padded(b.samples, length), a.sample_rate)


def _fractional_taps(offset: float, half_length: int) -> np.ndarray:
    n = np.arange(2 * half_length + 1)
    x = n - half_length - offset
    return np.sinc(x) * np.hanning(2 * half_length + 3)[1:-1]


def synthesize_channel(
    paths: Sequence[PathRecord],
    tx_spec: ArraySpec,
    rx_spec: ArraySpec,
    fc: float,
    fs: float,
    fractional_delay: bool = False,
) -> ChannelTaps:
    """H[n] = sum_l beta_{l,n} alpha_l exp(-j 2 pi tau_l fc) a_rx a_tx^H.

    Path angles are global; they are rotated into each array's local frame here.
    """
    if not paths:
        raise EmptyChannelError("cannot synthesize a channel from an empty path list")
    if not fs > 0:
        raise InvalidArgumentError(f"sample rate must be positive, got {fs}")
    wavelength = SPEED_OF_LIGHT / fc
    tau_min = min(p.delay for p in paths)
    positions = [(p.delay - tau_min) * fs for p in paths]

    half = FRACTIONAL_DELAY_HALF_LENGTH if fractional_delay else 0
    n_taps = int(round(max(positions))) + 1 + 2 * half
    taps = np.zeros((rx_spec.size, tx_spec.size, n_taps), dtype=complex)
    for path, position in zip(paths, positions):
        a_rx = array_response(rx_spec, to_local_azimuth(path.aoa_azimuth, rx_spec.pose), path.aoa_elevation, wavelength)
        a_tx = array_response(tx_spec, to_local_azimuth(path.aod_azimuth, tx_spec.pose), path.aod_elevation, wavelength)
        rank_one = path.gain * np.exp(-2j * np.pi * path.delay * fc) * np.outer(a_rx, a_tx.conj())
        if fractional_delay:
            base = int(np.floor(position))
            weights = _fractional_taps(position - base, half)
            taps[:, :, base : base + weights.size] += rank_one[:, :, None] * weights
        else:
            taps[:, :, int(round(position))] += rank_one

    return ChannelTaps(taps, fs, fc, tau_min - half / fs)


def apply_channel(h: ChannelTaps, x: Frame) -> Frame:
    """Per-tap matrix convolution; output has n_samples + n_taps - 1 columns."""
    if x.n_antennas != h.n_tx:
        raise ShapeError(f"frame has {x.n_antennas} antennas, channel expects {h.n_tx}")
    _check_rates(h.sample_rate, x.sample_rate)
    out = np.zeros((h.n_rx, x.n_samples + h.n_taps - 1), dtype=complex)
    for k in range(h.n_taps):
        tap = h.taps[:, :, k]
        if not np.any(tap):
            continue
        out[:, k : k + x.n_samples] += tap @ x.samples
    return Frame(out, x.sample_rate)


def cascade_through_ris(h1: ChannelTaps, config: RISConfig, h2: ChannelTaps, x: Frame) -> Frame:
    """r_RIS = H2 * (Phi (H1 * x)) with a single-tap RIS."""
    if not (h1.n_rx == config.size == h2.n_tx):
        raise ShapeError(f"RIS size mismatch: H1 rows {h1.n_rx}, config {config.size}, H2 columns {h2.n_tx}")
    illuminated = apply_channel(h1, x)
    return apply_channel(h2, Frame(config.weights[:, None] * illuminated.samples, x.sample_rate))


def add_awgn(
    x: Frame, snr_db: float, seed: SeedLike, noise_power: Optional[float] = None
) -> Frame:
    """Add circularly-symmetric complex Gaussian noise.

    The per-sample variance is mean signal power / 10^(snr_db/10), unless
    ``noise_power`` fixes it explicitly. ``snr_db = inf`` disables noise.
    """
    if np.isnan(snr_db):
        raise InvalidArgumentError("snr_db must not be NaN")
    if np.isposinf(snr_db):
        return Frame(x.samples.copy(), x.sample_rate)
    if noise_power is None:
        noise_power = float(np.mean(np.abs(x.samples) ** 2)) / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(x.samples.shape) + 1j * rng.standard_normal(x.samples.shape)
    return Frame(x.samples + np.sqrt(noise_power / 2) * noise, x.sample_rate)


def combine_received(r_ris: Frame, r_d: Frame, delay_ris: float, delay_d: float, fs: float) -> Frame:
    """Place both frames on a common time axis starting at the earlier arrival, and sum them."""
    if delay_ris < 0 or delay_d < 0:
        raise InvalidArgumentError(f"delays must be non-negative, got {delay_ris} and {delay_d}")
    if r_ris.n_antennas != r_d.n_antennas:
        raise ShapeError(f"antenna count mismatch: {r_ris.n_antennas} vs {r_d.n_antennas}")
    _check_rates(r_ris.sample_rate, fs)
    _check_rates(r_d.sample_rate, fs)
    shift_ris, shift_d = int(round(delay_ris * fs)), int(round(delay_d * fs))
    base = min(shift_ris, shift_d)
    shift_ris, shift_d = shift_ris - base, shift_d - base
    length = max(shift_ris + r_ris.n_samples, shift_d + r_d.n_samples)
    out = np.zeros((r_ris.n_antennas, length), dtype=complex)
    out[:, shift_ris : shift_ris + r_ris.n_samples] += r_ris.samples
    out[:, shift_d : shift_d + r_d.n_samples] += r_d.samples
    return Frame(out, fs)


def make_pilot(beamformer: np.ndarray, n_samples: int, sample_rate: float, seed: SeedLike) -> Frame:
    """Unit-modulus QPSK pilot symbols sent through a transmit beamformer."""
    if n_samples < 1:
        raise InvalidArgumentError(f"pilot needs at least one sample, got {n_samples}")
    rng = np.random.default_rng(seed)
    symbols = np.exp(1j * (np.pi / 4 + (np.pi / 2) * rng.integers(0, 4, size=n_samples)))
    return Frame(np.outer(np.asarray(beamformer, dtype=complex), symbols), sample_rate)


class RisLink:
    """Measurement model for one AP / RIS / UE placement.

    Sample 0 of every measured frame is the arrival of the first AP->RIS path at
    the RIS. Both the RIS component and the direct component are placed at the
    floor of their delay relative to that epoch; direct samples arriving earlier
    fall outside the receive window.
    """

    def __init__(
        self,
        h1: ChannelTaps,
        h2: ChannelTaps,
        pilot: Frame,
        hd: Optional[ChannelTaps] = None,
        snr_db: float = np.inf,
        seed: int = 0,
    ):
        if h1.n_rx != h2.n_tx:
            raise ShapeError(f"H1 feeds {h1.n_rx} RIS elements but H2 reads {h2.n_tx}")
        if hd is not None and (hd.n_rx != h2.n_rx or hd.n_tx != h1.n_tx):
            raise ShapeError("direct channel dimensions do not match the RIS link")
        if np.isnan(snr_db):
            raise InvalidArgumentError("snr_db must not be NaN")
        self.h1, self.h2, self.hd = h1, h2, hd
        self.pilot = pilot
        self.snr_db = snr_db
        self.seed = seed
        self.noise_power: Optional[float] = None
        self.fs = pilot.sample_rate
        self._calls = 0

        # H1 * x does not depend on the RIS configuration.
        self._illumination = apply_channel(h1, pilot)
        self._ris_offset = int(np.floor(h2.first_tap_delay * self.fs))
        self._length = self._ris_offset + self._illumination.n_samples + h2.n_taps - 1
        self._direct = None
        if hd is not None:
            direct = apply_channel(hd, pilot)
            offset = int(np.floor((hd.first_tap_delay - h1.first_tap_delay) * self.fs))
            self._length = max(self._length, offset + direct.n_samples)
            self._direct = _place(direct, offset, self._length)

    @property
    def n_elements(self) -> int:
        return self.h1.n_rx

    @property
    def n_samples(self) -> int:
        return self._length

    @property
    def calls(self) -> int:
        return self._calls

    def ris_component(self, config: RISConfig) -> Frame:
        """H2 * (Phi (H1 * x)) before placement on the receive axis."""
        if config.size != self.n_elements:
            raise ShapeError(f"config has {config.size} elements, RIS has {self.n_elements}")
        reflected = Frame(config.weights[:, None] * self._illumination.samples, self.fs)
        return apply_channel(self.h2, reflected)

    def ris_only(self, config: RISConfig) -> Frame:
        return _place(self.ris_component(config), self._ris_offset, self._length)

    def direct_only(self) -> Frame:
        if self._direct is None:
            return Frame(np.zeros((self.h2.n_rx, self._length), dtype=complex), self.fs)
        return self._direct

    def noiseless(self, config: RISConfig) -> Frame:
        """r_RIS + r_d on the receive axis, without noise."""
        return add_frames(self.ris_only(config), self.direct_only())

    def calibrate_noise(self, reference: RISConfig) -> float:
        """Fix the noise power so the reference configuration sees the link SNR."""
        if np.isposinf(self.snr_db):
            self.noise_power = 0.0
        else:
            self.noise_power = self.ris_component(reference).mean_power / 10 ** (self.snr_db / 10)
        logger.debug(f"Noise power calibrated to {self.noise_power:.3e} at {self.snr_db} dB")
        return self.noise_power

    def measure(self, config: RISConfig) -> Frame:
        """r_tot for one configuration; every call draws fresh, seeded noise."""
        frame = self.noiseless(config)
        self._calls += 1
        if np.isposinf(self.snr_db) or self.noise_power == 0.0:
            return frame
        return add_awgn(frame, self.snr_db, seed=[self.seed, self._calls], noise_power=self.noise_power)

    __call__ = measure


def _place(frame: Frame, offset: int, length: int) -> Frame:
    """Put ``frame`` at sample ``offset`` of a zero frame of ``length`` samples, cropping what falls outside."""
    out = np.zeros((frame.n_antennas, length), dtype=complex)
    src, dst = max(0, -offset), max(0, offset)
    count = min(frame.n_samples - src, length - dst)
    if count > 0:
        out[:, dst : dst + count] = frame.samples[:, src : src + count]
    return Frame(out, frame.sample_rate)


def dump_taps(h: ChannelTaps, path) -> Path:
    """Write channel taps to JSON for inspection."""
    path = Path(path)
    payload = {
        "sample_rate_hz": h.sample_rate,
        "carrier_frequency_hz": h.carrier_frequency,
        "first_tap_delay_s": h.first_tap_delay,
        "shape": list(h.taps.shape),
        "real": h.taps.real.tolist(),
        "imag": h.taps.imag.tolist(),
    }
    with open(path, "w") as f:
        json.dump(payload, f)
    logger.info(f"💾 Channel taps written to {path}")
    return path
