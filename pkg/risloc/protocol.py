"""Positioning and mapping protocol.

One trial runs, in order: codebook design, beam sweep, ON/OFF direct-path
extraction plus MUSIC for the LoS arrival, ToA oracle, UE localisation and,
optionally, LoS cancellation followed by the scatterer mapping loop.

The protocol only ever talks to the radio through a ``simulate`` callable that
maps a ``RISConfig`` to the UE's received frame (``channel.RisLink``).
Ground truth is read from the scene solely to score the estimates.
"""

import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from risloc.arrays import (
    SPEED_OF_LIGHT,
    ArrayKind,
    ArraySpec,
    Pose,
    array_response,
    to_global_azimuth,
    to_local_azimuth,
    unit_direction,
    wrap_angle,
)
from risloc.channel import (
    DEFAULT_PILOT_SAMPLES,
    DEFAULT_SAMPLE_RATE,
    FRACTIONAL_DELAY_HALF_LENGTH,
    ChannelTaps,
    Frame,
    RisLink,
    add_frames,
    apply_channel,
    make_pilot,
    synthesize_channel,
)
from risloc.errors import (
    AlignmentError,
    DegenerateGeometryError,
    EmptyChannelError,
    InvalidArgumentError,
    ProtocolStageError,
    ShapeError,
)
from risloc.estimation import dominance_ratio, music_spectrum, pick_peak, sample_covariance
from risloc.geometry import PathRecord, Scene, los_path, trace_paths
from risloc.ris import BitDepth, Codebook, RISConfig, build_codebook, mrt_config, negate_config, onoff_base_config

logger = logging.getLogger(__name__)

Simulate = Callable[[RISConfig], Frame]
Point = Tuple[float, float, float]

SCATTERER_ELEVATION_LIMIT = np.radians(1.0)


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters of one protocol trial. Angles in radians."""

    bit_depth: BitDepth = BitDepth.ONE_BIT
    use_music: bool = True
    mapping: bool = False
    snr_db: float = 20.0
    n_pilots: int = DEFAULT_PILOT_SAMPLES
    sample_rate: float = DEFAULT_SAMPLE_RATE
    codebook_step: float = np.radians(2.0)
    codebook_range: Tuple[float, float] = (np.radians(10.0), np.radians(170.0))
    music_grid_step: float = np.radians(0.1)
    toa_sigma: float = 0.0
    rejection_threshold: float = np.radians(4.0)
    merge_radius: float = 0.3
    min_relative_power: float = 0.1
    detection_ratio: float = 4.0
    min_nlos_fraction: float = 0.5
    max_order: int = 1
    fractional_delay: bool = False
    seed: int = 0
    ap_spec: ArraySpec = field(default_factory=lambda: ArraySpec(ArrayKind.ULA, 4))
    ris_spec: ArraySpec = field(default_factory=lambda: ArraySpec(ArrayKind.URA, 32, 32))
    ue_spec: ArraySpec = field(default_factory=lambda: ArraySpec(ArrayKind.ULA, 8))

    def __post_init__(self):
        object.__setattr__(self, "bit_depth", BitDepth(self.bit_depth))
        if self.n_pilots < 1:
            raise InvalidArgumentError(f"n_pilots must be >= 1, got {self.n_pilots}")
        if self.toa_sigma < 0:
            raise InvalidArgumentError(f"toa_sigma must be >= 0, got {self.toa_sigma}")
        if self.merge_radius < 0 or self.rejection_threshold < 0:
            raise InvalidArgumentError("merge radius and rejection threshold must be >= 0")
        if self.ue_spec.kind is not ArrayKind.ULA:
            raise InvalidArgumentError("the UE array must be a ULA (azimuth-only MUSIC)")


@dataclass(frozen=True)
class SweepResult:
    powers: Tuple[float, ...]
    best_index: int
    best_config: RISConfig


@dataclass(frozen=True)
class PositionEstimate:
    """UE estimate. ``azimuth_est`` is the global RIS->UE departure; ``arrival_azimuth`` is UE-local."""

    azimuth_est: float
    arrival_azimuth: float
    range_est: float
    toa_est: float
    position: Point


@dataclass(frozen=True)
class ScattererEstimate:
    position: Point
    beam_azimuth: float
    ue_aoa: float
    codebook_index: int
    power: float = 0.0
    n_merged: int = 1


@dataclass(frozen=True)
class MappingResult:
    scatterer_estimates: Tuple[ScattererEstimate, ...]
    rejected_count: int
    detections: Tuple[ScattererEstimate, ...] = ()


@dataclass(frozen=True, eq=False)
class LosReconstruction:
    h2: ChannelTaps
    h1: ChannelTaps
    pilot: Frame
    # samples each tapped channel starts before its path
    lead: int = 0


@dataclass(frozen=True)
class RunReport:
    """Outcome of one trial. Angles in degrees, positions in meters."""

    trial: int
    seed: int
    ue_true: Point
    ue_est: Optional[Point] = None
    azimuth_true_deg: Optional[float] = None
    azimuth_est_deg: Optional[float] = None
    angle_error_deg: Optional[float] = None
    beam_index: Optional[int] = None
    sweep_powers: Tuple[float, ...] = ()
    scatterers_true: Tuple[Point, ...] = ()
    scatterers_est: Tuple[Point, ...] = ()
    position_errors_m: Tuple[float, ...] = ()
    rejected_count: int = 0
    spurious_count: int = 0
    mode: str = ""
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        def point(value):
            return None if value is None else tuple(float(v) for v in value)

        return cls(
            trial=int(data["trial"]),
            seed=int(data["seed"]),
            ue_true=point(data["ue_true"]),
            ue_est=point(data.get("ue_est")),
            azimuth_true_deg=data.get("azimuth_true_deg"),
            azimuth_est_deg=data.get("azimuth_est_deg"),
            angle_error_deg=data.get("angle_error_deg"),
            beam_index=data.get("beam_index"),
            sweep_powers=tuple(float(p) for p in data.get("sweep_powers", ())),
            scatterers_true=tuple(point(p) for p in data.get("scatterers_true", ())),
            scatterers_est=tuple(point(p) for p in data.get("scatterers_est", ())),
            position_errors_m=tuple(float(e) for e in data.get("position_errors_m", ())),
            rejected_count=int(data.get("rejected_count", 0)),
            spurious_count=int(data.get("spurious_count", 0)),
            mode=data.get("mode", ""),
            error=data.get("error"),
        )


@contextmanager
def _stage(name: str):
    try:
        yield
    except ProtocolStageError:
        raise
    except Exception as e:
        raise ProtocolStageError(name, e) from e


def beam_sweep(simulate: Simulate, codebook: Codebook) -> SweepResult:
    """Measure ||r_tot||^2 / N_s under every entry and keep the strongest (first on ties)."""
    powers = tuple(simulate(entry).mean_power for entry in codebook.entries)
    best = int(np.argmax(powers))
    logger.debug(f"Sweep picked entry {best} at {np.degrees(codebook[best].target_azimuth):.1f} deg")
    return SweepResult(powers, best, codebook[best])


def onoff_direct_estimate(simulate: Simulate, base_config: RISConfig) -> Tuple[Frame, Frame]:
    """Measure under Phi and -Phi; half the sum is the direct part, half the difference the RIS part."""
    r1 = simulate(base_config)
    r2 = simulate(negate_config(base_config))
    r_sum = add_frames(r1, r2)
    r_diff = add_frames(r1, r2, sign=-1.0)
    return Frame(r_sum.samples / 2, r_sum.sample_rate), Frame(r_diff.samples / 2, r_diff.sample_rate)


def locate_ue(
    beam_azimuth: float,
    music_azimuth: Optional[float],
    toa_est: float,
    ris_pose: Pose,
    ue_yaw: float = 0.0,
) -> PositionEstimate:
    """Place the UE at range c * toa_est from the RIS along the estimated departure.

    ``beam_azimuth`` is RIS-local (the selected codebook target). When
    ``music_azimuth`` (UE-local arrival) is given, the departure is the reverse
    of that arrival; otherwise the beam target is used.
    """
    if not toa_est > 0:
        raise InvalidArgumentError(f"toa_est must be positive, got {toa_est}")
    ue_pose = Pose(yaw=ue_yaw)
    if music_azimuth is None:
        departure = to_global_azimuth(beam_azimuth, ris_pose)
        arrival = to_local_azimuth(departure + np.pi, ue_pose)
    else:
        arrival = float(music_azimuth)
        departure = wrap_angle(to_global_azimuth(arrival, ue_pose) + np.pi)
    range_est = SPEED_OF_LIGHT * toa_est
    position = ris_pose.origin + range_est * unit_direction(departure, 0.0)
    return PositionEstimate(
        azimuth_est=float(departure),
        arrival_azimuth=float(arrival),
        range_est=float(range_est),
        toa_est=float(toa_est),
        position=tuple(float(v) for v in position),
    )


def reconstruct_los(
    estimate: PositionEstimate,
    scene: Scene,
    ap_spec: ArraySpec,
    ris_spec: ArraySpec,
    ue_spec: ArraySpec,
    pilot: Frame,
    fractional_delay: bool = False,
) -> LosReconstruction:
    """Rebuild the LoS terms of H2 (from the estimate) and H1 (from the known AP-RIS geometry).

    H2 = g a_UE(arrival) a_RIS(departure)^H with g = lambda / (4 pi r) exp(-j 2 pi f_c tau).
    Array specs must already be placed at their scene poses. ``fractional_delay``
    must match the setting the measured channels were built with.
    """
    if not estimate.range_est > 0:
        raise InvalidArgumentError(f"range estimate must be positive, got {estimate.range_est}")
    fc, fs = scene.carrier_frequency, pilot.sample_rate
    ris_position = scene.node("ris").origin
    virtual = PathRecord(
        order=0,
        gain=scene.wavelength / (4 * np.pi * estimate.range_est),
        delay=estimate.toa_est,
        aod_azimuth=estimate.azimuth_est,
        aod_elevation=0.0,
        aoa_azimuth=wrap_angle(estimate.azimuth_est + np.pi),
        aoa_elevation=0.0,
        origin=tuple(float(v) for v in ris_position),
        destination=estimate.position,
    )
    h2 = synthesize_channel([virtual], ris_spec, ue_spec, fc, fs, fractional_delay)
    h1 = synthesize_channel([los_path(scene, "ap", "ris")], ap_spec, ris_spec, fc, fs, fractional_delay)
    lead = FRACTIONAL_DELAY_HALF_LENGTH if fractional_delay else 0
    return LosReconstruction(h2, h1, pilot, lead)


def cancel_los(
    r_tot: Frame, config: RISConfig, reconstruction: LosReconstruction, toa_est: float, fs: float
) -> Frame:
    """Subtract H2_LoS * (Phi (H1_LoS * x)), delayed by floor(toa_est * F_s) samples.

    With fractional taps both reconstructed channels start ``lead`` samples
    early, so the product is placed ``lead`` samples before that delay.
    """
    h1, h2 = reconstruction.h1, reconstruction.h2
    if config.size != h1.n_rx:
        raise ShapeError(f"config has {config.size} elements, reconstruction expects {h1.n_rx}")
    delay = int(np.floor(toa_est * fs))
    if delay < 0 or delay >= r_tot.n_samples:
        raise AlignmentError(f"LoS shift of {delay} samples does not fit a {r_tot.n_samples}-sample frame")
    illuminated = apply_channel(h1, reconstruction.pilot)
    r_los = apply_channel(h2, Frame(config.weights[:, None] * illuminated.samples, fs)).samples
    shift = delay - reconstruction.lead
    src, dst = max(0, -shift), max(0, shift)
    count = min(r_los.shape[1] - src, r_tot.n_samples - dst)
    out = r_tot.samples.copy()
    if count > 0:
        out[:, dst : dst + count] -= r_los[:, src : src + count]
    return Frame(out, r_tot.sample_rate)


def _ray_parameters(origin1, azimuth1: float, origin2, azimuth2: float) -> Tuple[float, float]:
    d1 = np.array([np.cos(azimuth1), np.sin(azimuth1)])
    d2 = np.array([np.cos(azimuth2), np.sin(azimuth2)])
    if abs(np.sin(azimuth1 - azimuth2)) <= 1e-9:
        raise DegenerateGeometryError("rays are parallel")
    offset = np.asarray(origin2, dtype=float)[:2] - np.asarray(origin1, dtype=float)[:2]
    t1, t2 = np.linalg.solve(np.column_stack([d1, -d2]), offset)
    return float(t1), float(t2)


def intersect_rays(origin1, azimuth1: float, origin2, azimuth2: float) -> np.ndarray:
    """Crossing point of two lines in the azimuth plane."""
    t1, _ = _ray_parameters(origin1, azimuth1, origin2, azimuth2)
    return np.asarray(origin1, dtype=float)[:2] + t1 * np.array([np.cos(azimuth1), np.sin(azimuth1)])


def _music_arrival(frame: Frame, ue_spec: ArraySpec, grid_step: float) -> float:
    spectrum = music_spectrum(sample_covariance(frame), ue_spec, n_sources=1, grid_step=grid_step)
    return pick_peak(spectrum, refine="null")


def triangulate(
    ris_pose: Pose, beam_azimuth: float, ue_position: Sequence[float], arrival_azimuth: float
) -> Optional[Point]:
    """Crossing of the RIS beam ray (RIS-local azimuth) and the UE arrival ray (global azimuth).

    Returns None when the rays are parallel, cross behind either origin, or the
    point lies behind the RIS. The point takes the RIS height.
    """
    beam = to_global_azimuth(beam_azimuth, ris_pose)
    try:
        t_ris, t_ue = _ray_parameters(ris_pose.origin, beam, ue_position, arrival_azimuth)
    except DegenerateGeometryError:
        return None
    if t_ris <= 0 or t_ue <= 0:
        return None
    point = intersect_rays(ris_pose.origin, beam, ue_position, arrival_azimuth)
    offset = point - ris_pose.origin[:2]
    if not _front(np.arctan2(offset[1], offset[0]), ris_pose, closed=False):
        return None
    return float(point[0]), float(point[1]), float(ris_pose.position[2])


def _merge(detections: Sequence[ScattererEstimate], radius: float) -> List[ScattererEstimate]:
    """Strongest-first clustering; cluster position is the power-weighted mean."""
    clusters: List[List[ScattererEstimate]] = []
    for detection in sorted(detections, key=lambda d: -d.power):
        for cluster in clusters:
            if np.linalg.norm(np.subtract(detection.position, cluster[0].position)) <= radius:
                cluster.append(detection)
                break
        else:
            clusters.append([detection])

    merged = []
    for cluster in clusters:
        weights = np.array([d.power for d in cluster])
        positions = np.array([d.position for d in cluster])
        if weights.sum() > 0:
            centre = weights @ positions / weights.sum()
        else:
            centre = positions.mean(axis=0)
        seed = cluster[0]
        merged.append(
            ScattererEstimate(
                tuple(float(v) for v in centre),
                seed.beam_azimuth,
                seed.ue_aoa,
                seed.codebook_index,
                float(weights.sum()),
                len(cluster),
            )
        )
    return merged


def map_scatterers(
    simulate: Simulate,
    codebook: Codebook,
    ue_estimate: PositionEstimate,
    los_azimuth: float,
    reconstruction: LosReconstruction,
    ris_pose: Pose,
    ue_spec: ArraySpec,
    config: ProtocolConfig = ProtocolConfig(),
) -> MappingResult:
    """Triangulate single-bounce scatterers from the RIS beam ray and the UE arrival ray.

    ``los_azimuth`` is the UE-local LoS arrival. An entry is rejected when LoS
    cancellation removes more than ``1 - min_nlos_fraction`` of its energy, when
    the residual holds no dominant source, when its MUSIC pick lies within the
    rejection threshold of the LoS, or when ``triangulate`` finds no valid crossing.
    """
    base = onoff_base_config(codebook[0].size)
    fs = reconstruction.pilot.sample_rate
    candidates = []
    rejected = 0
    for index, entry in enumerate(codebook.entries):
        r_tot = simulate(entry)
        r_d_est, _ = onoff_direct_estimate(simulate, base)
        residual = add_frames(r_tot, r_d_est, sign=-1.0)
        r_nlos = cancel_los(residual, entry, reconstruction, ue_estimate.toa_est, fs)
        if r_nlos.energy < config.min_nlos_fraction * residual.energy:
            rejected += 1
            continue
        cov = sample_covariance(r_nlos)
        if dominance_ratio(cov) < config.detection_ratio:
            rejected += 1
            continue
        spectrum = music_spectrum(cov, ue_spec, n_sources=1, grid_step=config.music_grid_step)
        arrival = pick_peak(spectrum, refine="null")
        if abs(wrap_angle(arrival - los_azimuth)) <= config.rejection_threshold:
            rejected += 1
            continue

        point = triangulate(ris_pose, entry.target_azimuth, ue_estimate.position, to_global_azimuth(arrival, ue_spec.pose))
        if point is None:
            rejected += 1
            continue
        candidates.append(
            ScattererEstimate(point, float(entry.target_azimuth), float(arrival), index, r_nlos.mean_power)
        )

    detections = []
    if candidates:
        floor = config.min_relative_power * max(c.power for c in candidates)
        detections = [c for c in candidates if c.power >= floor]
        rejected += len(candidates) - len(detections)
    merged = _merge(detections, config.merge_radius)
    logger.debug(f"Mapping: {len(detections)} detections, {len(merged)} scatterers, {rejected} rejected")
    return MappingResult(tuple(merged), rejected, tuple(detections))


def _front(azimuth: float, pose: Pose, closed: bool) -> bool:
    local = to_local_azimuth(azimuth, pose)
    if closed:
        return 0.0 <= local <= np.pi
    return 0.0 < local < np.pi


def ris_paths(scene: Scene, max_order: int) -> Tuple[List[PathRecord], List[PathRecord], List[PathRecord]]:
    """AP->RIS, RIS->UE and AP->UE paths that survive the front-halfspace masks.

    The RIS only reflects into its front half-space and the UE patch antenna
    does not receive from its back half-plane.
    """
    ris, ue = scene.node("ris"), scene.node("ue")
    h1 = [p for p in trace_paths(scene, "ap", "ris", max_order) if _front(p.aoa_azimuth, ris, closed=False)]
    h2 = [
        p
        for p in trace_paths(scene, "ris", "ue", max_order)
        if _front(p.aod_azimuth, ris, closed=False) and _front(p.aoa_azimuth, ue, closed=True)
    ]
    hd = [p for p in trace_paths(scene, "ap", "ue", max_order) if _front(p.aoa_azimuth, ue, closed=True)]
    return h1, h2, hd


def true_scatterers(scene: Scene, rx_paths: Sequence[PathRecord]) -> List[Point]:
    """Reflection points of the mappable RIS->UE paths: single bounce, level, in front of the RIS."""
    ris = scene.node("ris")
    points = []
    for path in rx_paths:
        if path.order != 1 or abs(path.aoa_elevation) >= SCATTERER_ELEVATION_LIMIT:
            continue
        point = path.reflection_points[0]
        azimuth = np.arctan2(point[1] - ris.position[1], point[0] - ris.position[0])
        if _front(azimuth, ris, closed=False):
            points.append(tuple(point))
    return points


def match_scatterers(truth: Sequence[Point], estimates: Sequence[Point]) -> Tuple[Tuple[float, ...], int]:
    """Distance from each true scatterer to its nearest estimate, and the number of estimates nearest to none."""
    if not estimates:
        return (), 0
    if not truth:
        return (), len(estimates)
    distances = np.linalg.norm(np.subtract(np.asarray(truth)[:, None, :], np.asarray(estimates)[None, :, :]), axis=2)
    nearest = np.argmin(distances, axis=1)
    errors = tuple(float(distances[i, j]) for i, j in enumerate(nearest))
    return errors, len(estimates) - len(set(nearest.tolist()))


def build_link(scene: Scene, config: ProtocolConfig, rng_pilot, noise_seed: int) -> Tuple[RisLink, Frame, dict]:
    """Channels, pilot and measurement link for the scene's current UE position."""
    ap_spec = config.ap_spec.at(scene.node("ap"))
    ris_spec = config.ris_spec.at(scene.node("ris"))
    ue_spec = config.ue_spec.at(scene.node("ue"))
    fc, fs = scene.carrier_frequency, config.sample_rate

    p1, p2, pd = ris_paths(scene, config.max_order)
    if not p1 or not p2:
        raise EmptyChannelError("no AP->RIS or RIS->UE path survives the front-halfspace masks")
    h1 = synthesize_channel(p1, ap_spec, ris_spec, fc, fs, config.fractional_delay)
    h2 = synthesize_channel(p2, ris_spec, ue_spec, fc, fs, config.fractional_delay)
    hd = synthesize_channel(pd, ap_spec, ue_spec, fc, fs, config.fractional_delay) if pd else None

    feed = los_path(scene, "ap", "ris")
    aod = to_local_azimuth(feed.aod_azimuth, ap_spec.pose)
    beamformer = array_response(ap_spec, aod, feed.aod_elevation, scene.wavelength) / np.sqrt(ap_spec.size)
    pilot = make_pilot(beamformer, config.n_pilots, fs, rng_pilot)
    link = RisLink(h1, h2, pilot, hd, config.snr_db, noise_seed)
    specs = {"ap": ap_spec, "ris": ris_spec, "ue": ue_spec}
    return link, pilot, {"specs": specs, "rx_paths": p2, "feed": feed}


def run_protocol(scene: Scene, config: ProtocolConfig = ProtocolConfig(), trial: int = 0) -> RunReport:
    """Run one trial at the scene's UE position; per-trial randomness derives from (config.seed, trial)."""
    ris_pose, ue_pose = scene.node("ris"), scene.node("ue")
    pilot_seq, noise_seq, toa_seq = np.random.SeedSequence([config.seed, trial]).spawn(3)

    with _stage("trace"):
        link, pilot, context = build_link(scene, config, pilot_seq, int(noise_seq.generate_state(1)[0]))
        specs = context["specs"]
        feed = context["feed"]
        incidence = (to_local_azimuth(feed.aoa_azimuth, ris_pose), feed.aoa_elevation)
        truth = los_path(scene, "ris", "ue")
        true_departure = truth.aod_azimuth
        link.calibrate_noise(
            mrt_config(incidence, (to_local_azimuth(true_departure, ris_pose), truth.aod_elevation), specs["ris"])
        )

    with _stage("codebook"):
        codebook = build_codebook(
            incidence, config.codebook_range, config.codebook_step, specs["ris"], config.bit_depth
        )

    with _stage("sweep"):
        sweep = beam_sweep(link, codebook)

    music_azimuth = None
    r_d_est = None
    if config.use_music or config.mapping:
        with _stage("onoff"):
            r_d_est, _ = onoff_direct_estimate(link, onoff_base_config(specs["ris"].size))
    if config.use_music:
        with _stage("music"):
            residual = add_frames(link(sweep.best_config), r_d_est, sign=-1.0)
            music_azimuth = _music_arrival(residual, specs["ue"], config.music_grid_step)

    with _stage("toa"):
        rng = np.random.default_rng(toa_seq)
        toa_est = truth.delay + (rng.normal(0.0, config.toa_sigma) if config.toa_sigma > 0 else 0.0)

    with _stage("locate"):
        estimate = locate_ue(sweep.best_config.target_azimuth, music_azimuth, toa_est, ris_pose, ue_pose.yaw)

    angle_error = float(np.degrees(abs(wrap_angle(true_departure - estimate.azimuth_est))))
    scatterers_true = tuple(true_scatterers(scene, context["rx_paths"]))
    scatterers_est: Tuple[Point, ...] = ()
    errors: Tuple[float, ...] = ()
    rejected = spurious = 0
    if config.mapping:
        with _stage("reconstruct"):
            reconstruction = reconstruct_los(
                estimate, scene, specs["ap"], specs["ris"], specs["ue"], pilot, config.fractional_delay
            )
        with _stage("mapping"):
            mapping = map_scatterers(
                link, codebook, estimate, estimate.arrival_azimuth, reconstruction, ris_pose, specs["ue"], config
            )
        scatterers_est = tuple(s.position for s in mapping.scatterer_estimates)
        rejected = mapping.rejected_count
        errors, spurious = match_scatterers(scatterers_true, scatterers_est)

    logger.debug(
        f"Trial {trial}: departure {np.degrees(true_departure):.2f} deg, estimate "
        f"{np.degrees(estimate.azimuth_est):.2f} deg, error {angle_error:.3f} deg, {link.calls} measurements"
    )
    return RunReport(
        trial=trial,
        seed=config.seed,
        ue_true=tuple(float(v) for v in ue_pose.position),
        ue_est=estimate.position,
        azimuth_true_deg=float(np.degrees(true_departure)),
        azimuth_est_deg=float(np.degrees(estimate.azimuth_est)),
        angle_error_deg=angle_error,
        beam_index=sweep.best_index,
        sweep_powers=sweep.powers,
        scatterers_true=scatterers_true,
        scatterers_est=scatterers_est,
        position_errors_m=errors,
        rejected_count=rejected,
        spurious_count=spurious,
    )
