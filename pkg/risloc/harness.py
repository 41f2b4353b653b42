"""Scenario loading, Monte-Carlo runs over UE grids and seeds, statistics and report files."""

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from risloc import __version__
from risloc.arrays import ArrayKind, ArraySpec, Pose
from risloc.errors import InvalidArgumentError, ProtocolStageError, ScenarioError
from risloc.geometry import SCHEMA_VERSION, Scene, load_scene, scene_from_dict
from risloc.protocol import ProtocolConfig, RunReport, run_protocol
from risloc.ris import BitDepth

logger = logging.getLogger(__name__)

BUNDLED_SCENARIOS = ("paper_replica", "single_wall", "los_only")

CSV_COLUMNS = [
    "mode",
    "trial",
    "seed",
    "ue_x",
    "ue_y",
    "ue_z",
    "ue_est_x",
    "ue_est_y",
    "ue_est_z",
    "azimuth_true_deg",
    "azimuth_est_deg",
    "angle_error_deg",
    "beam_index",
    "n_scatterers_true",
    "n_scatterers_est",
    "n_spurious",
    "mean_position_error_m",
    "rejected_count",
    "error",
    "scenario_hash",
    "version",
]


class Mode(str, Enum):
    CONTINUOUS_SWEEP = "continuous_sweep"
    ONEBIT_SWEEP = "onebit_sweep"
    ONEBIT_SWEEP_MUSIC = "onebit_sweep_music"


class ReportFormat(str, Enum):
    CSV = "csv"
    STRUCTURED = "structured_text"


_MODE_SETTINGS = {
    Mode.CONTINUOUS_SWEEP: (BitDepth.CONTINUOUS, False),
    Mode.ONEBIT_SWEEP: (BitDepth.ONE_BIT, False),
    Mode.ONEBIT_SWEEP_MUSIC: (BitDepth.ONE_BIT, True),
}

DEFAULTS = {
    "snr_db": 20.0,
    "n_pilots": 256,
    "sample_rate_hz": 122.88e6,
    "seeds": [0],
    "toa_sigma_s": 0.0,
    "max_order": 1,
    "codebook": {"step_deg": 2.0, "bit_depth": "one_bit", "range_deg": [10.0, 170.0]},
    "music": {"grid_step_deg": 0.1},
    "mapping": {
        "rejection_threshold_deg": 4.0,
        "merge_radius_m": 0.3,
        "min_relative_power": 0.1,
        "detection_ratio": 4.0,
        "min_nlos_fraction": 0.5,
    },
    "arrays": {
        "ap": {"kind": "ULA", "count_h": 4, "count_v": 1, "spacing": 0.5},
        "ris": {"kind": "URA", "count_h": 32, "count_v": 32, "spacing": 0.5},
        "ue": {"kind": "ULA", "count_h": 8, "count_v": 1, "spacing": 0.5},
    },
}


@dataclass(frozen=True)
class UeGrid:
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    n_x: int = 1
    n_y: int = 1

    @staticmethod
    def _axis(bounds: Tuple[float, float], n: int) -> np.ndarray:
        if n == 1:
            return np.array([0.5 * (bounds[0] + bounds[1])])
        return np.linspace(bounds[0], bounds[1], n)

    def points(self) -> List[Tuple[float, float]]:
        """Grid points, x varying fastest."""
        xs, ys = self._axis(self.x_range, self.n_x), self._axis(self.y_range, self.n_y)
        return [(float(x), float(y)) for y in ys for x in xs]

    def to_dict(self) -> dict:
        return {"x_range": list(self.x_range), "y_range": list(self.y_range), "n_x": self.n_x, "n_y": self.n_y}


@dataclass(frozen=True)
class Scenario:
    name: str
    scene: Scene
    ue_grid: UeGrid
    snr_db: float = 20.0
    n_pilots: int = 256
    seeds: Tuple[int, ...] = (0,)
    codebook_params: Dict = field(default_factory=lambda: dict(DEFAULTS["codebook"]))
    music_params: Dict = field(default_factory=lambda: dict(DEFAULTS["music"]))
    toa_sigma: float = 0.0
    sample_rate: float = 122.88e6
    max_order: int = 1
    mapping_params: Dict = field(default_factory=lambda: dict(DEFAULTS["mapping"]))
    arrays: Dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULTS["arrays"].items()})

    @property
    def n_trials(self) -> int:
        return self.ue_grid.n_x * self.ue_grid.n_y * len(self.seeds)

    def to_dict(self) -> dict:
        """Fully resolved scenario, defaults included."""
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "scene": self.scene.to_dict(),
            "ue_grid": self.ue_grid.to_dict(),
            "snr_db": self.snr_db,
            "n_pilots": self.n_pilots,
            "sample_rate_hz": self.sample_rate,
            "seeds": list(self.seeds),
            "toa_sigma_s": self.toa_sigma,
            "max_order": self.max_order,
            "codebook": dict(self.codebook_params),
            "music": dict(self.music_params),
            "mapping": dict(self.mapping_params),
            "arrays": {k: dict(v) for k, v in self.arrays.items()},
        }

    def protocol_config(self, mode: Mode, mapping: bool = False) -> ProtocolConfig:
        bit_depth, use_music = _MODE_SETTINGS[Mode(mode)]
        low, high = self.codebook_params["range_deg"]
        return ProtocolConfig(
            bit_depth=bit_depth,
            use_music=use_music,
            mapping=mapping,
            snr_db=self.snr_db,
            n_pilots=self.n_pilots,
            sample_rate=self.sample_rate,
            codebook_step=np.radians(self.codebook_params["step_deg"]),
            codebook_range=(np.radians(low), np.radians(high)),
            music_grid_step=np.radians(self.music_params["grid_step_deg"]),
            toa_sigma=self.toa_sigma,
            rejection_threshold=np.radians(self.mapping_params["rejection_threshold_deg"]),
            merge_radius=self.mapping_params["merge_radius_m"],
            min_relative_power=self.mapping_params["min_relative_power"],
            detection_ratio=self.mapping_params["detection_ratio"],
            min_nlos_fraction=self.mapping_params["min_nlos_fraction"],
            max_order=self.max_order,
            ap_spec=_array_spec(self.arrays["ap"]),
            ris_spec=_array_spec(self.arrays["ris"]),
            ue_spec=_array_spec(self.arrays["ue"]),
        )

    def scene_at(self, point: Tuple[float, float]) -> Scene:
        ue = self.scene.node("ue")
        return self.scene.with_node("ue", Pose((point[0], point[1], ue.position[2]), ue.yaw))


@dataclass(frozen=True)
class ErrorStats:
    """Peak, mean and population variance of the angle error, in degrees."""

    peak: float
    mean: float
    variance: float
    n_trials: int
    n_failed: int = 0

    def to_table(self, label: str = "") -> pd.DataFrame:
        return pd.DataFrame(
            [{"method": label, "peak_deg": self.peak, "mean_deg": self.mean, "variance_deg2": self.variance}]
        )


def _array_spec(entry: dict) -> ArraySpec:
    return ArraySpec(
        ArrayKind(entry["kind"]), int(entry["count_h"]), int(entry.get("count_v", 1)), float(entry.get("spacing", 0.5))
    )


def _number(data: dict, key: str, where: str = "") -> float:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", key=f"{where}{key}")
    return float(value)


def _pair(value, key: str) -> Tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"expected a list of 2 numbers, got {value!r}", key=key)
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(f"expected a number, got {v!r}", key=key)
    return float(value[0]), float(value[1])


def _merged(defaults: dict, overrides: dict, key: str) -> dict:
    if not isinstance(overrides, dict):
        raise ScenarioError("expected an object", key=key)
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", key=key)
    return {**defaults, **overrides}


def _resolve_path(path) -> Path:
    if str(path) in BUNDLED_SCENARIOS:
        return Path(str(resources.files("risloc") / "scenarios" / f"{path}.json"))
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"no scenario file at {path} and no bundled scenario of that name", key="scenario")
    return path


def scenario_from_dict(data: dict, base_dir: Optional[Path] = None, name: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    if data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema version {data.get('schema')!r}", key="schema")
    known = set(DEFAULTS) | {"schema", "name", "scene", "scene_file", "ue_grid"}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", key=sorted(unknown)[0])

    if "scene" in data:
        scene = scene_from_dict(data["scene"])
    elif "scene_file" in data:
        scene = load_scene((base_dir or Path.cwd()) / data["scene_file"])
    else:
        raise ScenarioError("missing required key", key="scene")

    resolved = {**DEFAULTS, **{k: v for k, v in data.items() if k in DEFAULTS}}
    for key in ("codebook", "music", "mapping"):
        resolved[key] = _merged(DEFAULTS[key], data.get(key, {}), key)
    array_overrides = data.get("arrays", {})
    if not isinstance(array_overrides, dict):
        raise ScenarioError("expected an object", key="arrays")
    resolved["arrays"] = {
        role: _merged(DEFAULTS["arrays"][role], array_overrides.get(role, {}), f"arrays.{role}")
        for role in DEFAULTS["arrays"]
    }
    try:
        arrays = {role: _array_spec(entry) for role, entry in resolved["arrays"].items()}
    except (InvalidArgumentError, TypeError, ValueError) as e:
        raise ScenarioError(str(e), key="arrays")
    if arrays["ue"].kind is not ArrayKind.ULA:
        raise ScenarioError("the UE array must be a ULA", key="arrays.ue.kind")

    grid_data = data.get("ue_grid")
    if not isinstance(grid_data, dict):
        raise ScenarioError("missing required key", key="ue_grid")
    for key in ("x_range", "y_range"):
        if key not in grid_data:
            raise ScenarioError("missing required key", key=f"ue_grid.{key}")
    counts = {key: grid_data.get(key, 1) for key in ("n_x", "n_y")}
    for key, count in counts.items():
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ScenarioError(f"expected a positive integer, got {count!r}", key=f"ue_grid.{key}")
    grid = UeGrid(
        _pair(grid_data["x_range"], "ue_grid.x_range"),
        _pair(grid_data["y_range"], "ue_grid.y_range"),
        counts["n_x"],
        counts["n_y"],
    )
    size = scene.room_size
    for axis, key, bounds in ((0, "x_range", grid.x_range), (1, "y_range", grid.y_range)):
        if not 0 < min(bounds) <= max(bounds) < size[axis]:
            raise ScenarioError(f"grid range {list(bounds)} leaves the room", key=f"ue_grid.{key}")

    seeds = resolved["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ScenarioError("expected a non-empty list of non-negative integers", key="seeds")
    bit_depth = resolved["codebook"]["bit_depth"]
    if bit_depth not in {b.value for b in BitDepth}:
        raise ScenarioError(f"unknown bit depth {bit_depth!r}", key="codebook.bit_depth")
    low, high = _pair(resolved["codebook"]["range_deg"], "codebook.range_deg")
    if not 0 <= low <= high <= 180:
        raise ScenarioError(f"expected 0 <= low <= high <= 180, got {[low, high]}", key="codebook.range_deg")
    n_pilots = resolved["n_pilots"]
    if isinstance(n_pilots, bool) or not isinstance(n_pilots, int) or n_pilots < 1:
        raise ScenarioError("expected a positive integer", key="n_pilots")
    max_order = resolved["max_order"]
    if isinstance(max_order, bool) or not isinstance(max_order, int) or not 0 <= max_order <= 2:
        raise ScenarioError("expected an integer in [0, 2]", key="max_order")

    return Scenario(
        name=str(data.get("name", name)),
        scene=scene,
        ue_grid=grid,
        snr_db=_number(resolved, "snr_db"),
        n_pilots=n_pilots,
        seeds=tuple(seeds),
        codebook_params={
            "step_deg": _number(resolved["codebook"], "step_deg", "codebook."),
            "bit_depth": bit_depth,
            "range_deg": [low, high],
        },
        music_params={"grid_step_deg": _number(resolved["music"], "grid_step_deg", "music.")},
        toa_sigma=_number(resolved, "toa_sigma_s"),
        sample_rate=_number(resolved, "sample_rate_hz"),
        max_order=max_order,
        mapping_params={k: _number(resolved["mapping"], k, "mapping.") for k in DEFAULTS["mapping"]},
        arrays=resolved["arrays"],
    )


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a bundled scenario by name, filling in every default."""
    path = _resolve_path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON in {path}: {e}")
    scenario = scenario_from_dict(data, base_dir=path.parent, name=path.stem)
    logger.debug(f"Resolved scenario {scenario.name}: {json.dumps(scenario.to_dict(), sort_keys=True)}")
    return scenario


def scenario_hash(scenario: Scenario) -> str:
    canonical = json.dumps(scenario.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def error_stats(errors: Sequence[float], n_failed: int = 0) -> ErrorStats:
    """Peak, mean and population variance of a list of angle errors."""
    values = np.asarray(list(errors), dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("error_stats needs at least one value")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidArgumentError("angle errors must be finite and non-negative")
    return ErrorStats(float(values.max()), float(values.mean()), float(values.var()), int(values.size), n_failed)


def _run_trial(task) -> RunReport:
    scene, config, grid_index, mode = task
    try:
        report = run_protocol(scene, config, trial=grid_index)
    except ProtocolStageError as e:
        logger.warning(f"⚠️ Trial {grid_index} (seed {config.seed}) failed: {e}")
        report = RunReport(
            trial=grid_index,
            seed=config.seed,
            ue_true=tuple(float(v) for v in scene.node("ue").position),
            error=str(e),
        )
    return replace(report, mode=mode.value)


def run_montecarlo(
    scenario: Scenario, mode: Mode, jobs: int = 1, mapping: bool = False, progress: bool = True
) -> Tuple[List[RunReport], ErrorStats]:
    """Run every grid point x seed; reports come back in (grid index, seed) order."""
    mode = Mode(mode)
    config = scenario.protocol_config(mode, mapping=mapping)
    tasks = [
        (scenario.scene_at(point), replace(config, seed=seed), grid_index, mode)
        for grid_index, point in enumerate(scenario.ue_grid.points())
        for seed in scenario.seeds
    ]
    logger.info(f"🚀 {scenario.name}: {len(tasks)} trials in mode {mode.value} with {jobs} worker(s)")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        reports = list(tqdm(executor.map(_run_trial, tasks), total=len(tasks), desc=mode.value, disable=not progress))

    errors = [r.angle_error_deg for r in reports if r.ok]
    failed = len(reports) - len(errors)
    if failed:
        logger.warning(f"⚠️ {failed} of {len(reports)} trials failed and are excluded from the statistics")
    if errors:
        stats = error_stats(errors, n_failed=failed)
    else:
        stats = ErrorStats(0.0, 0.0, 0.0, 0, failed)
    logger.info(f"📊 {mode.value}: peak {stats.peak:.3f} deg, mean {stats.mean:.3f} deg, variance {stats.variance:.3f}")
    return reports, stats


def mapping_errors(reports: Sequence[RunReport]) -> List[float]:
    return [e for r in reports if r.ok for e in r.position_errors_m]


def _csv_row(report: RunReport, digest: str) -> dict:
    est = report.ue_est or (None, None, None)
    errors = report.position_errors_m
    return {
        "mode": report.mode,
        "trial": report.trial,
        "seed": report.seed,
        "ue_x": report.ue_true[0],
        "ue_y": report.ue_true[1],
        "ue_z": report.ue_true[2],
        "ue_est_x": est[0],
        "ue_est_y": est[1],
        "ue_est_z": est[2],
        "azimuth_true_deg": report.azimuth_true_deg,
        "azimuth_est_deg": report.azimuth_est_deg,
        "angle_error_deg": report.angle_error_deg,
        "beam_index": report.beam_index,
        "n_scatterers_true": len(report.scatterers_true),
        "n_scatterers_est": len(report.scatterers_est),
        "n_spurious": report.spurious_count,
        "mean_position_error_m": float(np.mean(errors)) if errors else None,
        "rejected_count": report.rejected_count,
        "error": report.error,
        "scenario_hash": digest,
        "version": __version__,
    }


def emit_report(
    reports: Sequence[RunReport],
    stats: ErrorStats,
    format: ReportFormat,
    path,
    digest: str = "",
    meta: Optional[dict] = None,
) -> Path:
    """Write per-trial rows as CSV (fixed ``CSV_COLUMNS`` header) or the full nested report as JSON."""
    path = Path(path)
    format = ReportFormat(format)
    try:
        if format is ReportFormat.CSV:
            frame = pd.DataFrame([_csv_row(r, digest) for r in reports], columns=CSV_COLUMNS)
            frame.to_csv(path, index=False)
        else:
            payload = {
                "tool": "risloc",
                "version": __version__,
                "scenario_hash": digest,
                "meta": meta or {},
                "stats": asdict(stats),
                "trials": [r.to_dict() for r in reports],
            }
            with open(path, "w") as f:
                json.dump(payload, f, indent=2)
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e}") from e
    logger.info(f"💾 Wrote {len(reports)} trial(s) to {path}")
    return path


def load_report(path) -> Tuple[List[RunReport], ErrorStats, dict]:
    """Parse a structured report back into (reports, stats, provenance)."""
    with open(path, "r") as f:
        payload = json.load(f)
    reports = [RunReport.from_dict(t) for t in payload["trials"]]
    stats = ErrorStats(**payload["stats"])
    provenance = {k: payload.get(k) for k in ("tool", "version", "scenario_hash", "meta")}
    return reports, stats, provenance
