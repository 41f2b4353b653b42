"""Optional MLflow tracking of Monte-Carlo runs."""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence

import mlflow

from risloc.config import Settings
from risloc.harness import ErrorStats, Mode, Scenario

logger = logging.getLogger(__name__)


def run_params(scenario: Scenario, mode: Mode, digest: str) -> Dict[str, object]:
    return {
        "scenario": scenario.name,
        "scenario_hash": digest,
        "mode": Mode(mode).value,
        "snr_db": scenario.snr_db,
        "n_pilots": scenario.n_pilots,
        "sample_rate_hz": scenario.sample_rate,
        "codebook_step_deg": scenario.codebook_params["step_deg"],
        "seeds": ",".join(str(s) for s in scenario.seeds),
        "grid": f"{scenario.ue_grid.n_x}x{scenario.ue_grid.n_y}",
    }


def track_run(
    settings: Settings,
    scenario: Scenario,
    mode: Mode,
    stats: ErrorStats,
    digest: str,
    artifacts: Sequence[Path] = (),
    mapping_error: Optional[float] = None,
) -> Optional[str]:
    """Log one run to MLflow; returns the run id. Tracking failures are logged, not raised."""
    try:
        mlflow.set_tracking_uri(settings.tracking_uri)
        mlflow.set_experiment(settings.experiment)
        with mlflow.start_run(run_name=f"{scenario.name}-{Mode(mode).value}") as run:
            mlflow.log_params(run_params(scenario, mode, digest))
            metrics = {
                "peak_deg": stats.peak,
                "mean_deg": stats.mean,
                "variance_deg2": stats.variance,
                "n_trials": stats.n_trials,
                "n_failed": stats.n_failed,
            }
            if mapping_error is not None:
                metrics["mean_scatterer_error_m"] = mapping_error
            mlflow.log_metrics(metrics)
            for artifact in artifacts:
                mlflow.log_artifact(str(artifact))
        logger.info(f"✅ Tracked run {run.info.run_id} in experiment {settings.experiment}")
        return run.info.run_id
    except Exception as e:
        logger.warning(f"⚠️  MLflow tracking failed: {e}")
        return None
