"""Environment configuration.

Values come from the process environment, with `.env.local` loaded first so a
developer can keep local overrides out of version control.
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Load environment variables from .env.local
load_dotenv(".env.local")

_TRUTHY = {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    jobs: int = 1
    tracking: bool = False
    tracking_uri: str = "sqlite:///mlflow-tracking.db"
    experiment: str = "risloc"


def load_settings() -> Settings:
    """Read settings from the environment, falling back to defaults."""
    jobs = os.getenv("RISLOC_JOBS", "1")
    try:
        n_jobs = max(1, int(jobs))
    except ValueError:
        raise ValueError(f"RISLOC_JOBS must be an integer, got {jobs!r}")

    return Settings(
        log_level=os.getenv("RISLOC_LOG_LEVEL", "INFO").upper(),
        jobs=n_jobs,
        tracking=os.getenv("RISLOC_TRACKING", "").strip().lower() in _TRUTHY,
        tracking_uri=os.getenv("MLFLOW_TRACKING_URI", Settings.tracking_uri),
        experiment=os.getenv("RISLOC_EXPERIMENT", Settings.experiment),
    )
