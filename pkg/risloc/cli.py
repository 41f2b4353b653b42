"""Command-line entry point: ``risloc sweep-table | map | trace | codebook``.

Exit codes: 0 success, 1 validation error, 2 runtime or numerical error.
"""

import functools
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import click
import numpy as np
import pandas as pd

from risloc import __version__
from risloc.arrays import to_local_azimuth
from risloc.config import load_settings
from risloc.errors import InvalidArgumentError, RislocError, ScenarioError, ShapeError
from risloc.geometry import los_path, path_table, trace_paths
from risloc.harness import (
    Mode,
    ReportFormat,
    emit_report,
    load_scenario,
    mapping_errors,
    run_montecarlo,
    scenario_hash,
)
from risloc.ris import BitDepth, build_codebook, export_codebook

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
_SUFFIX = {ReportFormat.CSV: "csv", ReportFormat.STRUCTURED: "json"}


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="[%(asctime)s] %(levelname)s: %(message)s",
        datefmt="%H:%M:%S",
        force=True,
    )


def handle_errors(command):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ShapeError as e:
            logger.error(f"❌ {type(e).__name__}: {e}")
            sys.exit(EXIT_RUNTIME)
        except (ScenarioError, InvalidArgumentError, ValueError) as e:
            logger.error(f"❌ Invalid input: {e}")
            sys.exit(EXIT_VALIDATION)
        except (RislocError, OSError, np.linalg.LinAlgError) as e:
            logger.error(f"❌ {type(e).__name__}: {e}")
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _scenario(name_or_path: str, seed):
    scenario = load_scenario(name_or_path)
    if seed is not None:
        scenario = replace(scenario, seeds=(seed,))
    logger.info(f"📂 Scenario {scenario.name}: {scenario.n_trials} trial(s) per mode")
    return scenario


scenario_option = click.option(
    "--scenario", default="paper_replica", show_default=True, help="Scenario file or bundled scenario name"
)
seed_option = click.option("--seed", type=int, default=None, help="Run a single seed instead of the scenario's list")
jobs_option = click.option("--jobs", type=int, default=None, help="Worker threads (default: RISLOC_JOBS or 1)")
format_option = click.option(
    "--format",
    "report_format",
    type=click.Choice([f.value for f in ReportFormat]),
    default=ReportFormat.CSV.value,
    show_default=True,
)
track_option = click.option("--track/--no-track", default=None, help="Log the run to MLflow")


def _track(track, scenario, mode, stats, digest, artifacts, mapping_error=None):
    settings = load_settings()
    if not (settings.tracking if track is None else track):
        return
    from risloc.tracking import track_run

    track_run(settings, scenario, mode, stats, digest, artifacts, mapping_error)


@click.group()
@click.version_option(__version__, prog_name="risloc")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
def main(verbose):
    """RIS-aided indoor positioning and scatterer mapping simulator."""
    configure_logging("DEBUG" if verbose else load_settings().log_level)


@main.command("sweep-table")
@scenario_option
@click.option("--mode", type=click.Choice([m.value for m in Mode]), default=None, help="Run one mode (default: all)")
@click.option("--out", type=click.Path(), default=None, help="Output file (one mode) or directory (all modes)")
@seed_option
@jobs_option
@format_option
@track_option
@click.option("--progress/--no-progress", default=True)
@handle_errors
def sweep_table(scenario, mode, out, seed, jobs, report_format, track, progress):
    """Angle-error statistics of the beam-sweep modes."""
    scenario = _scenario(scenario, seed)
    jobs = jobs or load_settings().jobs
    report_format = ReportFormat(report_format)
    digest = scenario_hash(scenario)
    modes = [Mode(mode)] if mode else list(Mode)

    if mode:
        target = Path(out or f"{scenario.name}_{mode}.{_SUFFIX[report_format]}")
        target.parent.mkdir(parents=True, exist_ok=True)
    else:
        directory = Path(out or "results")
        directory.mkdir(parents=True, exist_ok=True)

    rows = []
    summary = {"tool": "risloc", "version": __version__, "scenario": scenario.name, "scenario_hash": digest}
    for m in modes:
        reports, stats = run_montecarlo(scenario, m, jobs=jobs, progress=progress)
        path = target if mode else directory / f"{m.value}.{_SUFFIX[report_format]}"
        meta = {"scenario": scenario.name, "mode": m.value}
        emit_report(reports, stats, report_format, path, digest=digest, meta=meta)
        summary[m.value] = asdict(stats)
        rows.append(stats.to_table(m.value))
        _track(track, scenario, m, stats, digest, [path])

    if not mode:
        with open(directory / "summary.json", "w") as f:
            json.dump(summary, f, indent=2)
    click.echo(pd.concat(rows, ignore_index=True).to_string(index=False))


@main.command("map")
@scenario_option
@click.option("--mode", type=click.Choice([m.value for m in Mode]), default=Mode.ONEBIT_SWEEP_MUSIC.value)
@click.option("--out", type=click.Path(), default=None, help="Report path")
@seed_option
@jobs_option
@format_option
@track_option
@click.option("--progress/--no-progress", default=True)
@handle_errors
def map_command(scenario, mode, out, seed, jobs, report_format, track, progress):
    """Positioning followed by scatterer mapping at every grid point."""
    scenario = _scenario(scenario, seed)
    report_format = ReportFormat(report_format)
    digest = scenario_hash(scenario)
    reports, stats = run_montecarlo(scenario, Mode(mode), jobs=jobs or load_settings().jobs, mapping=True, progress=progress)
    path = Path(out or f"{scenario.name}_map.{_SUFFIX[report_format]}")
    path.parent.mkdir(parents=True, exist_ok=True)
    emit_report(reports, stats, report_format, path, digest=digest, meta={"scenario": scenario.name, "mode": mode})

    errors = mapping_errors(reports)
    mean_error = float(np.mean(errors)) if errors else None
    detected = sum(1 for r in reports if r.ok and r.scatterers_est)
    if mean_error is None:
        logger.warning("⚠️  No scatterer was mapped")
    else:
        logger.info(f"📊 Mean scatterer error {mean_error:.3f} m over {len(errors)} scatterer(s)")
    spurious = sum(r.spurious_count for r in reports if r.ok)
    click.echo(
        f"trials={len(reports)} with_estimate={detected} spurious={spurious} mean_scatterer_error_m={mean_error}"
    )
    _track(track, scenario, Mode(mode), stats, digest, [path], mean_error)


@main.command("trace")
@scenario_option
@click.option("--link", type=click.Choice(["ap-ris", "ris-ue", "ap-ue"]), default="ris-ue", show_default=True)
@click.option("--max-order", type=int, default=None, help="Reflection order (default: scenario's)")
@click.option("--out", type=click.Path(), default=None, help="Write the path table as CSV")
@handle_errors
def trace(scenario, link, max_order, out):
    """Path table of one link at the scenario's UE position."""
    scenario = load_scenario(scenario)
    tx, rx = link.split("-")
    paths = trace_paths(scenario.scene, tx, rx, scenario.max_order if max_order is None else max_order)
    table = pd.DataFrame(path_table(paths))
    if out:
        table.to_csv(out, index=False)
        logger.info(f"💾 Path table written to {out}")
    click.echo(table.to_string(index=False) if len(table) else "no paths")


@main.command("codebook")
@scenario_option
@click.option("--out", type=click.Path(), default="codebook.json", show_default=True)
@click.option("--bit-depth", type=click.Choice([b.value for b in BitDepth]), default=None)
@handle_errors
def codebook(scenario, out, bit_depth):
    """Export the scenario's RIS codebook."""
    scenario = load_scenario(scenario)
    config = scenario.protocol_config(Mode.ONEBIT_SWEEP_MUSIC)
    ris = scenario.scene.node("ris")
    feed = los_path(scenario.scene, "ap", "ris")
    incidence = (to_local_azimuth(feed.aoa_azimuth, ris), feed.aoa_elevation)
    book = build_codebook(
        incidence,
        config.codebook_range,
        config.codebook_step,
        config.ris_spec,
        BitDepth(bit_depth or scenario.codebook_params["bit_depth"]),
    )
    export_codebook(book, out)
    click.echo(f"{len(book)} entries, incidence {np.degrees(incidence[0]):.2f} deg -> {out}")


if __name__ == "__main__":
    main()
