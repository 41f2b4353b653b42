import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from risloc import __version__
from risloc.errors import InvalidArgumentError, ScenarioError
from risloc.harness import (
    BUNDLED_SCENARIOS,
    CSV_COLUMNS,
    ErrorStats,
    Mode,
    ReportFormat,
    UeGrid,
    emit_report,
    error_stats,
    load_report,
    load_scenario,
    run_montecarlo,
    scenario_from_dict,
    scenario_hash,
)
from risloc.protocol import RunReport
from risloc.ris import BitDepth


def test_grid_points_vary_x_fastest():
    grid = UeGrid((1.0, 2.0), (3.0, 4.0), n_x=2, n_y=2)
    assert grid.points() == [(1.0, 3.0), (2.0, 3.0), (1.0, 4.0), (2.0, 4.0)]


def test_single_point_axis_uses_midpoint():
    assert UeGrid((1.0, 3.0), (2.0, 2.0)).points() == [(2.0, 2.0)]


@pytest.mark.parametrize("name", BUNDLED_SCENARIOS)
def test_bundled_scenarios_load(name):
    scenario = load_scenario(name)
    assert scenario.name == name
    assert scenario.n_trials == scenario.ue_grid.n_x * scenario.ue_grid.n_y * len(scenario.seeds)
    config = scenario.protocol_config(Mode.ONEBIT_SWEEP_MUSIC)
    assert config.use_music and config.bit_depth is BitDepth.ONE_BIT
    assert config.codebook_step == pytest.approx(np.radians(2.0))


def test_paper_replica_defaults(paper_replica):
    assert paper_replica.n_trials == 100
    assert paper_replica.protocol_config(Mode.CONTINUOUS_SWEEP).bit_depth is BitDepth.CONTINUOUS
    assert paper_replica.protocol_config(Mode.ONEBIT_SWEEP).use_music is False
    assert paper_replica.protocol_config(Mode.ONEBIT_SWEEP).ris_spec.size == 1024


def test_defaults_fill_missing_keys(tiny_scenario_dict):
    scenario = scenario_from_dict(tiny_scenario_dict)
    assert scenario.snr_db == 20.0
    assert scenario.mapping_params["merge_radius_m"] == 0.3
    assert scenario.codebook_params == {"step_deg": 4.0, "bit_depth": "one_bit", "range_deg": [10.0, 170.0]}
    assert scenario.to_dict()["arrays"]["ris"] == {"kind": "URA", "count_h": 8, "count_v": 8, "spacing": 0.5}


@pytest.mark.parametrize(
    "mutate, key",
    [
        (lambda d: d.pop("ue_grid"), "ue_grid"),
        (lambda d: d.update(snr_db="high"), "snr_db"),
        (lambda d: d.update(seeds=[]), "seeds"),
        (lambda d: d.update(n_pilots=0), "n_pilots"),
        (lambda d: d.update(max_order=3), "max_order"),
        (lambda d: d["codebook"].update(bit_depth="two_bit"), "codebook.bit_depth"),
        (lambda d: d["codebook"].update(step_deg="2"), "codebook.step_deg"),
        (lambda d: d.update(mapping={"radius": 1.0}), "mapping"),
        (lambda d: d["ue_grid"].update(x_range=[2.0, 7.0]), "ue_grid.x_range"),
        (lambda d: d["ue_grid"].update(x_range=[2.0]), "ue_grid.x_range"),
        (lambda d: d["ue_grid"].update(y_range=["a", 4.0]), "ue_grid.y_range"),
        (lambda d: d["ue_grid"].pop("y_range"), "ue_grid.y_range"),
        (lambda d: d["ue_grid"].update(n_x=0), "ue_grid.n_x"),
        (lambda d: d["codebook"].update(range_deg="wide"), "codebook.range_deg"),
        (lambda d: d["codebook"].update(range_deg=[10]), "codebook.range_deg"),
        (lambda d: d["codebook"].update(range_deg=[170.0, 10.0]), "codebook.range_deg"),
        (lambda d: d["scene"].update(surfaces=[5]), "surfaces[0]"),
        (lambda d: d["scene"].update(surfaces={"corners": []}), "surfaces"),
        (lambda d: d["scene"].update(nodes=[]), "nodes"),
        (lambda d: d["scene"]["nodes"].update(ap="here"), "nodes.ap"),
        (lambda d: d["scene"]["room"].update(walls=[0.5]), "room.walls"),
        (lambda d: d.update(arrays="big"), "arrays"),
        (lambda d: d["arrays"]["ris"].update(count_h=None), "arrays"),
        (lambda d: d["arrays"]["ue"].update(kind="URA", count_v=2), "arrays.ue.kind"),
        (lambda d: d.update(colour="blue"), "colour"),
    ],
)
def test_scenario_errors_name_the_key(tiny_scenario_dict, mutate, key):
    mutate(tiny_scenario_dict)
    with pytest.raises(ScenarioError) as excinfo:
        scenario_from_dict(tiny_scenario_dict)
    assert excinfo.value.key == key


def test_unknown_schema_is_rejected(tiny_scenario_dict):
    tiny_scenario_dict["schema"] = 2
    with pytest.raises(ScenarioError, match="schema"):
        scenario_from_dict(tiny_scenario_dict)


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nowhere.json")


def test_invalid_json_is_a_scenario_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(path)


def test_scene_file_is_resolved_next_to_the_scenario(tmp_path, tiny_scenario_dict):
    (tmp_path / "room.json").write_text(json.dumps(tiny_scenario_dict.pop("scene")))
    tiny_scenario_dict["scene_file"] = "room.json"
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(tiny_scenario_dict))
    assert load_scenario(path).scene.node("ris").yaw == pytest.approx(np.pi)


def test_scenario_hash_is_stable(tiny_scenario_file, tiny_scenario_dict):
    digest = scenario_hash(load_scenario(tiny_scenario_file))
    assert digest == scenario_hash(load_scenario(tiny_scenario_file))
    assert len(digest) == 64

    tiny_scenario_dict["snr_db"] = 10.0
    assert scenario_hash(scenario_from_dict(tiny_scenario_dict)) != digest


def test_error_stats_uses_population_variance():
    stats = error_stats([1.0, 2.0, 3.0, 6.0])
    assert stats.peak == 6.0
    assert stats.mean == 3.0
    assert stats.variance == pytest.approx(3.5)
    assert stats.n_trials == 4


@pytest.mark.parametrize("errors", [[], [1.0, -0.5], [np.nan]])
def test_error_stats_rejects_bad_input(errors):
    with pytest.raises(InvalidArgumentError):
        error_stats(errors)


def test_montecarlo_reports_come_back_in_grid_order(tiny_scenario_file):
    scenario = replace(load_scenario(tiny_scenario_file), seeds=(0, 1))
    reports, stats = run_montecarlo(scenario, Mode.ONEBIT_SWEEP, progress=False)

    assert [(r.trial, r.seed) for r in reports] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert [r.ue_true[0] for r in reports] == [2.0, 2.0, 3.0, 3.0]
    assert all(r.mode == "onebit_sweep" for r in reports)
    assert stats.n_trials == 4 and stats.n_failed == 0
    assert stats.peak == pytest.approx(max(r.angle_error_deg for r in reports))


def test_montecarlo_is_independent_of_worker_count(tiny_scenario_file):
    scenario = load_scenario(tiny_scenario_file)
    serial, _ = run_montecarlo(scenario, Mode.ONEBIT_SWEEP_MUSIC, jobs=1, progress=False)
    parallel, _ = run_montecarlo(scenario, Mode.ONEBIT_SWEEP_MUSIC, jobs=2, progress=False)
    assert serial == parallel


def test_failed_grid_point_is_counted_not_raised(tiny_scenario_dict):
    # the second grid point sits behind the RIS plane
    tiny_scenario_dict["ue_grid"] = {"x_range": [2.5, 2.5], "y_range": [4.0, 7.95], "n_x": 1, "n_y": 2}
    scenario = scenario_from_dict(tiny_scenario_dict)
    reports, stats = run_montecarlo(scenario, Mode.ONEBIT_SWEEP, progress=False)

    assert reports[0].ok
    assert not reports[1].ok and "[trace]" in reports[1].error
    assert stats.n_trials == 1 and stats.n_failed == 1


def sample_reports():
    return [
        RunReport(
            0, 0, (2.0, 4.0, 1.5), (2.1, 4.0, 1.5), 100.0, 101.0, 1.0, 3, (1.0, 2.0),
            scatterers_est=((1.0, 1.0, 1.5),), spurious_count=1, mode="onebit_sweep",
        ),
        RunReport(1, 0, (3.0, 4.0, 1.5), (3.0, 4.0, 1.5), 95.0, 95.5, 0.5, 2, (2.0, 1.0), mode="onebit_sweep"),
        RunReport(2, 0, (2.5, 7.95, 1.5), error="[trace] EmptyChannelError: no path", mode="onebit_sweep"),
    ]


def test_csv_report_has_fixed_columns(tmp_path):
    reports = sample_reports()
    stats = error_stats([r.angle_error_deg for r in reports if r.ok], n_failed=1)
    path = emit_report(reports, stats, ReportFormat.CSV, tmp_path / "table.csv", digest="abc")
    frame = pd.read_csv(path)

    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 3
    assert frame["scenario_hash"].eq("abc").all()
    assert frame["n_spurious"].tolist() == [1, 0, 0]
    assert frame["version"].astype(str).eq(__version__).all()
    ok = frame[frame["error"].isna()]
    recomputed = error_stats(ok["angle_error_deg"])
    assert recomputed.peak == pytest.approx(stats.peak)
    assert recomputed.mean == pytest.approx(stats.mean)
    assert recomputed.variance == pytest.approx(stats.variance)


def test_structured_report_round_trip(tmp_path):
    reports = sample_reports()
    stats = ErrorStats(1.0, 0.75, 0.0625, 2, 1)
    path = emit_report(reports, stats, "structured_text", tmp_path / "report.json", digest="abc", meta={"mode": "x"})
    loaded, loaded_stats, provenance = load_report(path)

    assert loaded == reports
    assert loaded_stats == stats
    assert provenance == {"tool": "risloc", "version": __version__, "scenario_hash": "abc", "meta": {"mode": "x"}}


def test_emit_report_into_missing_directory_fails(tmp_path):
    with pytest.raises(OSError):
        emit_report(sample_reports(), ErrorStats(0, 0, 0, 0), ReportFormat.CSV, tmp_path / "missing" / "t.csv")


def test_stats_table():
    table = ErrorStats(2.0, 1.0, 0.5, 10).to_table("onebit_sweep")
    assert table.to_dict("records") == [{"method": "onebit_sweep", "peak_deg": 2.0, "mean_deg": 1.0, "variance_deg2": 0.5}]
