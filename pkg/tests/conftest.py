import copy
import json

import numpy as np
import pytest

from risloc.arrays import ArrayKind, ArraySpec, Pose
from risloc.geometry import Scene, room_walls
from risloc.harness import load_scenario
from risloc.protocol import ProtocolConfig

WALLS = ("x_min", "x_max", "y_min", "y_max", "floor", "ceiling")

SMALL_ARRAYS = {
    "ap": {"kind": "ULA", "count_h": 2},
    "ris": {"kind": "URA", "count_h": 8, "count_v": 8},
    "ue": {"kind": "ULA", "count_h": 8},
}

TINY_SCENARIO = {
    "schema": 1,
    "name": "tiny",
    "scene": {
        "schema": 1,
        "carrier_frequency_hz": 3.5e9,
        "room": {"size": [6.0, 8.0, 3.0], "gamma": 0.0, "walls": {"x_max": 0.9}},
        "nodes": {
            "ap": {"position": [0.5, 7.0, 1.5], "yaw": -1.2},
            "ris": {"position": [3.0, 7.9, 1.5], "yaw": 3.141592653589793},
            "ue": {"position": [2.5, 4.0, 1.5], "yaw": 0.0},
        },
    },
    "ue_grid": {"x_range": [2.0, 3.0], "y_range": [4.0, 4.0], "n_x": 2, "n_y": 1},
    "n_pilots": 64,
    "seeds": [0],
    "codebook": {"step_deg": 4.0},
    "music": {"grid_step_deg": 0.2},
    "arrays": SMALL_ARRAYS,
}


@pytest.fixture(scope="session")
def make_scene():
    """Build a scene from node positions; every wall absorbs unless given a gamma."""

    def _make(nodes, size=(6.0, 8.0, 3.0), gammas=None, surfaces=(), carrier_frequency=3.5e9):
        walls = {name: 0.0 for name in WALLS}
        walls.update(gammas or {})
        poses = {name: node if isinstance(node, Pose) else Pose(node) for name, node in nodes.items()}
        return Scene(size, room_walls(size, walls) + list(surfaces), carrier_frequency, poses)

    return _make


@pytest.fixture
def ris_scene(make_scene):
    """RIS on the far wall, AP near the left wall, one reflecting side wall."""
    return make_scene(
        {
            "ap": Pose((0.5, 7.0, 1.5), -1.2),
            "ris": Pose((3.0, 7.9, 1.5), np.pi),
            "ue": Pose((2.5, 4.0, 1.5), 0.0),
        },
        gammas={"x_max": 0.9},
    )


@pytest.fixture
def small_config():
    return ProtocolConfig(
        snr_db=np.inf,
        n_pilots=64,
        ap_spec=ArraySpec(ArrayKind.ULA, 2),
        ris_spec=ArraySpec(ArrayKind.URA, 8, 8),
        ue_spec=ArraySpec(ArrayKind.ULA, 8),
    )


@pytest.fixture
def tiny_scenario_dict():
    return copy.deepcopy(TINY_SCENARIO)


@pytest.fixture
def tiny_scenario_file(tmp_path, tiny_scenario_dict):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_scenario_dict))
    return path


@pytest.fixture(scope="session")
def paper_replica():
    return load_scenario("paper_replica")


@pytest.fixture(scope="session")
def single_wall():
    return load_scenario("single_wall")


@pytest.fixture(scope="session")
def los_only():
    return load_scenario("los_only")
