import copy

import numpy as np
import pytest

from uvms_ppc import models

ONE_LINK = {
    "name": "one_link",
    "fluid_density": 1000.0,
    "gravity": 9.81,
    "vehicle": {
        "mass": 10.0, "com": [0.0, 0.0, 0.0], "inertia": [0.3, 0.5, 0.5],
        "volume": 0.01, "cob": [0.0, 0.0, 0.0],
        "added_mass": [0.0] * 6, "linear_drag": [0.0] * 6, "quadratic_drag": [0.0] * 6,
    },
    "arm": {
        "mount": {"offset": [0.0, 0.0, 0.0]},
        "end_effector": {"offset": [0.3, 0.0, 0.0]},
        "joints": [{
            "name": "pitch", "axis": [0.0, 1.0, 0.0], "offset": [0.0, 0.0, 0.0],
            "mass": 1.0, "com": [0.3, 0.0, 0.0], "inertia": [0.0, 0.0, 0.0],
            "volume": 0.001, "cob": [0.3, 0.0, 0.0], "armature": 0.0,
        }],
    },
}


def one_link(**edits):
    """Small vehicle + single pitch link; ``edits`` map dotted paths to values."""
    data = copy.deepcopy(ONE_LINK)
    for path, value in edits.items():
        node = data
        keys = path.split(".")
        for k in keys[:-1]:
            node = node[int(k)] if k.isdigit() else node[k]
        node[keys[-1]] = value
    return models.model_from_dict(data)


@pytest.fixture(scope="session")
def model():
    return models.load_model()


@pytest.fixture(scope="session")
def kmodel(model):
    return model.kinematics


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def q_start():
    return np.array([0.0, 0.0, 0.0, 0.2, 0.2, -0.2, 0.0, -0.4, 0.8, -0.4])


# --- acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
