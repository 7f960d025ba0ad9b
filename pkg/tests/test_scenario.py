from dataclasses import replace

import numpy as np
import pytest
import yaml

from uvms_ppc import models
from uvms_ppc.scenario import (ScenarioError, build, load_scenario, paper_scenario, scenario_from_dict,
                               scenario_text, validate)


@pytest.fixture
def paper_dict():
    return yaml.safe_load(scenario_text())


def test_bundled_scenario_values():
    s = paper_scenario()
    assert s.name == "paper_force_tracking"
    assert s.duration == 10.0 and s.h == 1e-3 and s.seed == 0
    assert s.noise.bound == 0.01
    assert s.disturbance.amplitude == 0.15
    assert s.disturbance.omega == pytest.approx(2 * np.pi / 7)
    assert s.force.omega == pytest.approx(np.pi)
    np.testing.assert_allclose(s.controller.rho_x(0.0), [1, 1, 1, 0.9, 0.9, 0.9])
    np.testing.assert_allclose(s.q0, [0, 0, 0, 0.2, 0.2, -0.2, 0, -0.4, 0.8, -0.4])
    assert s.actuator_limit is None


def test_auto_wall_touches_the_start_position():
    plant, _, y0 = build(paper_scenario())
    s = plant.sense(y0, 0.0)
    assert s.f_true[0] == 0.0 and not s.contact
    np.testing.assert_allclose(s.orientation, [0.2, 0.2, -0.2], atol=1e-12)


def test_loader_resolves_model_next_to_the_file(tmp_path, paper_dict):
    (tmp_path / "mine.yaml").write_text(models.data_path("lbv150_4dof.yaml").read_text())
    paper_dict["model"] = "mine.yaml"
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(paper_dict))
    s = load_scenario(path)
    assert validate(s).n == 10


def test_scalar_and_vector_channels(paper_dict):
    paper_dict["controller"]["k_zeta"] = [5.0] * 10
    s = scenario_from_dict(paper_dict)
    np.testing.assert_array_equal(s.controller.k_zeta, 5.0)
    paper_dict["controller"]["k_zeta"] = [5.0] * 3
    with pytest.raises(ScenarioError, match="k_zeta"):
        scenario_from_dict(paper_dict)


@pytest.mark.parametrize("edit, match", [
    (lambda d: d.pop("controller"), "controller"),
    (lambda d: d["controller"].pop("task_envelope"), "task_envelope"),
    (lambda d: d["controller"].__setitem__("k_x", -1.0), "gains"),
    (lambda d: d["controller"]["task_envelope"].__setitem__("rho_inf", 2.0), "rho0"),
    (lambda d: d["task"]["force"].__setitem__("kind", "square"), "force"),
    (lambda d: d["task"]["force"].__setitem__("bogus", 1), "force"),
    (lambda d: d["environment"]["noise"].__setitem__("bound", -1), "environment"),
    (lambda d: d["environment"]["wall"].__setitem__("normal", [0, 0, 0]), None),
    (lambda d: d.__setitem__("model", "no_such_model.yaml"), "not found"),
])
def test_invalid_scenarios(paper_dict, edit, match):
    edit(paper_dict)
    with pytest.raises(ScenarioError, match=match):
        validate(scenario_from_dict(paper_dict))


def test_validate_run_section():
    s = paper_scenario()
    for bad in (dict(duration=0.0), dict(h=-1.0), dict(h=20.0), dict(decimation=0), dict(mass_scale=0.0)):
        with pytest.raises(ScenarioError):
            validate(replace(s, **bad))


def test_validate_initial_configuration():
    s = paper_scenario()
    q0 = s.q0.copy()
    q0[6] = 10.0
    with pytest.raises(ScenarioError, match="initial configuration"):
        validate(replace(s, q0=q0))
    with pytest.raises(ScenarioError, match="initial state"):
        validate(replace(s, q0=q0[:5]))


def test_validate_envelope_precondition(paper_dict):
    paper_dict["controller"]["task_envelope"]["rho0"] = [0.3, 1, 1, 0.9, 0.9, 0.9]
    with pytest.raises(ScenarioError, match="precondition"):
        validate(scenario_from_dict(paper_dict))


def test_validate_disturbance_axes(paper_dict):
    paper_dict["environment"]["disturbance"]["axes"] = [0, 12]
    with pytest.raises(ScenarioError, match="axes"):
        validate(scenario_from_dict(paper_dict))


def test_unreadable_files(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2\n")
    with pytest.raises(ScenarioError, match="YAML"):
        load_scenario(bad)
    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="mapping"):
        load_scenario(listy)


def test_with_seed_updates_noise():
    s = paper_scenario().with_seed(5)
    assert s.seed == 5 and s.noise.seed == 5


def test_model_file_errors(tmp_path):
    data = yaml.safe_load(models.data_path("lbv150_4dof.yaml").read_text())
    del data["vehicle"]["mass"]
    with pytest.raises(models.ModelFileError):
        models.model_from_dict(data)


def test_bundled_model_shape(model):
    assert model.n == 10
    assert [j.name for j in model.kinematics.joints] and len(model.links) == 4
    assert model.vehicle.mass == 11.0
