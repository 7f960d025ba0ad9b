import ast
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

import uvms_ppc.controller as ctl

PF = ctl.PerformanceFunction(1.0, 0.2, 3.0)


def unit_config(n=1, k_x=0.2, k_zeta=5.0):
    return ctl.ControllerConfig(k_x=[k_x] * n, k_zeta=[k_zeta] * n,
                                perf_x=(ctl.PerformanceFunction(1.0, 0.2, 1e-9),) * n,
                                perf_zeta=(ctl.PerformanceFunction(1.0, 0.2, 1e-9),) * n)


def test_perf_value_examples():
    assert ctl.perf_value(PF, 0.0) == 1.0
    assert ctl.perf_value(PF, 1e3) == pytest.approx(0.2)
    assert ctl.perf_value(PF, 1.0) == pytest.approx(0.239829, abs=1e-6)


def test_perf_derivative_matches_differences():
    h = 1e-6
    for t in (0.0 + h, 0.3, 1.0, 2.5):
        fd = (PF.value(t + h) - PF.value(t - h)) / (2 * h)
        assert PF.derivative(t) == pytest.approx(fd, rel=1e-7)


def test_performance_function_validation():
    with pytest.raises(ValueError):
        ctl.PerformanceFunction(0.2, 0.3, 1.0)
    with pytest.raises(ValueError):
        ctl.PerformanceFunction(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ctl.PerformanceFunction(1.0, 0.2, 0.0)


def test_normalize_error_examples():
    assert ctl.normalize_error(0.0, 1.0) == 0.0
    assert ctl.normalize_error(0.5, 1.0) == 0.5
    with pytest.raises(ctl.EnvelopeViolation) as info:
        ctl.normalize_error(0.3, 0.239829)
    assert info.value.error == 0.3
    with pytest.raises(ValueError):
        ctl.normalize_error(0.1, 0.0)


def test_normalize_error_reports_channel_and_time():
    with pytest.raises(ctl.EnvelopeViolation) as info:
        ctl.normalize_error([0.1, -2.0, 0.0], [1.0, 1.0, 1.0], level="task", t=0.25)
    assert info.value.channel == 1
    assert "channel 2" in str(info.value) and "t=0.250000" in str(info.value)


def test_boundary_value_is_a_violation():
    with pytest.raises(ctl.EnvelopeViolation):
        ctl.normalize_error(1.0, 1.0)


def test_transform_examples():
    assert ctl.transform_error(0.0) == 0.0
    assert ctl.transform_error(0.5) == pytest.approx(1.098612, abs=1e-6)
    assert ctl.transform_error(-0.5) == pytest.approx(-1.098612, abs=1e-6)
    with pytest.raises(ValueError):
        ctl.transform_error(1.0)
    with pytest.raises(ValueError):
        ctl.transform_error(np.nan)


def test_modulation_examples():
    assert ctl.modulation_gain(0.0) == 2.0
    assert ctl.modulation_gain(0.5) == pytest.approx(8 / 3)
    with pytest.raises(ValueError):
        ctl.modulation_gain(-1.0)


def test_modulation_is_transform_derivative():
    h = 1e-6
    fd = (ctl.transform_error(0.3 + h) - ctl.transform_error(0.3 - h)) / (2 * h)
    assert fd == pytest.approx(2.19780, abs=1e-5)
    assert ctl.modulation_gain(0.3) == pytest.approx(fd, abs=1e-5)
    grid = np.linspace(-0.999, 0.999, 2001)
    fd = (ctl.transform_error(grid + h) - ctl.transform_error(grid - h)) / (2 * h)
    assert np.max(np.abs(fd - ctl.modulation_gain(grid)) / ctl.modulation_gain(grid)) < 1e-5


@given(st.floats(-0.999, 0.999))
def test_transform_odd_and_increasing(xi):
    assert ctl.transform_error(-xi) == -ctl.transform_error(xi)
    assert ctl.transform_error(min(xi + 1e-4, 0.9999)) >= ctl.transform_error(xi)


def test_reference_velocity_examples():
    cfg = unit_config()
    assert ctl.reference_velocity([0.0], 0.0, cfg)[0] == 0.0
    assert ctl.reference_velocity([0.5], 0.0, cfg)[0] == pytest.approx(-0.219722, abs=1e-6)
    assert ctl.reference_velocity([-0.5], 0.0, cfg)[0] == pytest.approx(0.219722, abs=1e-6)


def test_joint_reference_examples(rng):
    J = np.hstack([np.eye(6), np.zeros((6, 4))])
    np.testing.assert_array_equal(ctl.joint_reference(J, np.zeros(6), np.zeros(10)), np.zeros(10))
    np.testing.assert_allclose(ctl.joint_reference(J, np.eye(6)[0]), np.eye(10)[0])
    J = rng.normal(size=(6, 10))
    x = rng.normal(size=6)
    np.testing.assert_allclose(J @ ctl.joint_reference(J, x), x, atol=1e-9)


def test_torque_law_examples():
    cfg = unit_config()
    assert ctl.torque_law([0.0], 0.0, cfg)[0] == 0.0
    assert ctl.torque_law([0.5], 0.0, cfg)[0] == pytest.approx(-5 * (8 / 3) * np.log(3), rel=1e-12)
    assert ctl.torque_law([0.5], 0.0, cfg)[0] == pytest.approx(-14.648, abs=1e-3)


def test_torque_grows_monotonically_toward_the_envelope():
    cfg = unit_config()
    mags = [abs(ctl.torque_law([xi], 0.0, cfg)[0]) for xi in (0.9, 0.99, 0.999)]
    assert mags[0] < mags[1] < mags[2]


def test_torque_is_odd(rng):
    cfg = ctl.paper_config()
    e = rng.uniform(-0.15, 0.15, 10)
    np.testing.assert_array_equal(ctl.torque_law(-e, 0.7, cfg), -ctl.torque_law(e, 0.7, cfg))


def test_config_validation():
    with pytest.raises(ValueError):
        ctl.ControllerConfig(k_x=[0.0], k_zeta=[1.0], perf_x=(PF,), perf_zeta=(PF,))
    with pytest.raises(ValueError):
        ctl.ControllerConfig(k_x=[1.0, 1.0], k_zeta=[1.0], perf_x=(PF,), perf_zeta=(PF,))
    with pytest.raises(ValueError):
        ctl.ControllerConfig(k_x=[1.0], k_zeta=[1.0], perf_x=(PF,), perf_zeta=(PF,), x0_dot=[1.0, 2.0])


def test_paper_config_values():
    cfg = ctl.paper_config()
    np.testing.assert_allclose(cfg.rho_x(0.0), [1, 1, 1, 0.9, 0.9, 0.9])
    np.testing.assert_allclose(cfg.rho_zeta(1e3), [0.2] * 6 + [0.4] * 4)
    np.testing.assert_array_equal(cfg.k_x, 0.2)
    np.testing.assert_array_equal(cfg.k_zeta, 5.0)


def test_zero_errors_give_zero_torque():
    c = ctl.PPCController(ctl.paper_config())
    J = np.hstack([np.eye(6), np.zeros((6, 4))])
    np.testing.assert_array_equal(c.step(np.zeros(6), J, np.zeros(10), 0.0), np.zeros(10))


def test_initial_condition_inside_envelopes():
    c = ctl.PPCController(ctl.paper_config())
    e_x = c.task_error([0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.2, 0.2, -0.2], np.zeros(3))
    np.testing.assert_allclose(e_x, [-0.4, 0, 0, 0.2, 0.2, -0.2])
    J = np.hstack([np.eye(6), np.zeros((6, 4))])
    c.check_initial(e_x, J, np.zeros(10))
    assert np.all(np.abs(c.last.xi_x) < 1.0)


def test_initial_condition_rejected_with_tight_envelope():
    cfg = ctl.paper_config()
    tight = ctl.ControllerConfig(cfg.k_x, cfg.k_zeta,
                                 (ctl.PerformanceFunction(0.3, 0.2, 3.0),) + cfg.perf_x[1:], cfg.perf_zeta)
    c = ctl.PPCController(tight)
    J = np.hstack([np.eye(6), np.zeros((6, 4))])
    with pytest.raises(ctl.EnvelopeViolation) as info:
        c.check_initial([-0.4, 0, 0, 0.2, 0.2, -0.2], J, np.zeros(10))
    assert info.value.level == "task" and info.value.channel == 0
    assert np.isnan(c.last.tau).all()


def test_static_law_is_bitwise_repeatable(rng):
    c = ctl.PPCController(ctl.paper_config())
    J = rng.normal(size=(6, 10))
    e_x = rng.uniform(-0.1, 0.1, 6)
    zeta = rng.uniform(-0.05, 0.05, 10)
    first = c.step(e_x, J, zeta, 0.42)
    assert np.array_equal(first, c.step(e_x, J, zeta, 0.42))
    assert np.array_equal(first, ctl.PPCController(ctl.paper_config()).step(e_x, J, zeta, 0.42))


def test_control_step_needs_kinematics():
    with pytest.raises(RuntimeError):
        ctl.PPCController(ctl.paper_config()).control_step(np.zeros(3), np.zeros(3), np.zeros(10), np.zeros(10), 0.0)


def test_control_step_uses_the_analytical_jacobian(kmodel, q_start):
    from uvms_ppc import kinematics as kin
    c = ctl.PPCController(ctl.paper_config(), kinematic_model=kmodel,
                          desired_force=lambda t: np.array([0.4, 0.0, 0.0]))
    ori = kin.end_effector_coordinates(q_start, kmodel)[3:]
    tau = c.control_step(np.array([0.1, 0.0, 0.0]), ori, q_start, np.zeros(10), 0.0)
    J = kin.analytical_jacobian(q_start, kmodel)
    np.testing.assert_array_equal(tau, c.step(c.last.e_x, J, np.zeros(10), 0.0))


def test_velocity_violation_keeps_diagnostics():
    c = ctl.PPCController(ctl.paper_config())
    J = np.hstack([np.eye(6), np.zeros((6, 4))])
    zeta = np.zeros(10)
    zeta[7] = 5.0
    with pytest.raises(ctl.EnvelopeViolation) as info:
        c.step(np.zeros(6), J, zeta, 0.0)
    assert info.value.level == "velocity" and info.value.channel == 7
    assert c.last.e_zeta[7] == 5.0 and np.isnan(c.last.tau).all()


def test_controller_module_is_model_free():
    src = Path(ctl.__file__).read_text(encoding="utf-8")
    imported = set()
    for node in ast.walk(ast.parse(src)):
        if isinstance(node, ast.ImportFrom):
            imported.add((node.level, node.module))
        elif isinstance(node, ast.Import):
            imported.update((0, a.name) for a in node.names)
    local = {mod for level, mod in imported if level > 0}
    assert local == {None}  # only "from . import kinematics"
    assert not {m for _, m in imported if m and ("dynamics" in m or "environment" in m or "simulation" in m)}
    names = {n.id for n in ast.walk(ast.parse(src)) if isinstance(n, ast.Name)}
    assert not names & {"DynamicModel", "CompliantPlane", "mass_matrix", "restoring_force"}
