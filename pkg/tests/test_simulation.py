from dataclasses import replace

import numpy as np
import pytest

from uvms_ppc import environment as env
from uvms_ppc.scenario import paper_scenario, run_scenario
from uvms_ppc.simulation import (PointMassPlant, SimLog, SimulationError, export_log, import_log,
                                 log_columns, simulate)
from uvms_ppc.verification import OracleConfig, envelope_battery, first_violation
from uvms_ppc.verification.batteries import run_stack_1dof, stack_config_1dof
from uvms_ppc.controller import PPCController


def point_mass_run(duration=1.0, decimation=1, noise=0.01, seed=0):
    cfg = OracleConfig(noise_bound=noise, seed=seed, duration=duration)
    plant = PointMassPlant(1.0, env.CompliantPlane([0, 0, 0], [-1, 0, 0], 2.0),
                           env.DisturbanceSpec(0.15, 2 * np.pi / 7, (0,)), env.NoiseSpec(noise, seed))
    return simulate(plant, PPCController(stack_config_1dof(cfg)), [0.0, 0.0], duration, 1e-3,
                    desired_force=lambda t: env.desired_force(t)[:1], decimation=decimation)


@pytest.fixture(scope="module")
def short_paper_log():
    return run_scenario(paper_scenario(), duration=0.05)


def test_log_columns_order():
    cols = log_columns(1, 1, 1)
    assert cols == ["t", "q_1", "zeta_1", "f_true_1", "f_meas_1", "f_des_1", "e_x_1", "rho_x_1",
                    "e_zeta_1", "rho_zeta_1", "tau_1", "contact", "delta_1"]
    assert len(log_columns(10, 3, 6)) == 1 + 10 + 10 + 9 + 6 + 6 + 10 + 10 + 10 + 1 + 10


def test_paper_run_records(short_paper_log):
    log = short_paper_log
    assert len(log) == 51
    np.testing.assert_allclose(log.t, np.arange(51) * 1e-3, atol=1e-15)
    np.testing.assert_allclose(log.record(0)["f_des_1"], 0.4)
    np.testing.assert_allclose(log.block("e_x")[0, 3:], [0.2, 0.2, -0.2], atol=1e-12)
    assert envelope_battery(log).passed


def test_paper_run_bitwise_replay(short_paper_log):
    again = run_scenario(paper_scenario(), duration=0.05)
    assert np.array_equal(again.data, short_paper_log.data)


def test_different_seed_changes_measurements(short_paper_log):
    other = run_scenario(paper_scenario().with_seed(9), duration=0.05)
    assert not np.array_equal(other.column("f_meas_1"), short_paper_log.column("f_meas_1"))
    np.testing.assert_array_equal(other.column("f_true_1")[:1], short_paper_log.column("f_true_1")[:1])


def test_export_round_trip_is_exact(tmp_path, short_paper_log):
    for fmt in ("csv", "tsv"):
        path = export_log(short_paper_log, tmp_path / f"log.{fmt}", fmt)
        back = import_log(path)
        assert back.columns == short_paper_log.columns
        assert np.array_equal(back.data, short_paper_log.data)


def test_export_line_counts(tmp_path):
    cols = log_columns(1, 1, 1)
    empty = export_log(SimLog(cols, np.empty((0, len(cols)))), tmp_path / "empty.csv")
    assert empty.read_text().splitlines() == [",".join(cols)]
    assert len(import_log(empty)) == 0
    three = export_log(SimLog(cols, np.arange(3.0 * len(cols)).reshape(3, -1)), tmp_path / "three.csv")
    assert len(three.read_text().splitlines()) == 4


def test_export_rejects_bad_format_and_path(tmp_path):
    log = SimLog(["t"], np.zeros((1, 1)))
    with pytest.raises(ValueError):
        export_log(log, tmp_path / "x.json", "json")
    with pytest.raises(OSError):
        export_log(log, tmp_path / "missing" / "x.csv")


def test_decimation_only_thins_the_log():
    full = point_mass_run(duration=0.5)
    thin = point_mass_run(duration=0.5, decimation=7)
    idx = list(range(0, 501, 7)) + [500]
    assert np.array_equal(thin.data, full.data[sorted(set(idx))])


def test_zero_duration_gives_a_single_record():
    log = point_mass_run(duration=0.0)
    assert len(log) == 1 and log.t[0] == 0.0


def test_simulate_argument_checks():
    with pytest.raises(ValueError):
        point_mass_run(decimation=0)
    with pytest.raises(ValueError):
        point_mass_run(duration=-1.0)


def test_noise_free_point_mass_stays_in_envelopes():
    log = point_mass_run(duration=3.0, noise=0.0)
    report = envelope_battery(log)
    assert report.passed, report.summary()
    assert first_violation(log) is None


def test_stack_matches_helper():
    cfg = OracleConfig(noise_bound=0.01, dist_amplitude=0.15, duration=0.5)
    assert np.array_equal(run_stack_1dof(cfg).data, point_mass_run(duration=0.5).data)


def test_abort_keeps_partial_log_with_breach_row():
    s = paper_scenario()
    with pytest.raises(SimulationError) as info:
        run_scenario(s, duration=0.3)
    exc = info.value
    log = exc.log
    assert len(log) == exc.step + 1
    assert np.isnan(log.block("tau")[-1]).all()
    assert not np.isnan(log.block("tau")[-2]).any()
    level, channel, t = first_violation(log)
    assert t == pytest.approx(exc.t)
    assert not envelope_battery(log).passed
    assert exc.last_record["t"] == pytest.approx(exc.t)


def test_actuator_limit_clamps_logged_torque():
    s = replace(paper_scenario(), actuator_limit=1.0)
    log = run_scenario(s, duration=0.02)
    assert np.abs(log.block("tau")).max() <= 1.0
