"""Deterministic closed-loop execution and the time-indexed log."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import dynamics as dyn
from . import environment as env
from . import kinematics as kin
from .controller import EnvelopeViolation, PPCController


class SimulationError(RuntimeError):
    """A run aborted; carries the step index and the last logged record."""

    def __init__(self, message: str, step: int, t: float, last_record: dict | None = None,
                 log: "SimLog | None" = None):
        super().__init__(f"step {step} (t={t:.6f}s): {message}")
        self.step = step
        self.t = t
        self.last_record = last_record
        # records kept before the abort
        self.log = log


@dataclass
class Sensed:
    f_true: np.ndarray
    f_meas: np.ndarray
    orientation: np.ndarray | None
    J: np.ndarray
    zeta: np.ndarray
    contact: bool


@dataclass
class UVMSPlant:
    model: dyn.DynamicModel
    plane: env.CompliantPlane
    disturbance_spec: env.DisturbanceSpec
    noise: env.NoiseSpec

    @property
    def n(self) -> int:
        return self.model.n

    n_force = 3
    n_task = 6

    def q_of(self, y) -> np.ndarray:
        return y[:self.n]

    def _wrench(self, t, q):
        p_e, _ = kin.forward_kinematics(q, self.model.kinematics)
        w = env.exerted_wrench(p_e, self.plane)
        return w.as_vector() if w.in_contact else None

    def disturbance(self, t: float) -> np.ndarray:
        return env.disturbance(t, self.disturbance_spec, self.n)

    def sense(self, y, t: float) -> Sensed:
        n = self.n
        q, zeta = y[:n], y[n:]
        km = self.model.kinematics
        p_e, R_e = kin.forward_kinematics(q, km)
        f_true = env.exerted_wrench(p_e, self.plane).f_e
        Jg = kin.geometric_jacobian(q, km)
        _, J = kin._analytical_from(Jg, R_e)
        return Sensed(f_true=f_true,
                      f_meas=env.measure_force(f_true, self.noise, t),
                      orientation=kin.euler_from_rotation(R_e),
                      J=J, zeta=zeta.copy(),
                      contact=self.plane.penetration(p_e) > 0.0)

    def advance(self, y, tau, t: float, h: float) -> np.ndarray:
        n = self.n
        state = dyn.step_state(self.model, dyn.SystemState(y[:n], y[n:]), tau, t, h,
                               wrench=self._wrench, disturbance=self.disturbance)
        return state.as_array()

    def check_state(self, y) -> None:
        self.model.kinematics.check_config(y[:self.n])
        M = dyn.mass_matrix(y[:self.n], self.model)
        if np.linalg.eigvalsh(M)[0] <= 0.0:
            raise dyn.DynamicsError("mass matrix lost positive definiteness")


@dataclass
class PointMassPlant:
    """A mass pressing on a spring wall along x, for the 1-DoF reduction."""

    mass: float
    plane: env.CompliantPlane
    disturbance_spec: env.DisturbanceSpec = field(default_factory=lambda: env.DisturbanceSpec(0.0, 1.0, (0,)))
    noise: env.NoiseSpec = field(default_factory=lambda: env.NoiseSpec(0.0))
    linear_drag: float = 0.0
    quadratic_drag: float = 0.0

    n = 1
    n_force = 1
    n_task = 1

    def q_of(self, y) -> np.ndarray:
        return y[:1]

    def _force(self, x: float) -> float:
        return float(env.exerted_wrench(np.array([x, 0.0, 0.0]), self.plane).f_e[0])

    def disturbance(self, t: float) -> np.ndarray:
        return env.disturbance(t, self.disturbance_spec, 1)

    def sense(self, y, t: float) -> Sensed:
        f_true = np.array([self._force(y[0])])
        return Sensed(f_true=f_true, f_meas=env.measure_force(f_true, self.noise, t),
                      orientation=None, J=np.ones((1, 1)), zeta=y[1:2].copy(),
                      contact=f_true[0] != 0.0)

    def advance(self, y, tau, t: float, h: float) -> np.ndarray:
        tau = float(np.asarray(tau).ravel()[0])

        def f(s, x):
            v = x[1]
            drag = (self.linear_drag + self.quadratic_drag * abs(v)) * v
            acc = (tau - drag - self._force(x[0]) - self.disturbance(s)[0]) / self.mass
            return np.array([v, acc])

        return dyn.rk4_step(f, t, y, h)

    def check_state(self, y) -> None:
        pass


def log_columns(n: int, n_force: int, n_task: int) -> list[str]:
    def block(prefix, size):
        return [f"{prefix}_{i + 1}" for i in range(size)]

    return (["t"] + block("q", n) + block("zeta", n)
            + block("f_true", n_force) + block("f_meas", n_force) + block("f_des", n_force)
            + block("e_x", n_task) + block("rho_x", n_task)
            + block("e_zeta", n) + block("rho_zeta", n)
            + block("tau", n) + ["contact"] + block("delta", n))


@dataclass
class SimLog:
    columns: list[str]
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self._index[name]]

    def block(self, prefix: str) -> np.ndarray:
        idx = [i for c, i in self._index.items() if c.rsplit("_", 1)[0] == prefix]
        return self.data[:, idx]

    def record(self, k: int) -> dict:
        return dict(zip(self.columns, self.data[k].tolist()))


def _record(plant, y, t, s: Sensed, f_des, d, tau) -> np.ndarray:
    return np.concatenate([[t], plant.q_of(y), s.zeta, s.f_true, s.f_meas, f_des,
                           d.e_x, d.rho_x, d.e_zeta, d.rho_zeta, tau,
                           [1.0 if s.contact else 0.0], plant.disturbance(t)])


def simulate(plant, controller: PPCController, y0, duration: float, h: float,
             desired_force: Callable[[float], np.ndarray],
             desired_orientation: Callable[[float], np.ndarray] | None = None,
             decimation: int = 1, actuator_limit: float | None = None,
             check_every_step: bool = False) -> SimLog:
    """Fixed-rate loop: sense, control, clamp, log, integrate.

    The controller runs every integration step with ``tau`` held over the
    step. Records are kept every ``decimation`` steps (the last step is
    always kept). When an envelope is breached the offending sample is
    appended with NaN torques and the partial log rides on the
    :class:`SimulationError`.
    """
    if not h > 0.0:
        raise ValueError("step must be positive")
    if duration < 0.0:
        raise ValueError("duration must be non-negative")
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    n_steps = int(round(duration / h))
    n = plant.n
    columns = log_columns(n, plant.n_force, plant.n_task)
    rows = []
    y = np.asarray(y0, dtype=float).copy()
    last = None
    for k in range(n_steps + 1):
        t = k * h
        s = None
        try:
            if check_every_step:
                plant.check_state(y)
            s = plant.sense(y, t)
            f_des = np.atleast_1d(desired_force(t))
            if s.orientation is None:
                e_x = controller.task_error(s.f_meas, f_des)
            else:
                e_x = controller.task_error(s.f_meas, f_des, s.orientation, desired_orientation(t))
            tau = controller.step(e_x, s.J, s.zeta, t)
            tau = dyn.clamp_torque(tau, actuator_limit)
            row = _record(plant, y, t, s, f_des, controller.last, tau)
            if k % decimation == 0 or k == n_steps:
                rows.append(row)
            last = row
            if k < n_steps:
                y = plant.advance(y, tau, t, h)
        except (EnvelopeViolation, dyn.DynamicsError, kin.KinematicsError) as exc:
            if isinstance(exc, EnvelopeViolation) and s is not None and controller.last is not None \
                    and controller.last.t == t:
                # the breaching sample itself, with no control output
                last = _record(plant, y, t, s, f_des, controller.last, np.full(n, np.nan))
                rows.append(last)
            record = dict(zip(columns, last.tolist())) if last is not None else None
            partial = SimLog(columns, np.array(rows).reshape(-1, len(columns)))
            raise SimulationError(str(exc), k, t, record, partial) from exc
    return SimLog(columns, np.array(rows).reshape(-1, len(columns)))


def export_log(log: SimLog, path, format: str = "csv") -> Path:
    """Write the log as delimited text, 17 significant digits, LF line endings."""
    delimiters = {"csv": ",", "tsv": "\t"}
    if format not in delimiters:
        raise ValueError(f"unknown log format {format!r}")
    sep = delimiters[format]
    path = Path(path)
    lines = [sep.join(log.columns)]
    lines.extend(sep.join(format_float(v) for v in row) for row in log.data)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write log {path}: {exc}") from exc
    return path


def format_float(v: float) -> str:
    return "%.17g" % v


def import_log(path) -> SimLog:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    sep = "\t" if "\t" in text.split("\n", 1)[0] else ","
    reader = csv.reader(text.splitlines(), delimiter=sep)
    header = next(reader)
    rows = [[float(v) for v in r] for r in reader if r]
    return SimLog(header, np.array(rows).reshape(-1, len(header)))
