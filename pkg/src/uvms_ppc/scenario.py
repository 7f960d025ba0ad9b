"""Scenario files: everything needed to replay one closed-loop run."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import environment as env
from . import kinematics as kin
from .controller import ControllerConfig, EnvelopeViolation, PerformanceFunction, PPCController
from .dynamics import DynamicModel
from .models import DEFAULT_MODEL, ModelFileError, load_model
from .simulation import SimLog, UVMSPlant, simulate

PAPER_SCENARIO = "paper_scenario.yaml"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class WallSpec:
    """Wall placement; ``point=None`` puts it at the end-effector's start position."""

    normal: tuple = (-1.0, 0.0, 0.0)
    stiffness: tuple = (2.0, 2.0, 2.0)
    point: tuple | None = None


@dataclass(frozen=True)
class Scenario:
    model_path: str = DEFAULT_MODEL
    wall: WallSpec = field(default_factory=WallSpec)
    disturbance: env.DisturbanceSpec = field(default_factory=env.DisturbanceSpec)
    noise: env.NoiseSpec = field(default_factory=env.NoiseSpec)
    force: env.ForceTrajectory = field(default_factory=env.ForceTrajectory)
    orientation: tuple = (0.0, 0.0, 0.0)
    controller: ControllerConfig | None = None
    q0: np.ndarray | None = None
    zeta0: np.ndarray | None = None
    duration: float = 10.0
    h: float = 1e-3
    decimation: int = 1
    seed: int = 0
    # None disables saturation
    actuator_limit: float | None = None
    mass_scale: float = 1.0
    drag_scale: float = 1.0
    name: str = "scenario"
    base_dir: str | None = None

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed), noise=replace(self.noise, seed=int(seed)))


def load_plant_model(s: Scenario) -> DynamicModel:
    try:
        model = load_model(s.model_path, s.base_dir)
    except (ModelFileError, OSError) as exc:
        raise ScenarioError(str(exc)) from exc
    if s.mass_scale != 1.0 or s.drag_scale != 1.0:
        model = model.scaled(s.mass_scale, s.drag_scale)
    return model


def initial_state(s: Scenario, model: DynamicModel) -> np.ndarray:
    q0 = np.zeros(model.n) if s.q0 is None else np.asarray(s.q0, dtype=float)
    zeta0 = np.zeros(model.n) if s.zeta0 is None else np.asarray(s.zeta0, dtype=float)
    if q0.shape != (model.n,) or zeta0.shape != (model.n,):
        raise ScenarioError(f"initial state needs {model.n} coordinates and {model.n} velocities")
    return np.concatenate([q0, zeta0])


def build_plane(s: Scenario, model: DynamicModel, q0) -> env.CompliantPlane:
    if s.wall.point is None:
        point, _ = kin.forward_kinematics(q0, model.kinematics)
    else:
        point = s.wall.point
    try:
        return env.CompliantPlane(point, s.wall.normal, s.wall.stiffness)
    except ValueError as exc:
        raise ScenarioError(f"wall: {exc}") from exc


def validate(s: Scenario) -> DynamicModel:
    """Check a scenario before running it; returns the plant model it uses."""
    if not s.duration > 0.0:
        raise ScenarioError(f"duration must be positive, got {s.duration}")
    if not s.h > 0.0:
        raise ScenarioError(f"step must be positive, got {s.h}")
    if s.h > s.duration:
        raise ScenarioError("step is longer than the run")
    if int(s.decimation) < 1:
        raise ScenarioError("decimation must be >= 1")
    if s.controller is None:
        raise ScenarioError("scenario has no controller section")
    if s.mass_scale <= 0.0 or s.drag_scale < 0.0:
        raise ScenarioError("plant scale factors must be positive")
    model = load_plant_model(s)
    cfg = s.controller
    if cfg.n_task != 6 or cfg.n != model.n:
        raise ScenarioError(
            f"controller has {cfg.n_task} task and {cfg.n} velocity channels, plant needs 6 and {model.n}")
    y0 = initial_state(s, model)
    q0 = y0[:model.n]
    try:
        model.kinematics.check_config(q0)
    except kin.KinematicsError as exc:
        raise ScenarioError(f"initial configuration: {exc}") from exc
    if bad := [a for a in s.disturbance.axes if not 0 <= a < model.n]:
        raise ScenarioError(f"disturbance axes {bad} outside 0..{model.n - 1}")
    plane = build_plane(s, model, q0)

    # the envelope preconditions use the measured force at t = 0
    plant = UVMSPlant(model, plane, s.disturbance, s.noise)
    sensed = plant.sense(y0, 0.0)
    ctl = PPCController(cfg)
    e_x = ctl.task_error(sensed.f_meas, env.desired_force(0.0, s.force),
                         sensed.orientation, np.asarray(s.orientation, dtype=float))
    try:
        ctl.check_initial(e_x, sensed.J, sensed.zeta, 0.0)
    except EnvelopeViolation as exc:
        raise ScenarioError(f"initial errors violate the envelope preconditions: {exc}") from exc
    return model


def build(s: Scenario):
    """``(plant, controller, y0)`` for a validated scenario."""
    model = validate(s)
    y0 = initial_state(s, model)
    plane = build_plane(s, model, y0[:model.n])
    return UVMSPlant(model, plane, s.disturbance, s.noise), PPCController(s.controller), y0


def run_scenario(s: Scenario, duration: float | None = None) -> SimLog:
    """Validate and run; raises :class:`SimulationError` when the run aborts."""
    if duration is not None:
        s = replace(s, duration=duration)
    plant, controller, y0 = build(s)
    orientation = np.asarray(s.orientation, dtype=float)
    return simulate(plant, controller, y0, s.duration, s.h,
                    desired_force=lambda t: env.desired_force(t, s.force),
                    desired_orientation=lambda t: orientation,
                    decimation=int(s.decimation), actuator_limit=s.actuator_limit)


# --- file format ---------------------------------------------------------

def _channels(value, size: int, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).ravel()
    if arr.size == 1:
        arr = np.full(size, arr[0])
    if arr.size != size:
        raise ScenarioError(f"{what}: expected 1 or {size} values, got {arr.size}")
    return arr


def _envelopes(section: dict, size: int, what: str) -> tuple:
    try:
        rho0 = _channels(section["rho0"], size, f"{what}.rho0")
        rho_inf = _channels(section["rho_inf"], size, f"{what}.rho_inf")
        decay = _channels(section["decay"], size, f"{what}.decay")
    except KeyError as exc:
        raise ScenarioError(f"{what}: missing key {exc}") from None
    try:
        return tuple(PerformanceFunction(float(a), float(b), float(c)) for a, b, c in zip(rho0, rho_inf, decay))
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from exc


def controller_from_dict(data: dict, n: int) -> ControllerConfig:
    try:
        k_x = _channels(data["k_x"], 6, "controller.k_x")
        k_zeta = _channels(data["k_zeta"], n, "controller.k_zeta")
        perf_x = _envelopes(data["task_envelope"], 6, "controller.task_envelope")
        perf_zeta = _envelopes(data["velocity_envelope"], n, "controller.velocity_envelope")
    except KeyError as exc:
        raise ScenarioError(f"controller: missing key {exc}") from None
    x0 = data.get("secondary_velocity")
    try:
        return ControllerConfig(k_x, k_zeta, perf_x, perf_zeta,
                                None if x0 is None else _channels(x0, n, "controller.secondary_velocity"))
    except ValueError as exc:
        raise ScenarioError(f"controller: {exc}") from exc


def _force_from_dict(data: dict) -> env.ForceTrajectory:
    data = dict(data)
    if "period" in data:
        data["omega"] = 2.0 * np.pi / float(data.pop("period"))
    if "direction" in data:
        data["direction"] = tuple(float(v) for v in data["direction"])
    try:
        return env.ForceTrajectory(**data)
    except TypeError as exc:
        raise ScenarioError(f"task.force: {exc}") from None
    except ValueError as exc:
        raise ScenarioError(f"task.force: {exc}") from exc


def scenario_from_dict(data: dict, base_dir=None) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must hold a mapping")
    model_path = str(data.get("model", DEFAULT_MODEL))
    plant = data.get("plant", {}) or {}
    envd = data.get("environment", {}) or {}
    task = data.get("task", {}) or {}
    init = data.get("initial", {}) or {}
    run = data.get("run", {}) or {}

    base = Scenario(model_path=model_path, base_dir=None if base_dir is None else str(base_dir))
    # n is needed for the per-channel controller entries
    try:
        n = load_model(model_path, base_dir).n
    except ModelFileError as exc:
        raise ScenarioError(str(exc)) from exc

    wall = envd.get("wall", {}) or {}
    point = wall.get("point", "auto")
    try:
        wall_spec = WallSpec(
            normal=tuple(float(v) for v in wall.get("normal", WallSpec.normal)),
            stiffness=tuple(_channels(wall.get("stiffness", 2.0), 3, "environment.wall.stiffness")),
            point=None if point in (None, "auto") else tuple(float(v) for v in point),
        )
        dist = envd.get("disturbance", {}) or {}
        omega = dist.get("omega")
        if omega is None:
            omega = 2.0 * np.pi / float(dist.get("period", 7.0))
        disturbance = env.DisturbanceSpec(float(dist.get("amplitude", 0.15)), float(omega),
                                          tuple(dist.get("axes", (0, 1, 2))))
        seed = int(run.get("seed", 0))
        noise = env.NoiseSpec(float((envd.get("noise", {}) or {}).get("bound", 0.01)), seed)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"environment: {exc}") from exc

    if "controller" not in data:
        raise ScenarioError("scenario has no controller section")
    ctrl = data["controller"] or {}
    cfg = controller_from_dict(ctrl, n)

    q0 = np.concatenate([
        _channels(init.get("vehicle_position", [0.0, 0.0, 0.0]), 3, "initial.vehicle_position"),
        _channels(init.get("vehicle_attitude", [0.0, 0.0, 0.0]), 3, "initial.vehicle_attitude"),
        _channels(init.get("joints", [0.0] * (n - 6)), n - 6, "initial.joints"),
    ])
    zeta0 = _channels(init.get("velocity", 0.0), n, "initial.velocity")

    return replace(
        base,
        name=str(data.get("name", "scenario")),
        wall=wall_spec,
        disturbance=disturbance,
        noise=noise,
        force=_force_from_dict(task.get("force", {}) or {}),
        orientation=tuple(_channels(task.get("orientation", 0.0), 3, "task.orientation")),
        controller=cfg,
        q0=q0,
        zeta0=zeta0,
        duration=float(run.get("duration", 10.0)),
        h=float(run.get("step", 1e-3)),
        decimation=int(run.get("decimation", 1)),
        seed=seed,
        actuator_limit=None if ctrl.get("actuator_limit") is None else float(ctrl["actuator_limit"]),
        mass_scale=float(plant.get("mass_scale", 1.0)),
        drag_scale=float(plant.get("drag_scale", 1.0)),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    return scenario_from_dict(data, base_dir=path.parent)


def scenario_text(name: str = PAPER_SCENARIO) -> str:
    from .models import data_path
    return data_path(name).read_text(encoding="utf-8")


def paper_scenario() -> Scenario:
    """The bundled force-tracking scenario (wall stiffness 2, sinusoidal force, tilted start)."""
    from .models import data_path
    return load_scenario(data_path(PAPER_SCENARIO))
