"""Loading kinematic/dynamic model files (YAML)."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .dynamics import DynamicModel, RigidBody
from .kinematics import Joint, KinematicModel

DEFAULT_MODEL = "lbv150_4dof.yaml"


class ModelFileError(ValueError):
    pass


def data_path(name: str) -> Path:
    return Path(str(resources.files("uvms_ppc") / "data" / name))


def resolve_model_path(path, base_dir=None) -> Path:
    """Find a model file: as given, relative to ``base_dir``, then among the bundled models."""
    p = Path(path)
    candidates = [p]
    if base_dir is not None and not p.is_absolute():
        candidates.insert(0, Path(base_dir) / p)
    candidates.append(data_path(p.name))
    for c in candidates:
        if c.is_file():
            return c
    raise ModelFileError(f"model file not found: {path}")


def _body(section: dict, where: str) -> RigidBody:
    try:
        return RigidBody(
            mass=float(section["mass"]),
            com=section.get("com", [0.0, 0.0, 0.0]),
            inertia=section.get("inertia", [0.0, 0.0, 0.0]),
            volume=float(section.get("volume", 0.0)),
            cob=section.get("cob", section.get("com", [0.0, 0.0, 0.0])),
        )
    except KeyError as exc:
        raise ModelFileError(f"{where}: missing key {exc}") from None


def kinematic_model_from_dict(data: dict) -> KinematicModel:
    arm = data.get("arm")
    if not arm or not arm.get("joints"):
        raise ModelFileError("model needs an 'arm' section with at least one joint")
    joints = []
    for i, js in enumerate(arm["joints"]):
        try:
            joints.append(Joint(
                name=str(js.get("name", f"joint{i + 1}")),
                axis=js["axis"],
                offset=js.get("offset", [0.0, 0.0, 0.0]),
                rpy=js.get("rpy", [0.0, 0.0, 0.0]),
                limits=tuple(js.get("limits", [-np.pi, np.pi])),
            ))
        except KeyError as exc:
            raise ModelFileError(f"arm.joints[{i}]: missing key {exc}") from None
    mount = arm.get("mount", {})
    ee = arm.get("end_effector", {})
    return KinematicModel(
        joints=tuple(joints),
        mount_offset=mount.get("offset", [0.0, 0.0, 0.0]),
        mount_rpy=mount.get("rpy", [0.0, 0.0, 0.0]),
        ee_offset=ee.get("offset", [0.0, 0.0, 0.0]),
        ee_rpy=ee.get("rpy", [0.0, 0.0, 0.0]),
        euler_margin=float(data.get("euler_margin", 0.1)),
    )


def model_from_dict(data: dict) -> DynamicModel:
    kin = kinematic_model_from_dict(data)
    if "vehicle" not in data:
        raise ModelFileError("model needs a 'vehicle' section")
    veh = data["vehicle"]
    joints = data["arm"]["joints"]
    try:
        linear = list(veh["linear_drag"]) + [float(j.get("linear_drag", 0.0)) for j in joints]
        quadratic = list(veh["quadratic_drag"]) + [float(j.get("quadratic_drag", 0.0)) for j in joints]
        added = veh["added_mass"]
    except KeyError as exc:
        raise ModelFileError(f"vehicle: missing key {exc}") from None
    limit = data.get("actuator_limit", 200.0)
    return DynamicModel(
        kinematics=kin,
        vehicle=_body(veh, "vehicle"),
        links=tuple(_body(j, f"arm.joints[{i}]") for i, j in enumerate(joints)),
        added_mass=added,
        linear_drag=linear,
        quadratic_drag=quadratic,
        armature=[float(j.get("armature", 0.0)) for j in joints],
        fluid_density=float(data.get("fluid_density", 1000.0)),
        gravity=float(data.get("gravity", 9.81)),
        actuator_limit=None if limit is None else float(limit),
    )


def load_model(path=DEFAULT_MODEL, base_dir=None) -> DynamicModel:
    resolved = resolve_model_path(path, base_dir)
    with open(resolved, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ModelFileError(f"{resolved}: expected a mapping at top level")
    return model_from_dict(data)


def load_kinematic_model(path=DEFAULT_MODEL, base_dir=None) -> KinematicModel:
    with open(resolve_model_path(path, base_dir), encoding="utf-8") as fh:
        return kinematic_model_from_dict(yaml.safe_load(fh))
