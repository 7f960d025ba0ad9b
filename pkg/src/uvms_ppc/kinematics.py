"""Kinematics of the vehicle-manipulator system.

Conventions: inertial frame is NED (z down), vehicle attitude uses ZYX
roll-pitch-yaw Euler angles, and the velocity vector ``zeta`` stacks the
vehicle body twist ``[u, v, w, p, q, r]`` followed by the joint rates.
Generalized coordinates ``q`` stack ``[x, y, z, phi, theta, psi]`` and the
joint angles.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SINGULARITY_COS = 1e-6
PINV_RTOL = 1e-8


class KinematicsError(ValueError):
    pass


class SingularityError(KinematicsError):
    """Raised when an Euler-angle representation singularity is hit."""


def wrap_angle(a):
    """Wrap angles to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


def skew(v):
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def _cross_rows(a, b):
    # np.cross is slow for small arrays
    return np.stack([a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
                     a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
                     a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]], axis=-1)


def rotation_zyx(eta2):
    """Body-to-inertial rotation ``Rz(psi) @ Ry(theta) @ Rx(phi)``."""
    phi, theta, psi = eta2
    cphi, sphi = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cpsi, spsi = np.cos(psi), np.sin(psi)
    return np.array([
        [cpsi * cth, -spsi * cphi + cpsi * sth * sphi, spsi * sphi + cpsi * cphi * sth],
        [spsi * cth, cpsi * cphi + sphi * sth * spsi, -cpsi * sphi + sth * spsi * cphi],
        [-sth, cth * sphi, cth * cphi],
    ])


def euler_from_rotation(R):
    """ZYX Euler angles ``[phi, theta, psi]`` of a rotation matrix."""
    phi = np.arctan2(R[2, 1], R[2, 2])
    theta = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    psi = np.arctan2(R[1, 0], R[0, 0])
    return np.array([phi, theta, psi])


def axis_rotation(axis, angle):
    """Rodrigues rotation about a unit ``axis``; ``angle`` may be batched."""
    K = skew(axis)
    angle = np.asarray(angle, dtype=float)
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


@dataclass(frozen=True)
class VehiclePose:
    eta1: np.ndarray
    eta2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta1", np.asarray(self.eta1, dtype=float).reshape(3))
        object.__setattr__(self, "eta2", wrap_angle(np.asarray(self.eta2, dtype=float).reshape(3)))

    def validate(self, margin: float = 0.1) -> None:
        if abs(self.eta2[1]) >= np.pi / 2 - margin:
            raise SingularityError(
                f"pitch {self.eta2[1]:.6f} rad within {margin} rad of the Euler singularity")


@dataclass(frozen=True)
class Configuration:
    vehicle: VehiclePose
    joints: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "joints", np.asarray(self.joints, dtype=float).ravel())

    @property
    def n(self) -> int:
        return 6 + self.joints.size

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([self.vehicle.eta1, self.vehicle.eta2, self.joints])

    @classmethod
    def from_vector(cls, q) -> "Configuration":
        q = np.asarray(q, dtype=float)
        return cls(VehiclePose(q[:3], q[3:6]), q[6:])


def as_vector(config) -> np.ndarray:
    """Accept a :class:`Configuration` or a plain coordinate vector."""
    if isinstance(config, Configuration):
        return config.q
    return np.asarray(config, dtype=float)


@dataclass(frozen=True)
class Joint:
    name: str
    axis: np.ndarray
    offset: np.ndarray
    rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    limits: tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise KinematicsError(f"joint {self.name!r} has a zero axis")
        object.__setattr__(self, "axis", axis / norm)
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(3))
        object.__setattr__(self, "rpy", np.asarray(self.rpy, dtype=float).reshape(3))
        lo, hi = self.limits
        if not lo < hi:
            raise KinematicsError(f"joint {self.name!r} has empty limits {self.limits}")
        object.__setattr__(self, "limits", (float(lo), float(hi)))


@dataclass(frozen=True)
class KinematicModel:
    """Serial revolute arm mounted on the vehicle.

    Each joint frame is reached from its parent by translating ``offset``
    (parent coordinates), applying the fixed ``rpy`` rotation and then the
    joint rotation about ``axis``. The first parent is the mount frame.
    """

    joints: tuple[Joint, ...]
    mount_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mount_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ee_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ee_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler_margin: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        for name in ("mount_offset", "mount_rpy", "ee_offset", "ee_rpy"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        if not self.joints:
            raise KinematicsError("the arm needs at least one joint (n >= 7)")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @cached_property
    def _constants(self):
        # fixed rotations and Rodrigues factors, reused by every arm_frames call
        fixed = [rotation_zyx(j.rpy) for j in self.joints]
        K = [skew(j.axis) for j in self.joints]
        return (rotation_zyx(self.mount_rpy), rotation_zyx(self.ee_rpy), fixed,
                K, [k @ k for k in K], [f @ j.axis for f, j in zip(fixed, self.joints)])

    @property
    def n(self) -> int:
        return 6 + len(self.joints)

    def check_config(self, config, margin: float | None = None) -> None:
        q = as_vector(config)
        if q.shape != (self.n,):
            raise KinematicsError(f"configuration has {q.size} entries, model expects {self.n}")
        VehiclePose(q[:3], q[3:6]).validate(self.euler_margin if margin is None else margin)
        for joint, angle in zip(self.joints, q[6:]):
            lo, hi = joint.limits
            if not lo <= angle <= hi:
                raise KinematicsError(f"joint {joint.name!r} angle {angle:.4f} outside {joint.limits}")


def arm_frames(model: KinematicModel, qm):
    """Joint frames and end-effector frame in vehicle body coordinates.

    ``qm`` may carry leading batch dimensions. Returns ``(R, p, z)`` where
    ``R[..., i]``/``p[..., i]`` are the orientation and origin of joint frame
    ``i`` (index ``n_joints`` is the end-effector) and ``z[..., i]`` the joint
    axes.
    """
    qm = np.asarray(qm, dtype=float)
    if qm.ndim == 1:
        key = qm.tobytes()
        cached = getattr(_FRAME_CACHE, "entry", None)
        if cached is not None and cached[0] is model and cached[1] == key:
            return cached[2]
        value = _arm_frames(model, qm)
        for a in value:
            a.flags.writeable = False
        _FRAME_CACHE.entry = (model, key, value)
        return value
    return _arm_frames(model, qm)


# last single-pose result per thread; sensing, contact and Jacobian calls repeat a pose
_FRAME_CACHE = threading.local()


def _arm_frames(model: KinematicModel, qm):
    batch = qm.shape[:-1]
    nj = model.n_joints
    R_mount, R_ee, fixed, K, KK, axes = model._constants
    R = np.empty(batch + (nj + 1, 3, 3))
    p = np.empty(batch + (nj + 1, 3))
    z = np.empty(batch + (nj, 3))
    R_prev = R_mount
    p_prev = model.mount_offset
    sq = np.sin(qm)[..., None, None]
    cq = 1.0 - np.cos(qm)[..., None, None]
    for i, joint in enumerate(model.joints):
        p_i = p_prev + R_prev @ joint.offset
        R_fixed = R_prev @ fixed[i]
        z[..., i, :] = R_fixed @ axes[i]
        R_prev = R_fixed @ (np.eye(3) + sq[..., i, :, :] * K[i] + cq[..., i, :, :] * KK[i])
        p_prev = p_i
        R[..., i, :, :] = R_prev
        p[..., i, :] = p_i
    p[..., nj, :] = p_prev + R_prev @ model.ee_offset
    R[..., nj, :, :] = R_prev @ R_ee
    return R, p, z


def forward_kinematics(config, model: KinematicModel):
    """End-effector position and rotation in the inertial frame."""
    q = as_vector(config)
    R_ib = rotation_zyx(q[3:6])
    R, p, _ = arm_frames(model, q[6:])
    return q[:3] + R_ib @ p[-1], R_ib @ R[-1]


def end_effector_coordinates(config, model: KinematicModel) -> np.ndarray:
    """Task coordinates ``[position; ZYX Euler angles]`` of the end-effector."""
    p_e, R_e = forward_kinematics(config, model)
    return np.concatenate([p_e, euler_from_rotation(R_e)])


def euler_rate_matrix(pose) -> np.ndarray:
    """Map from Euler-angle rates to body-frame angular velocity.

    Accepts a :class:`VehiclePose` or a bare ``[phi, theta, psi]`` triple.
    """
    eta2 = pose.eta2 if isinstance(pose, VehiclePose) else np.asarray(pose, dtype=float)
    phi, theta = eta2[0], eta2[1]
    return np.array([
        [1.0, 0.0, -np.sin(theta)],
        [0.0, np.cos(phi), np.cos(theta) * np.sin(phi)],
        [0.0, -np.sin(phi), np.cos(theta) * np.cos(phi)],
    ])


def euler_rate_transform(eta2) -> np.ndarray:
    """Inverse of :func:`euler_rate_matrix`: body angular velocity to Euler rates."""
    phi, theta = eta2[0], eta2[1]
    cth = np.cos(theta)
    if abs(cth) < SINGULARITY_COS:
        raise SingularityError(f"cos(theta) = {cth:.3e}: Euler-rate map is singular")
    sphi, cphi, tth = np.sin(phi), np.cos(phi), np.tan(theta)
    return np.array([
        [1.0, sphi * tth, cphi * tth],
        [0.0, cphi, -sphi],
        [0.0, sphi / cth, cphi / cth],
    ])


def vehicle_jacobian(pose) -> np.ndarray:
    """Body-to-inertial velocity map ``blockdiag(J_t, J_r)`` of the vehicle."""
    eta2 = pose.eta2 if isinstance(pose, VehiclePose) else np.asarray(pose, dtype=float)
    Ja = np.zeros((6, 6))
    Ja[:3, :3] = rotation_zyx(eta2)
    Ja[3:, 3:] = euler_rate_transform(eta2)
    return Ja


def geometric_jacobian(config, model: KinematicModel) -> np.ndarray:
    """6 x n map from ``zeta`` to inertial end-effector linear/angular velocity."""
    q = as_vector(config)
    if q.shape != (model.n,):
        raise KinematicsError(f"configuration has {q.size} entries, model expects {model.n}")
    R_ib = rotation_zyx(q[3:6])
    _, p, z = arm_frames(model, q[6:])
    p_e_body = p[-1]
    Jg = np.zeros((6, model.n))
    Jg[:3, :3] = R_ib
    Jg[:3, 3:6] = -R_ib @ skew(p_e_body)
    Jg[3:, 3:6] = R_ib
    z_in = z @ R_ib.T
    r_in = (p_e_body - p[:-1]) @ R_ib.T
    Jg[:3, 6:] = _cross_rows(z_in, r_in).T
    Jg[3:, 6:] = z_in.T
    return Jg


@dataclass(frozen=True)
class JacobianSet:
    Ja: np.ndarray
    Jg: np.ndarray
    Jprime: np.ndarray
    J: np.ndarray


def _analytical_from(Jg: np.ndarray, R_e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    euler_e = euler_from_rotation(R_e)
    Jpp = euler_rate_matrix(euler_e)
    Jprime = np.eye(6)
    Jprime[3:, 3:] = R_e @ Jpp
    # (R_e J'')^-1 = J''^-1 R_e^T
    J = Jg.copy()
    J[3:] = euler_rate_transform(euler_e) @ (R_e.T @ Jg[3:])
    return Jprime, J


def analytical_jacobian(config, model: KinematicModel) -> np.ndarray:
    """Map from ``zeta`` to the rate of ``[position; Euler angles]`` of the end-effector."""
    Jg = geometric_jacobian(config, model)
    _, R_e = forward_kinematics(config, model)
    return _analytical_from(Jg, R_e)[1]


def jacobian_set(config, model: KinematicModel) -> JacobianSet:
    q = as_vector(config)
    Jg = geometric_jacobian(q, model)
    _, R_e = forward_kinematics(q, model)
    Jprime, J = _analytical_from(Jg, R_e)
    return JacobianSet(Ja=vehicle_jacobian(q[3:6]), Jg=Jg, Jprime=Jprime, J=J)


def pseudo_inverse(J, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse by SVD.

    Singular values below ``rtol * sigma_max`` are treated as zero, so
    rank-deficient inputs get the truncated (minimum-norm) inverse.
    """
    J = np.asarray(J, dtype=float)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(J.T.shape)
    keep = s > rtol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def nullspace_projector(J, J_pinv=None) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J_pinv is None:
        J_pinv = pseudo_inverse(J)
    return np.eye(J.shape[1]) - J_pinv @ J


def nullspace_projected_velocity(J, x_dot_r, x_dot_0=None) -> np.ndarray:
    """``J+ x_dot_r + (I - J+ J) x_dot_0``; the second term never moves the task."""
    J = np.asarray(J, dtype=float)
    J_pinv = pseudo_inverse(J)
    zeta_r = J_pinv @ np.asarray(x_dot_r, dtype=float)
    if x_dot_0 is not None:
        zeta_r = zeta_r + nullspace_projector(J, J_pinv) @ np.asarray(x_dot_0, dtype=float)
    return zeta_r
