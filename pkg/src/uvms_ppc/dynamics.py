"""Equation of motion of the vehicle-manipulator system.

    M(q) zeta_dot + C(q, zeta) zeta + D(zeta) zeta - r(q) + Jg^T lam + delta = tau

with ``r(q)`` the generalized gravity/buoyancy force acting on the system
(what :func:`restoring_force` returns) and ``lam`` the wrench the
end-effector exerts on the environment, expressed in the inertial frame.

All inertial quantities are expressed in the vehicle body frame about its
origin, so ``M`` depends on the joint angles only.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .kinematics import (
    _cross_rows,
    KinematicModel,
    arm_frames,
    as_vector,
    euler_rate_transform,
    geometric_jacobian,
    rotation_zyx,
    wrap_angle,
)

CHRISTOFFEL_STEP = 1e-6


class DynamicsError(RuntimeError):
    pass


@dataclass(frozen=True)
class RigidBody:
    """Mass properties of one body, expressed in that body's frame."""

    mass: float
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    volume: float = 0.0
    cob: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if self.mass <= 0.0:
            raise DynamicsError("body mass must be positive")
        if self.volume < 0.0:
            raise DynamicsError("body volume must be non-negative")
        object.__setattr__(self, "inertia", inertia.reshape(3, 3))
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        object.__setattr__(self, "cob", np.asarray(self.cob, dtype=float).reshape(3))


@dataclass(frozen=True)
class DynamicModel:
    kinematics: KinematicModel
    vehicle: RigidBody
    links: tuple[RigidBody, ...]
    added_mass: np.ndarray
    linear_drag: np.ndarray
    quadratic_drag: np.ndarray
    armature: np.ndarray
    fluid_density: float = 1000.0
    gravity: float = 9.81
    actuator_limit: float | None = 200.0

    def __post_init__(self):
        n = self.kinematics.n
        nj = self.kinematics.n_joints
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.links) != nj:
            raise DynamicsError(f"{len(self.links)} link bodies for {nj} joints")
        added = np.asarray(self.added_mass, dtype=float)
        if added.shape == (6,):
            added = np.diag(added)
        if added.shape != (6, 6) or not np.allclose(added, added.T):
            raise DynamicsError("added mass must be a symmetric 6x6 block")
        object.__setattr__(self, "added_mass", added)
        for name, size in (("linear_drag", n), ("quadratic_drag", n), ("armature", nj)):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.size != size:
                raise DynamicsError(f"{name} needs {size} entries, got {arr.size}")
            if np.any(arr < 0.0):
                raise DynamicsError(f"{name} entries must be >= 0")
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.kinematics.n

    @cached_property
    def _link_arrays(self):
        links = self.links
        return (np.array([b.mass for b in links]), np.array([b.com for b in links]),
                np.array([b.cob for b in links]), np.array([b.inertia for b in links]),
                np.array([b.volume for b in links]))

    @cached_property
    def _vehicle_inertia(self) -> np.ndarray:
        v = self.vehicle
        return spatial_inertia(v.mass, v.com, v.inertia)

    def scaled(self, mass_scale: float = 1.0, drag_scale: float = 1.0) -> "DynamicModel":
        """Copy with every mass/inertia term and drag coefficient scaled.

        Volumes scale with mass so the buoyancy balance is preserved.
        """
        def body(b: RigidBody) -> RigidBody:
            return replace(b, mass=b.mass * mass_scale, inertia=b.inertia * mass_scale,
                           volume=b.volume * mass_scale)

        return replace(
            self,
            vehicle=body(self.vehicle),
            links=tuple(body(b) for b in self.links),
            added_mass=self.added_mass * mass_scale,
            armature=self.armature * mass_scale,
            linear_drag=self.linear_drag * drag_scale,
            quadratic_drag=self.quadratic_drag * drag_scale,
        )


@dataclass(frozen=True)
class SystemState:
    q: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).ravel())
        object.__setattr__(self, "zeta", np.asarray(self.zeta, dtype=float).ravel())
        if self.q.shape != self.zeta.shape:
            raise DynamicsError("q and zeta must have the same dimension")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.zeta])

    @classmethod
    def from_array(cls, y) -> "SystemState":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])


def _skew_batch(v):
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def spatial_inertia(mass, com, inertia_com):
    """6x6 inertia about the frame origin in ``[linear; angular]`` order.

    ``com`` and ``inertia_com`` may carry batch dimensions.
    """
    com = np.asarray(com, dtype=float)
    S = _skew_batch(com)
    out = np.zeros(com.shape[:-1] + (6, 6))
    out[..., :3, :3] = mass * np.eye(3)
    out[..., :3, 3:] = -mass * S
    out[..., 3:, :3] = mass * S
    out[..., 3:, 3:] = inertia_com - mass * (S @ S)
    return out


def _link_geometry(model: DynamicModel, qm):
    """Per-link CoM, CoB and rotated inertia plus joint motion subspaces, body frame."""
    R, p, z = arm_frames(model.kinematics, qm)
    nj = model.kinematics.n_joints
    _, com, cob, inertia, _ = model._link_arrays
    R_links = R[..., :nj, :, :]
    p_links = p[..., :nj, :]
    coms = p_links + np.einsum("...kij,kj->...ki", R_links, com)
    cobs = p_links + np.einsum("...kij,kj->...ki", R_links, cob)
    inertias = R_links @ inertia @ np.swapaxes(R_links, -1, -2)
    # revolute axis z through p: twist at the body origin is [p x z; z]
    s = np.concatenate([_cross_rows(p_links, z), z], axis=-1)
    return coms, cobs, inertias, s


def _mass_matrix_batch(model: DynamicModel, qm, geometry=None) -> np.ndarray:
    qm = np.asarray(qm, dtype=float)
    batch = qm.shape[:-1]
    nj = model.kinematics.n_joints
    n = 6 + nj
    coms, _, inertias, s = _link_geometry(model, qm) if geometry is None else geometry
    masses = model._link_arrays[0]
    link_I = spatial_inertia(masses[:, None, None], coms, inertias)  # (..., nj, 6, 6)
    # composite inertia of the subtree rooted at each joint
    composite = np.flip(np.cumsum(np.flip(link_I, axis=-3), axis=-3), axis=-3)

    M = np.zeros(batch + (n, n))
    M[..., :6, :6] = model._vehicle_inertia + composite[..., 0, :, :] + model.added_mass
    F = np.einsum("...kij,...kj->...ki", composite, s)  # F_k = Ic_k s_k
    M[..., :6, 6:] = np.swapaxes(F, -1, -2)
    M[..., 6:, :6] = F
    block = np.einsum("...ia,...ja->...ij", s, F)  # s_i . Ic_j s_j
    upper = np.triu(block)
    M[..., 6:, 6:] = upper + np.swapaxes(np.triu(block, 1), -1, -2)
    M[..., np.arange(6, n), np.arange(6, n)] += model.armature
    return M


def mass_matrix(config, model: DynamicModel) -> np.ndarray:
    """Symmetric positive-definite inertia matrix including added mass and joint armature."""
    q = as_vector(config)
    return _mass_matrix_batch(model, q[6:])


def mass_matrix_derivatives(config, model: DynamicModel, step: float = CHRISTOFFEL_STEP):
    """``(M, dM)`` with ``dM[k] = dM/dq_k`` by central differences.

    Entries ``k < 6`` are zero: the inertia seen in body coordinates does not
    depend on the vehicle pose.
    """
    M, dM, _ = _inertia_terms(as_vector(config), model, step)
    return M, dM


def _inertia_terms(q, model: DynamicModel, step: float = CHRISTOFFEL_STEP):
    # one batched pass over the nominal and the 2*nj perturbed arm poses
    nj = model.kinematics.n_joints
    n = 6 + nj
    qm = q[6:]
    perturb = step * np.eye(nj)
    stack = np.concatenate([qm[None, :], qm + perturb, qm - perturb], axis=0)
    geometry = _link_geometry(model, stack)
    Ms = _mass_matrix_batch(model, stack, geometry)
    dM = np.zeros((n, n, n))
    dM[6:] = (Ms[1:1 + nj] - Ms[1 + nj:]) / (2.0 * step)
    return Ms[0], dM, tuple(g[0] for g in geometry)


def _kirchhoff_matrix(momentum) -> np.ndarray:
    P, L = momentum[:3], momentum[3:6]
    SP = _skew_batch(P)
    C = np.zeros((6, 6))
    C[:3, 3:] = -SP
    C[3:, :3] = -SP
    C[3:, 3:] = -_skew_batch(L)
    return C


def coriolis_matrix(config, zeta, model: DynamicModel) -> np.ndarray:
    """Coriolis/centripetal matrix with ``Mdot - 2C`` skew-symmetric.

    Christoffel symbols of ``M`` over the joint coordinates plus the
    momentum cross terms that the body-frame vehicle velocities bring in.
    """
    zeta = np.asarray(zeta, dtype=float)
    M, dM = mass_matrix_derivatives(config, model)
    A = np.einsum("kij,k->ij", dM, zeta)
    B = np.einsum("jik,k->ij", dM, zeta)
    Cc = np.einsum("ijk,k->ij", dM, zeta)
    C = 0.5 * (A + B - Cc)
    C[:6, :6] += _kirchhoff_matrix(M[:6] @ zeta)
    return C


def _coriolis_force(M, dM, zeta) -> np.ndarray:
    Mdot_zeta = np.einsum("kij,k,j->i", dM, zeta, zeta)
    quad = np.einsum("ijk,j,k->i", dM, zeta, zeta)
    out = Mdot_zeta - 0.5 * quad
    p = M[:6] @ zeta
    u, w = zeta[:3], zeta[3:6]
    out[:3] += _cross_rows(w, p[:3])
    out[3:6] += _cross_rows(w, p[3:6]) + _cross_rows(u, p[:3])
    return out


def coriolis_force(config, zeta, model: DynamicModel) -> np.ndarray:
    """``C(q, zeta) @ zeta`` without forming ``C``."""
    M, dM = mass_matrix_derivatives(config, model)
    return _coriolis_force(M, dM, np.asarray(zeta, dtype=float))


def damping_matrix(zeta, model: DynamicModel) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    return np.diag(model.linear_drag + model.quadratic_drag * np.abs(zeta))


def damping_force(config, zeta, model: DynamicModel) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    return (model.linear_drag + model.quadratic_drag * np.abs(zeta)) * zeta


def _body_points(config, model: DynamicModel, geometry=None):
    q = as_vector(config)
    coms, cobs, _, s = _link_geometry(model, q[6:]) if geometry is None else geometry
    v = model.vehicle
    masses, _, _, _, volumes = model._link_arrays
    cg = np.vstack([v.com, coms])
    cb = np.vstack([v.cob, cobs])
    return q, cg, cb, np.concatenate([[v.mass], masses]), np.concatenate([[v.volume], volumes]), s


def restoring_force(config, model: DynamicModel, geometry=None) -> np.ndarray:
    """Generalized gravity and buoyancy force acting on the system.

    Positive entries push the coordinates forward; a bottom-heavy vehicle
    rolled by ``phi > 0`` gets a negative roll moment.
    """
    q, cg, cb, masses, volumes, s = _body_points(config, model, geometry)
    R_ib = rotation_zyx(q[3:6])
    down = R_ib[2]  # inertial +z in body coordinates
    weight = masses * model.gravity
    buoyancy = volumes * model.fluid_density * model.gravity
    f_w = weight[:, None] * down
    f_b = -buoyancy[:, None] * down
    wrench = np.concatenate([f_w + f_b, _cross_rows(cg, f_w) + _cross_rows(cb, f_b)], axis=1)
    out = np.empty(model.n)
    out[:6] = wrench.sum(axis=0)
    subtree = np.flip(np.cumsum(np.flip(wrench[1:], axis=0), axis=0), axis=0)
    out[6:] = np.einsum("ka,ka->k", s, subtree)
    return out


def potential_energy(config, model: DynamicModel) -> float:
    q, cg, cb, masses, volumes, _ = _body_points(config, model)
    R_ib = rotation_zyx(q[3:6])
    depth_g = q[2] + cg @ R_ib[2]
    depth_b = q[2] + cb @ R_ib[2]
    g = model.gravity
    return float(-np.sum(masses * g * depth_g) + np.sum(volumes * model.fluid_density * g * depth_b))


def kinetic_energy(config, zeta, model: DynamicModel) -> float:
    zeta = np.asarray(zeta, dtype=float)
    return 0.5 * float(zeta @ mass_matrix(config, model) @ zeta)


def _solve_spd(M, rhs):
    try:
        factor = cho_factor(M)
    except LinAlgError as exc:
        raise DynamicsError(f"mass matrix is not positive definite: {exc}") from exc
    return cho_solve(factor, rhs)


def forward_dynamics(config, zeta, tau, lam, delta, model: DynamicModel) -> np.ndarray:
    """Accelerations ``zeta_dot`` from Cholesky on ``M``; ``lam`` and ``delta`` may be ``None``."""
    q = as_vector(config)
    zeta = np.asarray(zeta, dtype=float)
    M, dM, geometry = _inertia_terms(q, model)
    rhs = np.asarray(tau, dtype=float) - _coriolis_force(M, dM, zeta) \
        - damping_force(q, zeta, model) + restoring_force(q, model, geometry)
    if lam is not None:
        rhs = rhs - geometric_jacobian(q, model.kinematics).T @ np.asarray(lam, dtype=float)
    if delta is not None:
        rhs = rhs - np.asarray(delta, dtype=float)
    return _solve_spd(M, rhs)


def coordinate_rates(q, zeta) -> np.ndarray:
    """``q_dot`` from ``zeta``: vehicle body twist mapped to pose rates, joint rates pass through."""
    q = np.asarray(q, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    eta2 = q[3:6]
    return np.concatenate([rotation_zyx(eta2) @ zeta[:3],
                           euler_rate_transform(eta2) @ zeta[3:6],
                           zeta[6:]])


WrenchFn = Callable[[float, np.ndarray], "np.ndarray | None"]
DisturbanceFn = Callable[[float], "np.ndarray | None"]


def state_derivative(model: DynamicModel, t: float, y, tau,
                     wrench: WrenchFn | None = None,
                     disturbance: DisturbanceFn | None = None) -> np.ndarray:
    """Time derivative of ``y = [q; zeta]`` with ``tau`` held fixed."""
    y = np.asarray(y, dtype=float)
    n = model.n
    q, zeta = y[:n], y[n:]
    lam = wrench(t, q) if wrench is not None else None
    delta = disturbance(t) if disturbance is not None else None
    return np.concatenate([coordinate_rates(q, zeta),
                           forward_dynamics(q, zeta, tau, lam, delta, model)])


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``y' = f(t, y)``."""
    if not h > 0.0:
        raise ValueError(f"step must be positive, got {h}")
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DynamicsError(f"non-finite state at t={t}: {y}")
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise DynamicsError(f"integration produced non-finite state at t={t + h}")
    return y_next


def step_state(model: DynamicModel, state: SystemState, tau, t: float, h: float,
               wrench: WrenchFn | None = None,
               disturbance: DisturbanceFn | None = None) -> SystemState:
    """Advance the coupled kinematics/dynamics by ``h`` and re-wrap the attitude."""
    tau = np.asarray(tau, dtype=float)
    y = rk4_step(lambda s, x: state_derivative(model, s, x, tau, wrench, disturbance),
                 t, state.as_array(), h)
    n = model.n
    y[3:6] = wrap_angle(y[3:6])
    return SystemState(y[:n], y[n:])


def clamp_torque(tau, limit: float | None) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if limit is None:
        return tau
    return np.clip(tau, -limit, limit)
