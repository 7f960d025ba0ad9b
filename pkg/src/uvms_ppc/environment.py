"""Compliant contact, reference trajectories, disturbances and sensor noise."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Wrench:
    f_e: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nu_e: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.f_e, self.nu_e])

    def __neg__(self) -> "Wrench":
        return Wrench(-self.f_e, -self.nu_e)

    @property
    def in_contact(self) -> bool:
        return bool(np.any(self.f_e != 0.0))


@dataclass(frozen=True)
class CompliantPlane:
    """Planar spring wall; ``normal`` points out of the material toward free space."""

    point: np.ndarray
    normal: np.ndarray
    stiffness: np.ndarray

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(normal)
        if norm == 0.0:
            raise ValueError("plane normal must be non-zero")
        K = np.asarray(self.stiffness, dtype=float)
        if K.ndim == 0:
            K = K * np.eye(3)
        elif K.shape == (3,):
            K = np.diag(K)
        if K.shape != (3, 3) or np.any(np.diag(K) < 0.0) or np.any(K != np.diag(np.diag(K))):
            raise ValueError("stiffness must be a non-negative diagonal 3x3 matrix")
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "stiffness", K)

    def penetration(self, position) -> float:
        return max(0.0, float((self.point - np.asarray(position, dtype=float)) @ self.normal))


def contact_force(end_effector_position, plane: CompliantPlane) -> Wrench:
    """Reaction of the wall on the end-effector (frictionless point contact).

    The wrench the end-effector exerts on the wall is the negative of this.
    """
    d = plane.penetration(end_effector_position)
    if d == 0.0:
        return Wrench()
    return Wrench(plane.stiffness @ (d * plane.normal), np.zeros(3))


def exerted_wrench(end_effector_position, plane: CompliantPlane) -> Wrench:
    return -contact_force(end_effector_position, plane)


@dataclass(frozen=True)
class ForceTrajectory:
    """Desired exerted force ``direction * profile(t)``.

    ``kind`` is ``"sinusoid"`` (offset + amplitude sin(omega t + phase)),
    ``"constant"`` (offset) or ``"ramp"`` (offset + slope t, saturating at
    ``offset + amplitude`` when amplitude is non-zero).
    """

    kind: str = "sinusoid"
    offset: float = 0.4
    amplitude: float = 0.4
    omega: float = np.pi
    phase: float = 0.0
    slope: float = 0.0
    direction: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("sinusoid", "constant", "ramp"):
            raise ValueError(f"unknown force trajectory kind {self.kind!r}")

    def profile(self, t: float) -> float:
        if self.kind == "constant":
            return self.offset
        if self.kind == "ramp":
            value = self.offset + self.slope * t
            if self.amplitude:
                cap = self.offset + self.amplitude
                value = min(value, cap) if self.slope >= 0 else max(value, cap)
            return value
        return self.offset + self.amplitude * np.sin(self.omega * t + self.phase)


PAPER_FORCE = ForceTrajectory()


def desired_force(t: float, trajectory: ForceTrajectory = PAPER_FORCE) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be non-negative")
    return trajectory.profile(t) * np.asarray(trajectory.direction, dtype=float)


@dataclass(frozen=True)
class DisturbanceSpec:
    amplitude: float = 0.15
    omega: float = 2.0 * np.pi / 7.0
    axes: tuple = (0, 1, 2)

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("disturbance amplitude must be >= 0")
        object.__setattr__(self, "axes", tuple(int(a) for a in self.axes))


def disturbance(t: float, spec: DisturbanceSpec, n: int) -> np.ndarray:
    """Generalized disturbance force: a sinusoid on the chosen vehicle axes."""
    out = np.zeros(n)
    out[list(spec.axes)] = spec.amplitude * np.sin(spec.omega * t)
    return out


@dataclass(frozen=True)
class NoiseSpec:
    bound: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.bound < 0.0:
            raise ValueError("noise bound must be >= 0")
        if int(self.seed) < 0:
            raise ValueError("noise seed must be >= 0")


def noise_sample(noise: NoiseSpec, t: float, size: int = 3) -> np.ndarray:
    """Uniform noise in ``[-bound, bound]``, a pure function of ``(seed, t)``."""
    if noise.bound == 0.0:
        return np.zeros(size)
    ticks = int(round(t * 1e9))
    rng = np.random.default_rng([int(noise.seed), ticks])
    return rng.uniform(-noise.bound, noise.bound, size)


def measure_force(true_force, noise: NoiseSpec, t: float) -> np.ndarray:
    """Force sensor reading: truth plus bounded noise."""
    f = np.asarray(getattr(true_force, "f_e", true_force), dtype=float)
    return f + noise_sample(noise, t, f.size)
