"""Model-free prescribed-performance force/orientation controller.

First level: force and orientation errors are normalized by their
performance envelopes, mapped through the log transform and turned into a
task-space reference velocity, which the Jacobian pseudo-inverse lifts to
``zeta_r``. Second level: the velocity error ``zeta - zeta_r`` goes through
the same normalize/transform pipeline to produce ``tau``.

Nothing here knows the plant's inertia, drag, restoring forces, the wall
stiffness or the disturbance; only kinematics is used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kinematics as kin


class EnvelopeViolation(RuntimeError):
    """An error left its performance envelope (``|e| >= rho``)."""

    def __init__(self, level: str, channel: int, t: float | None, error: float, rho: float):
        self.level = level
        self.channel = channel
        self.t = t
        self.error = error
        self.rho = rho
        when = "" if t is None else f" at t={t:.6f}s"
        super().__init__(
            f"{level} channel {channel + 1} left its envelope{when}: |e|={abs(error):.6g} >= rho={rho:.6g}")


@dataclass(frozen=True)
class PerformanceFunction:
    rho0: float
    rho_inf: float
    l: float

    def __post_init__(self):
        if not self.rho0 > self.rho_inf > 0.0:
            raise ValueError(f"need rho0 > rho_inf > 0, got {self.rho0}, {self.rho_inf}")
        if not self.l > 0.0:
            raise ValueError(f"decay rate must be positive, got {self.l}")

    def value(self, t):
        return (self.rho0 - self.rho_inf) * np.exp(-self.l * t) + self.rho_inf

    def derivative(self, t):
        return -self.l * (self.rho0 - self.rho_inf) * np.exp(-self.l * t)


def perf_value(pf: PerformanceFunction, t: float) -> float:
    return pf.value(t)


def _envelope_values(pfs: Sequence[PerformanceFunction], t: float) -> np.ndarray:
    return np.array([pf.value(t) for pf in pfs])


def normalize_error(e, rho, *, level: str = "error", t: float | None = None):
    """``xi = e / rho``; raises :class:`EnvelopeViolation` unless ``|xi| < 1``."""
    e = np.asarray(e, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("envelope must be positive")
    xi = e / rho
    bad = np.flatnonzero(~(np.abs(xi) < 1.0))
    if bad.size:
        j = int(bad[0])
        rho_b = np.broadcast_to(rho, xi.shape)
        raise EnvelopeViolation(level, j, t, float(np.broadcast_to(e, xi.shape).flat[j]), float(rho_b.flat[j]))
    return xi if xi.ndim else float(xi)


def _check_domain(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(~(np.abs(xi) < 1.0)):
        raise ValueError(f"normalized error outside (-1, 1): {xi}")
    return xi


def transform_error(xi):
    """``ln((1 + xi) / (1 - xi))`` on ``(-1, 1)``."""
    xi = _check_domain(xi)
    eps = np.log1p(xi) - np.log1p(-xi)
    return eps if eps.ndim else float(eps)


def modulation_gain(xi):
    """``2 / (1 - xi^2)``, the derivative of :func:`transform_error`."""
    xi = _check_domain(xi)
    r = 2.0 / (1.0 - xi * xi)
    return r if r.ndim else float(r)


@dataclass(frozen=True)
class ControllerConfig:
    k_x: np.ndarray
    k_zeta: np.ndarray
    perf_x: tuple
    perf_zeta: tuple
    x0_dot: np.ndarray | None = None

    def __post_init__(self):
        k_x = np.asarray(self.k_x, dtype=float).ravel()
        k_zeta = np.asarray(self.k_zeta, dtype=float).ravel()
        if np.any(k_x <= 0.0) or np.any(k_zeta <= 0.0):
            raise ValueError("all gains must be positive")
        if len(self.perf_x) != k_x.size or len(self.perf_zeta) != k_zeta.size:
            raise ValueError("one performance function per gain is required")
        object.__setattr__(self, "k_x", k_x)
        object.__setattr__(self, "k_zeta", k_zeta)
        object.__setattr__(self, "perf_x", tuple(self.perf_x))
        object.__setattr__(self, "perf_zeta", tuple(self.perf_zeta))
        if self.x0_dot is not None:
            x0 = np.asarray(self.x0_dot, dtype=float).ravel()
            if x0.size != k_zeta.size:
                raise ValueError("secondary-task velocity must have one entry per velocity channel")
            object.__setattr__(self, "x0_dot", x0)

    @property
    def n_task(self) -> int:
        return self.k_x.size

    @property
    def n(self) -> int:
        return self.k_zeta.size

    def rho_x(self, t: float) -> np.ndarray:
        return _envelope_values(self.perf_x, t)

    def rho_zeta(self, t: float) -> np.ndarray:
        return _envelope_values(self.perf_zeta, t)


def paper_config(n: int = 10, l_orientation: float = 3.0) -> ControllerConfig:
    """Gains and envelopes of the bundled force-tracking scenario for ``n`` velocity channels."""
    perf_x = [PerformanceFunction(1.0, 0.2, 3.0)] * 3 + [PerformanceFunction(0.9, 0.2, l_orientation)] * 3
    perf_zeta = [PerformanceFunction(1.0, 0.2 if j < 6 else 0.4, 2.2) for j in range(n)]
    return ControllerConfig(k_x=np.full(6, 0.2), k_zeta=np.full(n, 5.0),
                            perf_x=tuple(perf_x), perf_zeta=tuple(perf_zeta))


def reference_velocity(e_x, t: float, cfg: ControllerConfig) -> np.ndarray:
    """Task-space reference ``-k_x * eps(e_x / rho_x(t))``."""
    xi = normalize_error(np.asarray(e_x, dtype=float), cfg.rho_x(t), level="task", t=t)
    return -cfg.k_x * transform_error(xi)


def joint_reference(J, x_dot_r, x0_dot=None) -> np.ndarray:
    return kin.nullspace_projected_velocity(J, x_dot_r, x0_dot)


def torque_law(e_zeta, t: float, cfg: ControllerConfig) -> np.ndarray:
    """``tau_j = -k_j r(xi_j) eps(xi_j) / rho_j(t)`` on the velocity errors."""
    rho = cfg.rho_zeta(t)
    xi = normalize_error(np.asarray(e_zeta, dtype=float), rho, level="velocity", t=t)
    # eps and r share one xi evaluation
    return -cfg.k_zeta * modulation_gain(xi) * transform_error(xi) / rho


def orientation_error(orientation, desired_orientation) -> np.ndarray:
    return kin.wrap_angle(np.asarray(orientation, dtype=float) - np.asarray(desired_orientation, dtype=float))


@dataclass
class StepDiagnostics:
    t: float
    e_x: np.ndarray
    rho_x: np.ndarray
    xi_x: np.ndarray
    eps_x: np.ndarray
    x_dot_r: np.ndarray
    zeta_r: np.ndarray
    e_zeta: np.ndarray
    rho_zeta: np.ndarray
    xi_zeta: np.ndarray
    eps_zeta: np.ndarray
    tau: np.ndarray


@dataclass
class PPCController:
    """Static two-level law; ``last`` caches the diagnostics of the latest step.

    ``kinematic_model`` is only needed by :meth:`control_step`, which builds
    the Jacobian itself. ``desired_force``/``desired_orientation`` are
    callables of time.
    """

    cfg: ControllerConfig
    kinematic_model: kin.KinematicModel | None = None
    desired_force: Callable[[float], np.ndarray] | None = None
    desired_orientation: Callable[[float], np.ndarray] = field(default=lambda t: np.zeros(3))
    last: StepDiagnostics | None = field(default=None, init=False)

    def task_error(self, measured_force, desired_force, orientation=None, desired_orientation=None):
        e_f = np.atleast_1d(np.asarray(measured_force, dtype=float) - np.asarray(desired_force, dtype=float))
        if orientation is None:
            return e_f
        return np.concatenate([e_f, orientation_error(orientation, desired_orientation)])

    def check_initial(self, e_x, J, zeta, t: float = 0.0) -> None:
        """Envelope preconditions at start-up: both levels strictly inside."""
        self.step(e_x, J, zeta, t)

    def step(self, e_x, J, zeta, t: float) -> np.ndarray:
        """Steps I-a to II-b for a given task error, analytical Jacobian and velocity."""
        cfg = self.cfg
        e_x = np.asarray(e_x, dtype=float)
        rho_x = cfg.rho_x(t)
        rho_zeta = cfg.rho_zeta(t)
        nan_x = np.full(cfg.n_task, np.nan)
        nan_z = np.full(cfg.n, np.nan)
        try:
            xi_x = normalize_error(e_x, rho_x, level="task", t=t)
        except EnvelopeViolation:
            # keep what was measured so the breaching sample can be logged
            self.last = StepDiagnostics(t, e_x, rho_x, nan_x, nan_x, nan_x, nan_z,
                                        nan_z, rho_zeta, nan_z, nan_z, nan_z)
            raise
        eps_x = transform_error(xi_x)
        x_dot_r = -cfg.k_x * eps_x
        zeta_r = joint_reference(J, x_dot_r, cfg.x0_dot)

        e_zeta = np.asarray(zeta, dtype=float) - zeta_r
        try:
            xi_zeta = normalize_error(e_zeta, rho_zeta, level="velocity", t=t)
        except EnvelopeViolation:
            self.last = StepDiagnostics(t, e_x, rho_x, xi_x, eps_x, x_dot_r, zeta_r,
                                        e_zeta, rho_zeta, nan_z, nan_z, nan_z)
            raise
        eps_zeta = transform_error(xi_zeta)
        tau = -cfg.k_zeta * modulation_gain(xi_zeta) * eps_zeta / rho_zeta

        self.last = StepDiagnostics(t, e_x, rho_x, xi_x, eps_x, x_dot_r, zeta_r,
                                    e_zeta, rho_zeta, xi_zeta, eps_zeta, tau)
        return tau

    def control_step(self, measured_force, end_effector_orientation, config, zeta, t: float) -> np.ndarray:
        """Full law from sensor readings and the current configuration."""
        if self.kinematic_model is None or self.desired_force is None:
            raise RuntimeError("control_step needs a kinematic model and a desired force trajectory")
        J = kin.analytical_jacobian(config, self.kinematic_model)
        e_x = self.task_error(measured_force, self.desired_force(t),
                              end_effector_orientation, self.desired_orientation(t))
        return self.step(e_x, J, zeta, t)
