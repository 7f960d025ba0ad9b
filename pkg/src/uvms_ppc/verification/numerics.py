"""Numerical batteries: Jacobians, pseudo-inverse, inertia structure, integrator, energy."""
from __future__ import annotations

import numpy as np

from .. import dynamics as dyn
from .. import kinematics as kin
from .report import OracleReport

FD_STEP = 1e-6


def random_configuration(model: kin.KinematicModel, rng: np.random.Generator, attitude_margin: float = 0.3):
    """Random reachable configuration: joints inside limits, pitch clear of the singularity."""
    eta1 = rng.uniform(-2.0, 2.0, 3)
    eta2 = np.array([rng.uniform(-np.pi, np.pi),
                     rng.uniform(-np.pi / 2 + attitude_margin, np.pi / 2 - attitude_margin),
                     rng.uniform(-np.pi, np.pi)])
    joints = np.array([rng.uniform(*j.limits) for j in model.joints])
    return np.concatenate([eta1, eta2, joints])


def fd_analytical_jacobian(q, model: kin.KinematicModel, step: float = FD_STEP) -> np.ndarray:
    """Central differences of end-effector coordinates along ``q_dot(zeta = e_k)``."""
    n = model.n
    J = np.empty((6, n))
    for k in range(n):
        qdot = dyn.coordinate_rates(q, np.eye(n)[k])
        xp = kin.end_effector_coordinates(q + step * qdot, model)
        xm = kin.end_effector_coordinates(q - step * qdot, model)
        d = xp - xm
        d[3:] = kin.wrap_angle(d[3:])
        J[:, k] = d / (2.0 * step)
    return J


def jacobian_fd_battery(model: kin.KinematicModel, samples: int = 100, seed: int = 0,
                        tolerance: float = 1e-5) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst, worst_q = 0.0, None
    for _ in range(samples):
        q = random_configuration(model, rng)
        J = kin.analytical_jacobian(q, model)
        err = np.linalg.norm(fd_analytical_jacobian(q, model) - J) / np.linalg.norm(J)
        if err > worst:
            worst, worst_q = float(err), q
    return OracleReport("analytical Jacobian vs finite differences", samples, worst, worst < tolerance,
                        {"q": None if worst_q is None else worst_q.tolist(), "seed": seed}, tolerance)


def _random_matrix(rng):
    rows = int(rng.integers(1, 8))
    cols = int(rng.integers(1, 12))
    A = rng.normal(size=(rows, cols))
    if rng.random() < 0.3:
        rank = int(rng.integers(1, min(rows, cols) + 1))
        A = rng.normal(size=(rows, rank)) @ rng.normal(size=(rank, cols))
    return A * 10.0 ** rng.uniform(-3, 3)


def penrose_residual(A, Ap) -> float:
    """Largest relative residual of the four Moore-Penrose conditions."""
    def rel(x, ref):
        return np.linalg.norm(x) / max(np.linalg.norm(ref), np.finfo(float).tiny)

    return max(rel(A @ Ap @ A - A, A), rel(Ap @ A @ Ap - Ap, Ap),
               rel((A @ Ap).T - A @ Ap, A @ Ap), rel((Ap @ A).T - Ap @ A, Ap @ A))


def moore_penrose_battery(samples: int = 1000, seed: int = 0, tolerance: float = 1e-9) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst, worst_k = 0.0, None
    for k in range(samples):
        A = _random_matrix(rng)
        r = penrose_residual(A, kin.pseudo_inverse(A))
        if r > worst:
            worst, worst_k = r, k
    return OracleReport("Moore-Penrose identities", samples, worst, worst < tolerance,
                        {"seed": seed, "sample": worst_k}, tolerance)


def mdot_fd(q, zeta, model: dyn.DynamicModel, step: float = 1e-5) -> np.ndarray:
    """``dM/dt`` by central differences along the motion, independent of the Christoffel path."""
    qdot = dyn.coordinate_rates(q, zeta)
    return (dyn.mass_matrix(q + step * qdot, model) - dyn.mass_matrix(q - step * qdot, model)) / (2.0 * step)


def skew_symmetry_battery(model: dyn.DynamicModel, samples: int = 1000, seed: int = 0,
                          tolerance: float = 1e-6) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst, worst_in = 0.0, None
    for _ in range(samples):
        q = random_configuration(model.kinematics, rng)
        zeta = rng.normal(size=model.n)
        N = mdot_fd(q, zeta, model) - 2.0 * dyn.coriolis_matrix(q, zeta, model)
        r = abs(float(zeta @ N @ zeta))
        if r > worst:
            worst, worst_in = r, {"q": q.tolist(), "zeta": zeta.tolist()}
    return OracleReport("zeta^T (Mdot - 2C) zeta", samples, worst, worst < tolerance, worst_in, tolerance)


def positive_definite_battery(model: dyn.DynamicModel, configurations) -> OracleReport:
    """Smallest eigenvalue of ``M`` over the given configurations (rows of ``q``)."""
    configurations = np.atleast_2d(configurations)
    eig = np.array([np.linalg.eigvalsh(dyn.mass_matrix(q, model))[0] for q in configurations])
    if eig.size == 0:
        return OracleReport("M positive definite", 0, 0.0, True, notes=["no samples"])
    k = int(np.argmin(eig))
    # residual: minus the smallest eigenvalue, so passing means residual < 0
    return OracleReport("M positive definite", len(eig), -float(eig[k]), bool(eig[k] > 0.0),
                        {"q": configurations[k].tolist(), "min_eigenvalue": float(eig[k])}, 0.0)


def _passive_derivative(model):
    zero = np.zeros(model.n)
    return lambda t, y: dyn.state_derivative(model, t, y, zero)


def _integrate(f, y0, h, steps):
    y = np.asarray(y0, dtype=float)
    for k in range(steps):
        y = dyn.rk4_step(f, k * h, y, h)
    return y


def rk4_order_battery(model: dyn.DynamicModel, y0, horizon: float = 0.4, h: float = 0.04,
                      minimum_order: float = 3.9) -> OracleReport:
    """Observed convergence order of the integrator on the free, drag-free plant."""
    smooth = model.scaled(drag_scale=0.0)
    f = _passive_derivative(smooth)
    steps = int(round(horizon / h))
    ref = _integrate(f, y0, h / 32, steps * 32)
    e1 = np.linalg.norm(_integrate(f, y0, h, steps) - ref)
    e2 = np.linalg.norm(_integrate(f, y0, h / 2, steps * 2) - ref)
    order = float(np.log2(e1 / e2))
    return OracleReport("RK4 observed order", 3, order, order >= minimum_order,
                        {"h": h, "error_h": float(e1), "error_h/2": float(e2)}, minimum_order,
                        notes=["residual is the measured order (must be >= tolerance)"])


def total_energy(y, model: dyn.DynamicModel) -> float:
    n = model.n
    return dyn.kinetic_energy(y[:n], y[n:], model) + dyn.potential_energy(y[:n], model)


def passive_energy_battery(model: dyn.DynamicModel, y0, duration: float = 2.0, h: float = 1e-3,
                           tolerance: float = 1e-6) -> OracleReport:
    """With no inputs, contact or disturbance, energy may only fall (drag) up to the tolerance per step."""
    f = _passive_derivative(model)
    y = np.asarray(y0, dtype=float)
    energy = total_energy(y, model)
    steps = int(round(duration / h))
    worst, worst_t = -np.inf, None
    for k in range(steps):
        y = dyn.rk4_step(f, k * h, y, h)
        e_next = total_energy(y, model)
        if e_next - energy > worst:
            worst, worst_t = e_next - energy, (k + 1) * h
        energy = e_next
    return OracleReport("passive energy non-increasing", steps, float(worst), worst <= tolerance,
                        {"t": worst_t}, tolerance)
