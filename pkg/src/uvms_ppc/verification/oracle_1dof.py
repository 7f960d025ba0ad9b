"""Stand-alone 1-DoF reference: a mass pushing on a spring wall under the two-level law.

Deliberately self-contained (numpy only, nothing from the rest of the
package) so that it can cross-check the full stack configured down to one
degree of freedom. The wall occupies ``x > 0``; the exerted force is
``K * max(x, 0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OracleConfig:
    mass: float = 1.0
    stiffness: float = 2.0
    linear_drag: float = 0.0
    quadratic_drag: float = 0.0
    k_x: float = 0.2
    k_v: float = 5.0
    rho0_x: float = 1.0
    rho_inf_x: float = 0.2
    l_x: float = 3.0
    rho0_v: float = 1.0
    rho_inf_v: float = 0.2
    l_v: float = 2.2
    # desired force: offset + amplitude * sin(omega t)
    f_offset: float = 0.4
    f_amplitude: float = 0.4
    f_omega: float = math.pi
    dist_amplitude: float = 0.0
    dist_omega: float = 2.0 * math.pi / 7.0
    noise_bound: float = 0.0
    seed: int = 0
    x0: float = 0.0
    v0: float = 0.0
    h: float = 1e-3
    duration: float = 10.0


class OracleAbort(RuntimeError):
    pass


@dataclass
class OracleTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    force: np.ndarray
    force_error: np.ndarray
    rho_x: np.ndarray
    velocity_error: np.ndarray
    rho_v: np.ndarray
    tau: np.ndarray

    @property
    def state(self) -> np.ndarray:
        return np.column_stack([self.x, self.v])


def _rho(rho0, rho_inf, l, t):
    return (rho0 - rho_inf) * math.exp(-l * t) + rho_inf


def _noise(cfg: OracleConfig, t: float) -> float:
    if cfg.noise_bound == 0.0:
        return 0.0
    rng = np.random.default_rng([cfg.seed, int(round(t * 1e9))])
    return float(rng.uniform(-cfg.noise_bound, cfg.noise_bound, 1)[0])


def _law(cfg: OracleConfig, t, x, v):
    force = cfg.stiffness * max(x, 0.0)
    e = force + _noise(cfg, t) - (cfg.f_offset + cfg.f_amplitude * math.sin(cfg.f_omega * t))
    rx = _rho(cfg.rho0_x, cfg.rho_inf_x, cfg.l_x, t)
    xi = e / rx
    if not abs(xi) < 1.0:
        raise OracleAbort(f"force error left its envelope at t={t:.6f}")
    v_ref = -cfg.k_x * math.log((1.0 + xi) / (1.0 - xi))
    ev = v - v_ref
    rv = _rho(cfg.rho0_v, cfg.rho_inf_v, cfg.l_v, t)
    xv = ev / rv
    if not abs(xv) < 1.0:
        raise OracleAbort(f"velocity error left its envelope at t={t:.6f}")
    tau = -cfg.k_v * (2.0 / (1.0 - xv * xv)) * math.log((1.0 + xv) / (1.0 - xv)) / rv
    return force, e, rx, ev, rv, tau


def _accel(cfg: OracleConfig, t, x, v, tau):
    drag = (cfg.linear_drag + cfg.quadratic_drag * abs(v)) * v
    wall = cfg.stiffness * max(x, 0.0)
    dist = cfg.dist_amplitude * math.sin(cfg.dist_omega * t)
    return (tau - drag - wall - dist) / cfg.mass


def run_oracle(cfg: OracleConfig) -> OracleTrajectory:
    """Fixed-step run; the law is sampled once per step and held through RK4."""
    steps = int(round(cfg.duration / cfg.h))
    out = np.empty((steps + 1, 9))
    x, v = cfg.x0, cfg.v0
    h = cfg.h
    for k in range(steps + 1):
        t = k * h
        force, e, rx, ev, rv, tau = _law(cfg, t, x, v)
        out[k] = (t, x, v, force, e, rx, ev, rv, tau)
        if k == steps:
            break
        k1x, k1v = v, _accel(cfg, t, x, v, tau)
        k2x, k2v = v + 0.5 * h * k1v, _accel(cfg, t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v, tau)
        k3x, k3v = v + 0.5 * h * k2v, _accel(cfg, t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v, tau)
        k4x, k4v = v + h * k3v, _accel(cfg, t + h, x + h * k3x, v + h * k3v, tau)
        x = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return OracleTrajectory(*out.T)


oracle_1dof = run_oracle
