"""Envelope checks on logs, robustness sweeps and the 1-DoF cross-check."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .. import environment as env
from ..controller import ControllerConfig, PerformanceFunction, PPCController
from ..scenario import Scenario, run_scenario
from ..simulation import PointMassPlant, SimLog, SimulationError, simulate
from .oracle_1dof import OracleConfig, OracleTrajectory, run_oracle
from .report import OracleReport

LEVELS = (("task", "e_x", "rho_x"), ("velocity", "e_zeta", "rho_zeta"))


def envelope_battery(log: SimLog, name: str = "envelope containment") -> OracleReport:
    """``|e_j(t)| < rho_j(t)`` at both levels for every logged sample."""
    if len(log) == 0:
        return OracleReport(name, 0, 0.0, True, notes=["no samples"])
    worst_ratio = -np.inf
    worst = None
    margin = np.inf
    for level, e_name, rho_name in LEVELS:
        e = log.block(e_name)
        rho = log.block(rho_name)
        if e.size == 0:
            continue
        ratio = np.abs(e) / rho
        # NaN marks a channel not evaluated (the sample after a task-level breach)
        if np.all(np.isnan(ratio)):
            continue
        k, j = np.unravel_index(np.nanargmax(ratio), ratio.shape)
        margin = min(margin, float(np.nanmin(rho - np.abs(e))))
        if ratio[k, j] > worst_ratio:
            worst_ratio = float(ratio[k, j])
            worst = {"level": level, "channel": int(j) + 1, "t": float(log.t[k]), "sample": int(k),
                     "error": float(e[k, j]), "rho": float(rho[k, j])}
    passed = bool(worst_ratio < 1.0 and margin > 0.0)
    return OracleReport(name, len(log), worst_ratio, passed, worst, tolerance=1.0, margin=margin)


def first_violation(log: SimLog):
    """``(level, channel, t)`` of the earliest breach, or ``None``."""
    hits = []
    for level, e_name, rho_name in LEVELS:
        e = log.block(e_name)
        bad = ~(np.abs(e) < log.block(rho_name)) & ~np.isnan(e)
        if bad.any():
            k, j = np.argwhere(bad)[0]
            hits.append((int(k), level, int(j) + 1))
    if not hits:
        return None
    k, level, channel = min(hits)
    return level, channel, float(log.t[k])


def run_report(s: Scenario, name: str | None = None) -> OracleReport:
    """Run a scenario and check the envelopes; an aborted run is a failure."""
    name = name or s.name
    try:
        log = run_scenario(s)
    except SimulationError as exc:
        samples = 0 if exc.log is None else len(exc.log)
        worst = dict(exc.last_record or {})
        worst = {"t_abort": exc.t, "step": exc.step,
                 **{k: worst[k] for k in ("t", "f_true_1", "f_des_1", "e_x_1", "rho_x_1") if k in worst}}
        return OracleReport(name, samples, np.inf, False, worst, tolerance=1.0, notes=[str(exc)])
    report = envelope_battery(log, name)
    return report


def robustness_variants(base: Scenario, scales=(0.0, 1.0, 2.0), plant_scale: float = 0.3) -> list[Scenario]:
    """Disturbance x noise grid plus mass/drag perturbations, controller untouched."""
    variants = []
    for ds in scales:
        for ns in scales:
            variants.append(replace(
                base, name=f"disturbance x{ds:g}, noise x{ns:g}",
                disturbance=replace(base.disturbance, amplitude=base.disturbance.amplitude * ds),
                noise=replace(base.noise, bound=base.noise.bound * ns)))
    for ms in (1.0 - plant_scale, 1.0 + plant_scale):
        for dr in (1.0 - plant_scale, 1.0 + plant_scale):
            variants.append(replace(
                base, name=f"mass x{ms:g}, drag x{dr:g}",
                mass_scale=base.mass_scale * ms, drag_scale=base.drag_scale * dr))
    return variants


def robustness_battery(base: Scenario, workers: int = 1, **kwargs) -> OracleReport:
    variants = robustness_variants(base, **kwargs)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            details = list(pool.map(run_report, variants))
    else:
        details = [run_report(v) for v in variants]
    failed = [d.name for d in details if not d.passed]
    residual = max(d.max_residual for d in details)
    return OracleReport("robustness sweep", len(details), residual, not failed, tolerance=1.0,
                        notes=[f"failed: {', '.join(failed)}"] if failed else [], details=details)


def stress_probe(base: Scenario, factor: float = 100.0) -> OracleReport:
    """Disturbance blown up by ``factor``; expected to break containment (not a pass criterion)."""
    s = replace(base, name=f"disturbance x{factor:g}",
                disturbance=replace(base.disturbance, amplitude=base.disturbance.amplitude * factor))
    return run_report(s)


# --- 1-DoF reduction of the full stack -------------------------------------

def stack_config_1dof(cfg: OracleConfig) -> ControllerConfig:
    return ControllerConfig(
        k_x=[cfg.k_x], k_zeta=[cfg.k_v],
        perf_x=(PerformanceFunction(cfg.rho0_x, cfg.rho_inf_x, cfg.l_x),),
        perf_zeta=(PerformanceFunction(cfg.rho0_v, cfg.rho_inf_v, cfg.l_v),))


def run_stack_1dof(cfg: OracleConfig) -> SimLog:
    """The package's plant/controller/loop configured to the oracle's problem."""
    plant = PointMassPlant(
        mass=cfg.mass,
        plane=env.CompliantPlane([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0], cfg.stiffness),
        disturbance_spec=env.DisturbanceSpec(cfg.dist_amplitude, cfg.dist_omega, (0,)),
        noise=env.NoiseSpec(cfg.noise_bound, cfg.seed),
        linear_drag=cfg.linear_drag, quadratic_drag=cfg.quadratic_drag)
    force = env.ForceTrajectory("sinusoid", cfg.f_offset, cfg.f_amplitude, cfg.f_omega)
    return simulate(plant, PPCController(stack_config_1dof(cfg)), [cfg.x0, cfg.v0], cfg.duration, cfg.h,
                    desired_force=lambda t: env.desired_force(t, force)[:1])


def oracle_equivalence(cfg: OracleConfig, tolerance: float = 1e-6) -> OracleReport:
    """Max state deviation between the stack at 1 DoF and the independent oracle."""
    ref: OracleTrajectory = run_oracle(cfg)
    log = run_stack_1dof(cfg)
    stack = np.column_stack([log.column("q_1"), log.column("zeta_1")])
    if stack.shape != ref.state.shape:
        return OracleReport("1-DoF oracle equivalence", len(log), np.inf, False,
                            notes=["trajectories have different lengths"], tolerance=tolerance)
    dev = np.abs(stack - ref.state)
    k = int(np.argmax(dev.max(axis=1)))
    residual = float(dev.max())
    return OracleReport("1-DoF oracle equivalence", len(log), residual, residual < tolerance,
                        {"t": float(ref.t[k]), "x": float(ref.x[k]), "v": float(ref.v[k])},
                        tolerance=tolerance)
