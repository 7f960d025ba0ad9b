"""Disturbance/noise grid and plant perturbations around the bundled scenario."""
from dataclasses import replace

from uvms_ppc.scenario import paper_scenario
from uvms_ppc.verification import robustness_battery, stress_probe

base = paper_scenario()
report = robustness_battery(base)
print(report.to_text())
print(stress_probe(replace(base, duration=1.0)).summary())
