"""Run the bundled force-tracking scenario and say where it stands."""
import sys
from pathlib import Path

from uvms_ppc.scenario import paper_scenario, run_scenario
from uvms_ppc.simulation import SimulationError, export_log
from uvms_ppc.verification import envelope_battery, first_violation

out = Path(sys.argv[1] if len(sys.argv) > 1 else "paper_scenario.csv")
s = paper_scenario()
try:
    log = run_scenario(s)
except SimulationError as exc:
    log = exc.log
    print("aborted:", exc)
    print("first breach (level, channel, t):", first_violation(log))
    rec = exc.last_record
    print("at the breach: f_true=%.4f f_des=%.4f rho_x=%.4f" % (rec["f_true_1"], rec["f_des_1"], rec["rho_x_1"]))
print(envelope_battery(log).summary())
export_log(log, out)
print("log written to", out)
