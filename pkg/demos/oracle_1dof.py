"""The two-level law on a single mass pushing a spring wall, stack against oracle."""
import numpy as np

from uvms_ppc.verification import OracleAbort, OracleConfig, oracle_equivalence, run_oracle

cfg = OracleConfig(dist_amplitude=0.15)
traj = run_oracle(cfg)
late = traj.t >= 3.0
print("max |force error| after 3 s: %.4f N" % np.abs(traj.force_error[late]).max())
print("smallest envelope margin: %.4g N" % (traj.rho_x - np.abs(traj.force_error)).min())
print("peak |tau|: %.2f N" % np.abs(traj.tau).max())

print(oracle_equivalence(cfg).summary())

# sensor noise of the same order as the steady envelope margin
for bound in (0.0, 1e-3, 1e-2):
    try:
        run_oracle(OracleConfig(dist_amplitude=0.15, noise_bound=bound))
        print("noise %.0e: contained for 10 s" % bound)
    except OracleAbort as exc:
        print("noise %.0e: %s" % (bound, exc))
