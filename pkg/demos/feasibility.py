"""How heavy can the pushing mass be before the envelopes become unreachable at 1 ms?

Noise-free 1-DoF runs of the bundled gains over a mass sweep, then the
same at a finer step. The UVMS pushes with roughly 17 kg of effective
inertia along the wall normal.
"""
from uvms_ppc.verification import OracleAbort, OracleConfig, run_oracle

for h in (1e-3, 2e-4):
    print("step %.0e s" % h)
    for mass in (1.0, 2.0, 5.0, 8.0, 12.0, 17.0):
        try:
            traj = run_oracle(OracleConfig(mass=mass, dist_amplitude=0.15, h=h, duration=2.0))
            print("  m=%5.1f kg: contained, peak |tau| %.0f N" % (mass, abs(traj.tau).max()))
        except OracleAbort as exc:
            print("  m=%5.1f kg: %s" % (mass, exc))
