"""Independent oracles and check batteries."""
from .batteries import (
    envelope_battery,
    first_violation,
    oracle_equivalence,
    robustness_battery,
    robustness_variants,
    run_report,
    run_stack_1dof,
    stress_probe,
)
from .oracle_1dof import OracleAbort, OracleConfig, OracleTrajectory, oracle_1dof, run_oracle
from .report import OracleReport
