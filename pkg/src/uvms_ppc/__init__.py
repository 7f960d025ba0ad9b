"""Prescribed-performance force control of an underwater vehicle-manipulator system."""
from .controller import ControllerConfig, EnvelopeViolation, PerformanceFunction, PPCController, paper_config
from .dynamics import DynamicModel, SystemState
from .environment import CompliantPlane, DisturbanceSpec, ForceTrajectory, NoiseSpec, Wrench
from .kinematics import Configuration, KinematicModel, VehiclePose
from .models import load_model
from .scenario import Scenario, load_scenario, paper_scenario, run_scenario
from .simulation import SimLog, SimulationError, export_log, import_log, simulate

__version__ = "0.1.0"
