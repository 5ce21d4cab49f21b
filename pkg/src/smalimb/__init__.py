"""Simulation, identification and trajectory planning for an SMA-actuated planar soft limb."""

__version__ = "0.1.0"

from .config import DEFAULT_SIM, default_limb, default_manipulator
from .manipulator import ManipulatorParams
from .simcore import LimbParams, SimConfig, rollout
from .thermal import ThermalParams
from .trajopt import TrajOptProblem, TrajOptSolution, check_solution, solve

__all__ = [
    "DEFAULT_SIM", "LimbParams", "ManipulatorParams", "SimConfig", "ThermalParams",
    "TrajOptProblem", "TrajOptSolution", "check_solution", "default_limb",
    "default_manipulator", "rollout", "solve",
]
