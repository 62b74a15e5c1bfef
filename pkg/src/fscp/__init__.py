"""Joint functional-split and edge-caching placement for a three-tier RAN."""
from .assignment import Assignment
from .scenario import Scenario, ScenarioError, load_scenario, save_scenario, validate
from .solver import Solution, SolverOptions, solve

__all__ = ["Assignment", "Scenario", "ScenarioError", "Solution", "SolverOptions", "load_scenario",
           "save_scenario", "solve", "validate"]
__version__ = "0.1.0"
