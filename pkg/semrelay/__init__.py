"""
Semantic relay optimization for satellite-UAV-ground networks

A Python package that maximises the downlink sum rate of a multi-cluster
network in which one satellite feeds several UAV relays over a semantic
link and each UAV serves semantic and conventional ground users.

This package provides:
- Network, link and semantic-rate models
- An alternating optimizer over bandwidth, auxiliary bounds, power and UAV placement
- Restricted baselines (fixed bandwidth, fixed power, fixed location)
- A brute-force oracle for tiny instances
- Experiment drivers for budget sweeps, user mixes and satellite trajectories

Example usage:
    from semrelay.core.models import ScenarioSpec, SolverConfig
    from semrelay.scenarios import generate
    from semrelay.solver import solve

    instance = generate(ScenarioSpec(clusters=2))
    report = solve(instance, SolverConfig())
"""

__version__ = "1.0.0"

from semrelay.core.exceptions import (
    ConfigurationError,
    DomainError,
    OracleRefusalError,
    SemRelayError,
    SolverError,
)
from semrelay.core.models import (
    BaselineMode,
    Budgets,
    Cluster,
    GroundUser,
    MixMode,
    NetworkInstance,
    RunConfig,
    ScenarioSpec,
    SolverConfig,
    UserKind,
)
from semrelay.core.netmodel import Allocation, sum_rate
from semrelay.solver import SolveReport, alternating_optimize, solve

# Version information
VERSION_INFO = {
    "major": 1,
    "minor": 0,
    "patch": 0,
    "release": "stable"
}

__all__ = [
    # Models
    "BaselineMode",
    "Budgets",
    "Cluster",
    "GroundUser",
    "MixMode",
    "NetworkInstance",
    "RunConfig",
    "ScenarioSpec",
    "SolverConfig",
    "UserKind",
    "Allocation",
    "sum_rate",
    # Solver
    "SolveReport",
    "alternating_optimize",
    "solve",
    # Exceptions
    "ConfigurationError",
    "DomainError",
    "OracleRefusalError",
    "SemRelayError",
    "SolverError",
    # Version
    "__version__",
    "VERSION_INFO",
]
