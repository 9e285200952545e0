"""Instance generators and experiment drivers."""

from .experiments import (
    SweepRow,
    compare_scenarios,
    placement_study,
    run_baseline,
    run_modes,
    sweep,
    trajectory_sweep,
)
from .generator import cluster_mix, generate, instance_from_config, trajectory_instances

__all__ = [
    "SweepRow",
    "cluster_mix",
    "compare_scenarios",
    "generate",
    "instance_from_config",
    "placement_study",
    "run_baseline",
    "run_modes",
    "sweep",
    "trajectory_instances",
    "trajectory_sweep",
]
