"""
Alternating optimizer for the relay sum-rate problem.

Blocks: bandwidth (satellite hop and downlinks), auxiliary bounds, and
powers with UAV placement. ``solve`` runs one mode with optional warm
starts; ``alternating_optimize`` runs one start.
"""

from .ao import BlockPlan, alternating_optimize, init_allocation, solve
from .auxiliary import solve_auxiliary
from .balance import restore_rate_balance, tighten_b_s2r
from .bandwidth import solve_bandwidth
from .kkt import kkt_components, kkt_residual
from .power_location import solve_power_location
from .state import AuxState, DualState, SolveReport

__all__ = [
    "AuxState",
    "BlockPlan",
    "DualState",
    "SolveReport",
    "alternating_optimize",
    "init_allocation",
    "kkt_components",
    "kkt_residual",
    "restore_rate_balance",
    "solve",
    "solve_auxiliary",
    "solve_bandwidth",
    "solve_power_location",
    "tighten_b_s2r",
]
