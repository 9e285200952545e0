"""
Alternating optimization over the bandwidth, auxiliary and power/placement
blocks, with the restricted baselines expressed as block plans.
"""

import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, TypeVar

import numpy as np

from ..core.exceptions import ConfigurationError, SemRelayError, SolverError
from ..core.models import BaselineMode, NetworkInstance, SolverConfig
from ..core.netmodel import (
    Allocation,
    NetworkArrays,
    build_arrays,
    constraint_residuals,
    sum_rate,
    transmit_budget,
)
from ..utils.logging import StructuredLogger, log_performance
from .auxiliary import solve_auxiliary
from .balance import restore_rate_balance
from .bandwidth import solve_bandwidth
from .kkt import kkt_residual
from .power_location import solve_power_location
from .state import AuxState, DualState, SolveReport, tight_aux

logger = StructuredLogger(__name__)

GUARD_REL = 1e-12

T = TypeVar("T")


@dataclass(frozen=True)
class BlockPlan:
    """Which primal blocks a mode optimizes and how rate balance is kept."""

    bandwidth: bool = True
    power: bool = True
    location: bool = True
    restore: str = "bandwidth"
    spread: bool = True
    tighten: bool = True

    @classmethod
    def for_mode(cls, mode: BaselineMode) -> "BlockPlan":
        if mode == BaselineMode.FIXED_BANDWIDTH:
            return cls(bandwidth=False, restore="power", spread=False, tighten=False)
        if mode == BaselineMode.FIXED_POWER:
            return cls(power=False)
        if mode == BaselineMode.FIXED_LOCATION:
            return cls(location=False)
        return cls()

    @property
    def power_location_blocks(self) -> Tuple[str, ...]:
        """KKT blocks the power/placement step is responsible for."""
        blocks = ("power",) if self.power else ()
        blocks += ("location",) if self.location else ()
        return blocks + ("satellite_snr",)


def check_instance(instance: NetworkInstance, cfg: SolverConfig) -> None:
    """Reject instances no allocation can serve."""
    budgets = instance.budgets
    if instance.n_clusters == 0:
        raise ConfigurationError("instance has no clusters", config_key="scenario.clusters")
    for cluster in instance.clusters:
        if not cluster.users:
            raise ConfigurationError(
                f"cluster {cluster.index} has no users",
                config_key="scenario.users_per_cluster",
            )
        if (len(cluster.users) + 1) * cfg.floor_hz >= budgets.b_r_hz:
            raise ConfigurationError("UAV bandwidth cannot cover the bandwidth floors",
                                     config_key="budgets.b_r_hz")
    if instance.n_clusters * cfg.floor_hz >= budgets.b_s_hz:
        raise ConfigurationError("satellite bandwidth cannot cover the bandwidth floors",
                                 config_key="budgets.b_s_hz")
    if instance.n_clusters * cfg.floor_w >= budgets.p_s_w:
        raise ConfigurationError("satellite power cannot cover the power floors",
                                 config_key="budgets.p_s_w")


def init_allocation(instance: NetworkInstance, cfg: SolverConfig,
                    arrays: Optional[NetworkArrays] = None,
                    events: Optional[Dict[str, int]] = None,
                    restore: str = "bandwidth") -> Tuple[Allocation, AuxState]:
    """
    Feasible starting point: equal shares of every budget, UAVs above their
    user centroids, downlink bandwidth (or power, ``restore="power"``) shrunk
    where the satellite hop cannot keep up, and tight auxiliary bounds.
    """
    check_instance(instance, cfg)
    arrays = arrays or build_arrays(instance)
    budgets = instance.budgets
    n = arrays.n_clusters
    p_tx = transmit_budget(instance, arrays)

    b_s = min(budgets.b_s_hz / n, budgets.b_r_hz / 2.0)
    per_user = arrays.users_per_cluster[arrays.user_cluster].astype(float)
    alloc = Allocation(
        b_s2r=np.full(n, b_s),
        p_s2r=np.full(n, budgets.p_s_w / n),
        b_user=(budgets.b_r_hz - b_s) / per_user,
        p_user=p_tx[arrays.user_cluster] / per_user,
        uav_xy=arrays.centroid.copy(),
    )
    alloc = restore_rate_balance(instance, alloc, arrays, restore=restore, floor_hz=cfg.floor_hz,
                                 floor_w=cfg.floor_w, events=events)
    return alloc, tight_aux(arrays, alloc)


def run_block(block: str, func: Callable[..., T], *args: Any, **kwargs: Any) -> T:
    """Call one block solver, reporting numerical failures as :class:`SolverError`."""
    try:
        return func(*args, **kwargs)
    except SemRelayError:
        raise
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        raise SolverError(f"{block} block failed: {exc}", subproblem=block) from exc


def _accept(new: float, old: float) -> bool:
    return new >= old - GUARD_REL * abs(old)


@log_performance
def alternating_optimize(instance: NetworkInstance, cfg: SolverConfig,
                         mode: BaselineMode = BaselineMode.JOINT,
                         start: Optional[Allocation] = None,
                         start_label: str = "init",
                         arrays: Optional[NetworkArrays] = None) -> SolveReport:
    """
    Run the block loop for one mode from one starting allocation.

    Each block's output is kept only if it does not lower the true sum rate,
    so the objective trace is nondecreasing. The reported KKT residual is the
    largest over the blocks, each measured at its last accepted output.
    Numerical failures inside a block surface as :class:`SolverError`.
    The loop stops when the relative change of the sum rate drops to
    ``cfg.outer_rel_tol`` or after ``cfg.outer_max_iters`` rounds.
    """
    t0 = time.perf_counter()
    arrays = arrays or build_arrays(instance)
    plan = BlockPlan.for_mode(mode)
    events: Dict[str, int] = {}

    if start is None:
        alloc, aux = run_block("init", init_allocation, instance, cfg, arrays, events,
                               restore=plan.restore)
    else:
        check_instance(instance, cfg)
        alloc = run_block("init", restore_rate_balance, instance, start, arrays,
                          restore=plan.restore, floor_hz=cfg.floor_hz, floor_w=cfg.floor_w,
                          events=events)
        aux = tight_aux(arrays, alloc)
    duals = DualState.zeros(arrays.n_clusters, arrays.n_users)

    objective = sum_rate(instance, alloc, arrays)
    trace: List[float] = [objective]
    dual_iters = {"bandwidth": 0, "auxiliary": 0, "power_location": 0}
    block_kkt: Dict[str, float] = {}
    status = "max_iters"
    iteration = 0

    def guarded(candidate: Allocation, current: Allocation, current_obj: float) -> Tuple[Allocation, float]:
        value = sum_rate(instance, candidate, arrays)
        if _accept(value, current_obj):
            return candidate, value
        events["reverted"] = events.get("reverted", 0) + 1
        return current, current_obj

    def block_residual(blocks: Tuple[str, ...]) -> float:
        return kkt_residual(instance, alloc, aux, duals, arrays, cfg.floor_hz, cfg.floor_w,
                            blocks=blocks)

    for iteration in range(1, cfg.outer_max_iters + 1):
        previous = objective

        if plan.bandwidth:
            candidate, cand_duals, used = run_block(
                "bandwidth", solve_bandwidth, instance, alloc, aux, duals, cfg, arrays, events)
            dual_iters["bandwidth"] += used
            alloc, objective = guarded(candidate, alloc, objective)
            if alloc is candidate:
                duals = cand_duals
                block_kkt["bandwidth"] = block_residual(("bandwidth",))

        aux, duals, used = run_block(
            "auxiliary", solve_auxiliary, instance, alloc, aux, duals, cfg, arrays, events)
        dual_iters["auxiliary"] += used
        block_kkt["auxiliary"] = block_residual(("auxiliary",))

        candidate, cand_aux, cand_duals, used = run_block(
            "power_location", solve_power_location, instance, alloc, aux, duals, cfg, arrays,
            optimize_power=plan.power, optimize_location=plan.location,
            restore=plan.restore, spread=plan.spread, tighten=plan.tighten, events=events,
        )
        dual_iters["power_location"] += used
        alloc, objective = guarded(candidate, alloc, objective)
        if alloc is candidate:
            aux, duals = cand_aux, cand_duals
            block_kkt["power_location"] = block_residual(plan.power_location_blocks)
        else:
            aux = tight_aux(arrays, alloc)

        trace.append(objective)
        if abs(objective - previous) <= cfg.outer_rel_tol * max(abs(previous), 1.0):
            status = "converged"
            break

    kkt = max(block_kkt.values()) if block_kkt else None
    residuals = constraint_residuals(instance, alloc, aux, arrays)
    report = SolveReport(
        mode=mode.value,
        allocation=alloc,
        aux=aux,
        duals=duals,
        objective=objective,
        objective_trace=trace,
        status=status,
        outer_iterations=iteration,
        dual_iterations=dual_iters,
        residuals=residuals,
        kkt_residual=kkt,
        events=events,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        start=start_label,
    )
    if status != "converged":
        logger.warning("outer loop hit the iteration limit", mode=mode.value, iterations=iteration)
    logger.info("solve finished", mode=mode.value, start=start_label, status=status,
                iterations=iteration, sum_rate_bps=objective)
    return report


def solve(instance: NetworkInstance, cfg: SolverConfig,
          mode: BaselineMode = BaselineMode.JOINT,
          warm_starts: Optional[Mapping[str, Allocation]] = None) -> SolveReport:
    """
    Solve one mode, additionally restarting from each warm start when
    ``cfg.multi_start`` is set, and keep the best result.
    """
    arrays = build_arrays(instance)
    best = alternating_optimize(instance, cfg, mode, arrays=arrays)
    if not cfg.multi_start or not warm_starts:
        return best
    for label, start in warm_starts.items():
        report = alternating_optimize(instance, cfg, mode, start=start.copy(),
                                      start_label=label, arrays=arrays)
        if report.objective > best.objective:
            best = report
    return best
