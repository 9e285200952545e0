"""
Experiment drivers: baseline comparisons, budget and population sweeps,
user-mix scenarios, the satellite trajectory and the UAV placement study.

Every driver returns plain rows so the CLI can write them as CSV or JSON.
"""

from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

from ..core.exceptions import ConfigurationError
from ..core.models import BaselineMode, MixMode, NetworkInstance, RunConfig, SolverConfig
from ..core.netmodel import build_arrays
from ..solver.ao import solve
from ..solver.state import SolveReport, placement_report
from ..utils.logging import StructuredLogger
from .generator import instance_from_config, trajectory_instances

logger = StructuredLogger(__name__)

RESTRICTED_MODES = (
    BaselineMode.FIXED_BANDWIDTH,
    BaselineMode.FIXED_POWER,
    BaselineMode.FIXED_LOCATION,
)
BUDGET_AXES = ("b_r_hz", "p_r_w", "b_s_hz", "p_s_w")


@dataclass
class SweepRow:
    """One (axis value, mode) result."""

    axis: Union[float, str]
    mode: str
    sum_rate_bps: float
    iters: int
    max_residual: float
    wall_ms: float
    status: str = "converged"

    @classmethod
    def from_report(cls, axis: Union[float, str], report: SolveReport) -> "SweepRow":
        return cls(
            axis=axis,
            mode=report.mode,
            sum_rate_bps=report.objective,
            iters=report.outer_iterations,
            max_residual=report.max_residual,
            wall_ms=report.wall_ms,
            status=report.status,
        )

    def to_dict(self) -> Dict[str, Union[float, str, int]]:
        return asdict(self)


def run_baseline(instance: NetworkInstance, mode: BaselineMode, cfg: SolverConfig,
                 warm_starts: Optional[Mapping[str, object]] = None) -> SolveReport:
    """
    Solve ``instance`` in one mode.

    The joint mode is also restarted from the restricted baselines'
    allocations when ``cfg.multi_start`` is set; they are computed here when
    the caller does not supply them.
    """
    if mode == BaselineMode.JOINT and cfg.multi_start and warm_starts is None:
        warm_starts = {m.value: solve(instance, cfg, m).allocation for m in RESTRICTED_MODES}
    return solve(instance, cfg, mode, warm_starts=warm_starts)


def run_modes(instance: NetworkInstance, modes: Sequence[BaselineMode],
              cfg: SolverConfig) -> Dict[BaselineMode, SolveReport]:
    """Solve every requested mode, reusing restricted results as joint warm starts."""
    reports: Dict[BaselineMode, SolveReport] = {}
    wanted = list(dict.fromkeys(modes))
    restricted = [m for m in RESTRICTED_MODES if m in wanted]
    if BaselineMode.JOINT in wanted and cfg.multi_start:
        restricted = list(RESTRICTED_MODES)
    for mode in restricted:
        reports[mode] = solve(instance, cfg, mode)
    if BaselineMode.JOINT in wanted:
        starts = {m.value: reports[m].allocation for m in RESTRICTED_MODES if m in reports}
        reports[BaselineMode.JOINT] = run_baseline(instance, BaselineMode.JOINT, cfg,
                                                   warm_starts=starts if cfg.multi_start else None)
    return {mode: reports[mode] for mode in wanted}


def _rows(axis: Union[float, str], reports: Mapping[BaselineMode, SolveReport]) -> List[SweepRow]:
    return [SweepRow.from_report(axis, report) for report in reports.values()]


def sweep_instance(config: RunConfig, axis: str, value: float) -> NetworkInstance:
    """Instance for one sweep point."""
    if axis in BUDGET_AXES:
        budgets = config.budgets.model_copy(update={axis: float(value)})
        return instance_from_config(config, budgets=budgets)
    spec = config.scenario
    if axis == "users_per_cluster":
        per = int(value)
        sem = int(round(per * spec.sem_per_cluster / max(spec.users_per_cluster, 1)))
        return instance_from_config(config, spec.model_copy(
            update={"sem_per_cluster": sem, "con_per_cluster": per - sem}))
    if axis == "clusters":
        n = int(value)
        total = spec.clusters * spec.users_per_cluster
        if n < 1 or total % n:
            raise ConfigurationError(
                f"{total} users cannot be split evenly over {n} clusters",
                config_key="sweep.values",
            )
        per = total // n
        sem = per * spec.sem_per_cluster // max(spec.users_per_cluster, 1)
        return instance_from_config(config, spec.model_copy(
            update={"clusters": n, "sem_per_cluster": sem, "con_per_cluster": per - sem}))
    raise ConfigurationError(f"unknown sweep axis '{axis}'", config_key="sweep.axis")


def sweep(config: RunConfig, axis: Optional[str] = None,
          values: Optional[Sequence[float]] = None,
          modes: Optional[Sequence[BaselineMode]] = None) -> List[SweepRow]:
    """
    One row per (value, mode) along a budget or population axis.

    Budget axes replace one budget and keep the users; ``users_per_cluster``
    regenerates every cluster with the given size and the configured
    semantic share; ``clusters`` spreads the configured total population over
    the given number of clusters.
    """
    axis = axis or config.sweep.axis
    values = list(values if values is not None else config.sweep.values)
    if any(b < a for a, b in zip(values, values[1:])):
        raise ConfigurationError("sweep values must be sorted ascending", config_key="sweep.values")
    modes = list(modes or config.modes)
    rows: List[SweepRow] = []
    logger.set_context(axis=axis)
    try:
        for value in values:
            instance = sweep_instance(config, axis, value)
            reports = run_modes(instance, modes, config.solver)
            rows.extend(_rows(value, reports))
            logger.info("sweep point", value=value,
                        sum_rate_bps={m.value: r.objective for m, r in reports.items()})
    finally:
        logger.clear_context()
    return rows


def trajectory_sweep(config: RunConfig,
                     modes: Optional[Sequence[BaselineMode]] = None) -> List[SweepRow]:
    """One row per (satellite longitude, mode) along the configured ground track."""
    modes = list(modes or config.modes)
    rows: List[SweepRow] = []
    for lon, instance in trajectory_instances(config):
        rows.extend(_rows(lon, run_modes(instance, modes, config.solver)))
    return rows


def compare_scenarios(config: RunConfig,
                      mixes: Sequence[MixMode] = tuple(MixMode),
                      modes: Optional[Sequence[BaselineMode]] = None) -> List[SweepRow]:
    """One row per (user mix, mode) with everything else as configured."""
    modes = list(modes or config.modes)
    rows: List[SweepRow] = []
    for mix in mixes:
        instance = instance_from_config(config, config.scenario.model_copy(update={"mix": mix}))
        rows.extend(_rows(mix.value, run_modes(instance, modes, config.solver)))
    return rows


def placement_study(config: RunConfig,
                    layouts: Sequence[str] = ("regular", "random")) -> List[Dict[str, Union[float, str, int]]]:
    """
    Joint-mode UAV positions against their users' centroids, one row per
    cluster and layout.
    """
    rows: List[Dict[str, Union[float, str, int]]] = []
    for layout in layouts:
        instance = instance_from_config(config, config.scenario.model_copy(update={"layout": layout}))
        report = run_baseline(instance, BaselineMode.JOINT, config.solver)
        for row in placement_report(build_arrays(instance), report.allocation):
            rows.append({"layout": layout, **row, "sum_rate_bps": report.objective})
    return rows
