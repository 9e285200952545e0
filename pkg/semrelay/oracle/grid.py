"""
Brute-force oracle for tiny instances.

Searches a grid over the free variables of the original problem (downlink
bandwidth and power splits at full UAV power, UAV positions within the
bounding box of each cluster's users and, with two clusters, the split of
the satellite budgets), then refines the incumbent one coordinate at a time.
Each cluster's satellite-hop bandwidth is not searched: it is placed where
the satellite hop and the downlinks carry the same rate, capped by the
cluster's satellite bandwidth share. Every returned point is re-checked
against the original constraints with true channel gains.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq

from ..core import semcom
from ..core.exceptions import OracleRefusalError
from ..core.models import NetworkInstance
from ..core.netmodel import (
    Allocation,
    ConstraintResiduals,
    ORIGINAL_CONSTRAINTS,
    build_arrays,
    constraint_residuals,
    sum_rate,
    transmit_budget,
)
from ..utils.logging import StructuredLogger

logger = StructuredLogger(__name__)

MAX_CLUSTERS = 2
MAX_USERS = 3
FEASIBILITY_TOL = 1e-12


class GridSpec(BaseModel):
    """Grid resolution, refinement schedule and evaluation batch size."""

    model_config = ConfigDict(extra="forbid")

    resolution: int = Field(default=21, ge=3, description="Points per axis before the size cap")
    max_points: int = Field(default=200_000, ge=27, description="Cap on the full grid size")
    refine_rounds: int = Field(default=8, ge=0)
    refine_points: int = Field(default=41, ge=3)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    chunk_size: int = Field(default=20_000, ge=1)
    bisection_steps: int = Field(default=80, ge=10)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float

    @property
    def free(self) -> bool:
        return self.hi > self.lo


@dataclass
class OracleResult:
    """Incumbent of a grid search; unpacks as ``(allocation, objective)``."""

    allocation: Allocation
    objective: float
    grid_objective: float
    evaluations: int
    history: List[float]
    residuals: ConstraintResiduals
    axes: List[str] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        return iter((self.allocation, self.objective))


def feasible(instance: NetworkInstance, allocation: Allocation,
             tol: float = FEASIBILITY_TOL) -> Tuple[bool, ConstraintResiduals]:
    """
    Check the original budgets and rate-balance constraints with true gains.

    Returns whether every residual is within ``tol`` times its scale, and
    the residual record.
    """
    residuals = constraint_residuals(instance, allocation)
    return residuals.satisfied(tol, ORIGINAL_CONSTRAINTS), residuals


def _stick_breaking(u: np.ndarray) -> np.ndarray:
    """Map ``(M, k-1)`` values in [0, 1] to ``(M, k)`` nonnegative fractions summing to 1."""
    m, k1 = u.shape
    out = np.empty((m, k1 + 1))
    rest = np.ones(m)
    for j in range(k1):
        out[:, j] = rest * u[:, j]
        rest = rest - out[:, j]
    out[:, k1] = np.maximum(rest, 0.0)
    return out


class _Search:
    """Vectorised objective over grid coordinates for one instance."""

    def __init__(self, instance: NetworkInstance, grid: GridSpec):
        self.instance = instance
        self.grid = grid
        self.arrays = build_arrays(instance)
        self.p_tx = transmit_budget(instance, self.arrays)
        self.members = [self.arrays.members(n) for n in range(self.arrays.n_clusters)]
        self.axes: List[Axis] = []
        self.slots: List[Dict[str, List[int]]] = []
        for n, idx in enumerate(self.members):
            slot: Dict[str, List[int]] = {"b": [], "p": [], "xy": []}
            for j in range(idx.size - 1):
                slot["b"].append(self._add(f"b_split_{n}_{j}", 0.0, 1.0))
            for j in range(idx.size - 1):
                slot["p"].append(self._add(f"p_split_{n}_{j}", 0.0, 1.0))
            lo = self.arrays.user_xy[idx].min(axis=0)
            hi = self.arrays.user_xy[idx].max(axis=0)
            for d, label in enumerate("xy"):
                slot["xy"].append(self._add(f"uav_{label}_{n}", float(lo[d]), float(hi[d])))
            self.slots.append(slot)
        self.shares = None
        if self.arrays.n_clusters == 2:
            self.shares = (self._add("b_s_share", 0.0, 1.0), self._add("p_s_share", 0.0, 1.0))

    def _add(self, name: str, lo: float, hi: float) -> int:
        self.axes.append(Axis(name, lo, hi))
        return len(self.axes) - 1

    @property
    def lo(self) -> np.ndarray:
        return np.array([a.lo for a in self.axes])

    @property
    def hi(self) -> np.ndarray:
        return np.array([a.hi for a in self.axes])

    def supply(self, n: int, b: np.ndarray, p_s: np.ndarray) -> np.ndarray:
        """Satellite-hop rate into cluster ``n`` for bandwidths ``b`` and powers ``p_s``."""
        sem, arrays = self.instance.sem, self.arrays
        safe_b = np.where(b > 0, b, 1.0)
        snr = p_s * arrays.sat_gain[n] / (safe_b * arrays.noise)
        with np.errstate(divide="ignore"):
            r = np.where(snr > 0, 10.0 * np.log10(np.where(snr > 0, snr, 1.0)), -np.inf)
        eps = np.asarray(semcom.similarity(r, sem))
        return np.where(b > 0, sem.mu1 / sem.q_symbols * b * eps, 0.0)

    def decode(self, pts: np.ndarray, n: int) -> Tuple[np.ndarray, ...]:
        """Bandwidth fractions, powers, UAV position and satellite caps of cluster ``n``."""
        budgets = self.instance.budgets
        slot = self.slots[n]
        phi = _stick_breaking(pts[:, slot["b"]])
        pi = _stick_breaking(pts[:, slot["p"]])
        xy = pts[:, slot["xy"]]
        if self.shares is None:
            b_cap = np.full(pts.shape[0], budgets.b_s_hz)
            p_s = np.full(pts.shape[0], budgets.p_s_w)
        else:
            sb, sp = pts[:, self.shares[0]], pts[:, self.shares[1]]
            b_cap = budgets.b_s_hz * (sb if n == 0 else 1.0 - sb)
            p_s = budgets.p_s_w * (sp if n == 0 else 1.0 - sp)
        return phi, self.p_tx[n] * pi, xy, b_cap, p_s

    def link_factors(self, n: int, p_user: np.ndarray, xy: np.ndarray) -> np.ndarray:
        arrays, idx = self.arrays, self.members[n]
        delta = xy[:, None, :] - arrays.user_xy[idx][None, :, :]
        d2 = np.sum(delta * delta, axis=-1) + arrays.height[n] ** 2
        gain = arrays.beta0 * d2 ** (-arrays.alpha / 2.0)
        return p_user * gain / arrays.noise

    def downlink(self, n: int, phi: np.ndarray, a: np.ndarray, total: np.ndarray) -> np.ndarray:
        w = self.arrays.weight[self.members[n]]
        bw = phi * total[:, None]
        safe = np.where(bw > 0, bw, 1.0)
        return np.sum(np.where(bw > 0, w * bw * np.log2(1.0 + a / safe), 0.0), axis=1)

    def balance(self, n: int, phi: np.ndarray, a: np.ndarray, b_cap: np.ndarray,
                p_s: np.ndarray) -> np.ndarray:
        """Satellite-hop bandwidth at the rate crossing, capped by the share."""
        b_r = self.instance.budgets.b_r_hz
        lo = np.zeros(phi.shape[0])
        hi = np.full(phi.shape[0], b_r)
        for _ in range(self.grid.bisection_steps):
            mid = 0.5 * (lo + hi)
            short = self.supply(n, mid, p_s) < self.downlink(n, phi, a, b_r - mid)
            lo = np.where(short, mid, lo)
            hi = np.where(short, hi, mid)
        return np.minimum(lo, b_cap)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        total = np.zeros(pts.shape[0])
        for n in range(self.arrays.n_clusters):
            phi, p_user, xy, b_cap, p_s = self.decode(pts, n)
            a = self.link_factors(n, p_user, xy)
            b_s = self.balance(n, phi, a, b_cap, p_s)
            total += self.supply(n, b_s, p_s)
        return total

    def allocation(self, point: np.ndarray) -> Allocation:
        """Feasible allocation at a grid coordinate; downlinks shrink to what the satellite delivers."""
        arrays, b_r = self.arrays, self.instance.budgets.b_r_hz
        pts = point[None, :]
        alloc = Allocation.zeros(arrays)
        for n, idx in enumerate(self.members):
            phi, p_user, xy, b_cap, p_s = self.decode(pts, n)
            a = self.link_factors(n, p_user, xy)
            b_s = self.balance(n, phi, a, b_cap, p_s)
            supply = float(self.supply(n, b_s, p_s)[0])

            def excess(total: float) -> float:
                return float(self.downlink(n, phi, a, np.array([total]))[0]) - supply

            room = max(b_r - float(b_s[0]), 0.0)
            total = room
            if excess(room) > 0:
                total = brentq(excess, 0.0, room, xtol=1e-12, rtol=1e-14) if excess(0.0) < 0 else 0.0
                nudge = 1e-13
                while total > 0 and excess(total) > 0 and nudge < 1.0:
                    total *= 1.0 - nudge
                    nudge *= 4.0
            alloc.b_s2r[n] = float(b_s[0])
            alloc.p_s2r[n] = float(p_s[0])
            alloc.b_user[idx] = phi[0] * total
            alloc.p_user[idx] = p_user[0]
            alloc.uav_xy[n] = xy[0]
        return alloc


def _axis_values(axis: Axis, res: int) -> np.ndarray:
    return np.linspace(axis.lo, axis.hi, res) if axis.free else np.array([axis.lo])


def _grid_resolution(grid: GridSpec, dims: int) -> int:
    if dims == 0:
        return grid.resolution
    res = grid.resolution
    while res > 3 and res ** dims > grid.max_points:
        res -= 1
    return res


def check_size(instance: NetworkInstance) -> None:
    if instance.n_clusters > MAX_CLUSTERS or instance.n_users > MAX_USERS:
        raise OracleRefusalError(
            f"exhaustive search is limited to {MAX_CLUSTERS} clusters and {MAX_USERS} users",
            clusters=instance.n_clusters,
            users=instance.n_users,
        )


def grid_search(instance: NetworkInstance, grid: Optional[GridSpec] = None) -> OracleResult:
    """
    Exhaustive grid search followed by coordinate refinement.

    Raises ``OracleRefusalError`` for instances with more than two clusters or
    three users. Ties keep the first candidate in grid order.
    """
    check_size(instance)
    grid = grid or GridSpec()
    search = _Search(instance, grid)
    axes = search.axes
    dims = sum(1 for axis in axes if axis.free)
    res = _grid_resolution(grid, dims)
    values = [_axis_values(axis, res) for axis in axes]

    best_val = -np.inf
    best_pt = search.lo.copy()
    evaluations = 0
    product = itertools.product(*values)
    while True:
        chunk = list(itertools.islice(product, grid.chunk_size))
        if not chunk:
            break
        pts = np.asarray(chunk, dtype=float).reshape(len(chunk), len(axes))
        vals = search.evaluate(pts)
        evaluations += len(chunk)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_pt = float(vals[k]), pts[k].copy()
    history = [best_val]

    lo, hi = search.lo, search.hi
    span = np.where(hi > lo, (hi - lo) / max(res - 1, 1), 0.0)
    for _ in range(grid.refine_rounds):
        for j, axis in enumerate(axes):
            if not axis.free:
                continue
            cand = np.linspace(max(lo[j], best_pt[j] - span[j]), min(hi[j], best_pt[j] + span[j]),
                               grid.refine_points)
            pts = np.tile(best_pt, (cand.size, 1))
            pts[:, j] = cand
            vals = search.evaluate(pts)
            evaluations += cand.size
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val, best_pt = float(vals[k]), pts[k].copy()
        span = span * grid.shrink
        history.append(best_val)

    alloc = search.allocation(best_pt)
    ok, residuals = feasible(instance, alloc)
    if not ok:
        logger.warning("oracle incumbent failed the feasibility check; returning the idle allocation",
                       violated=residuals.violated(FEASIBILITY_TOL))
        alloc = Allocation.zeros(search.arrays)
        _, residuals = feasible(instance, alloc)
    objective = sum_rate(instance, alloc, search.arrays)
    logger.info("grid search finished", resolution=res, dims=dims,
                evaluations=evaluations, objective_bps=objective)
    return OracleResult(
        allocation=alloc,
        objective=objective,
        grid_objective=best_val,
        evaluations=evaluations,
        history=history,
        residuals=residuals,
        axes=[axis.name for axis in axes],
    )
