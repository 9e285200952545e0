"""
Dual-variable updates and shared-budget water levels.

``dual_update`` is the projected subgradient step the block dual loops
share. ``share_budget`` finds the multiplier of a budget shared by several
clusters (satellite bandwidth, satellite power) given each cluster's value
and marginal-value functions.
"""

import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..core.models import SolverConfig
from ..utils.logging import StructuredLogger
from .closed_forms import solve_increasing
from .state import DualState

logger = StructuredLogger(__name__)


def dual_update(duals: DualState, subgradients: Dict[str, np.ndarray],
                cfg: SolverConfig) -> DualState:
    """
    Projected ascent ``lambda <- max(0, lambda + delta_k * residual)`` per family.

    ``delta_k = delta0 / sqrt(k)`` with ``delta0`` taken from the family's
    base step (a scalar or one value per element, set when the block loop
    starts), falling back to ``cfg.dual_base_step`` and then to 1.
    """
    out = duals.copy()
    out.k = duals.k + 1
    for family, residual in subgradients.items():
        base = out.base_step.get(family)
        if base is None:
            base = cfg.dual_base_step if cfg.dual_base_step is not None else 1.0
        step = np.asarray(base, dtype=float) / math.sqrt(out.k)
        current = getattr(out, family)
        setattr(out, family, np.maximum(0.0, current + step * np.asarray(residual, dtype=float)))
    return out


def record_dual_limit(events: Dict[str, int], block: str, iterations: int,
                      residual: float) -> None:
    """Count a block dual loop that stopped at ``dual_max_iters``."""
    events["dual_max_iters"] = events.get("dual_max_iters", 0) + 1
    logger.warning("dual loop hit its iteration limit", block=block,
                   iterations=iterations, residual=residual)


def relative_steps(values: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """
    Per-element base steps sized to the multipliers' own magnitudes.

    Zero entries borrow the largest positive one; ``cfg.dual_base_step``
    overrides the scaling when set.
    """
    values = np.asarray(values, dtype=float)
    if cfg.dual_base_step is not None:
        return np.full(values.shape, float(cfg.dual_base_step))
    positive = values[values > 0]
    fallback = float(np.max(positive)) if positive.size else 1.0
    return np.where(values > 0, values, fallback)


ValueFn = Callable[[int, float], float]


def _stationary_point(marginal: ValueFn, n: int, lam: float, lo: float, hi: float) -> Optional[float]:
    if hi <= lo:
        return None
    g_lo, g_hi = marginal(n, lo) - lam, marginal(n, hi) - lam
    if g_lo < 0 or g_hi > 0:
        return None
    if g_lo == 0:
        return lo
    if g_hi == 0:
        return hi
    u = brentq(lambda v: marginal(n, math.exp(v)) - lam, math.log(lo), math.log(hi),
               xtol=1e-15, rtol=1e-14, maxiter=300)
    return math.exp(u)


def _best_response(value: ValueFn, marginal: ValueFn, n: int, lam: float,
                   lower: float, upper: float, concave_lo: float, concave_hi: float) -> float:
    candidates = [lower, upper]
    root = _stationary_point(marginal, n, lam, max(lower, concave_lo), min(upper, concave_hi))
    if root is not None:
        candidates.append(root)
    scores = [value(n, x) - lam * x for x in candidates]
    return candidates[int(np.argmax(scores))]


def share_budget(total: float, lower: Sequence[float], upper: Sequence[float],
                 value: ValueFn, marginal: ValueFn,
                 concave_lo: Sequence[float], concave_hi: Sequence[float],
                 spread: bool = False) -> Tuple[np.ndarray, float]:
    """
    Split ``total`` across clusters to maximise ``sum_n value(n, x_n)``.

    Each ``x_n`` is kept in ``[lower_n, upper_n]``. When the caps fit inside
    the budget they are returned as-is with a zero multiplier, unless
    ``spread`` is set, in which case the leftover is shared by treating the
    caps as lower bounds. Returns the split and the budget multiplier.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n_items = lower.size

    if np.sum(upper) <= total:
        if not spread:
            return upper.copy(), 0.0
        lower, upper = upper.copy(), np.full(n_items, float(total))
    if np.sum(lower) >= total:
        return lower * (total / np.sum(lower)), math.inf

    def allocation(lam: float) -> np.ndarray:
        return np.array([
            _best_response(value, marginal, n, lam, lower[n], upper[n], concave_lo[n], concave_hi[n])
            for n in range(n_items)
        ])

    lam = solve_increasing(lambda v: -float(np.sum(allocation(v))), -total, 1e-6, 1e6)
    x = allocation(lam)
    nudge = 1e-12
    while np.sum(x) > total and nudge < 1.0:
        lam *= 1.0 + nudge
        x = allocation(lam)
        nudge *= 4.0
    if np.sum(x) > total:
        x = lower + (x - lower) * ((total - np.sum(lower)) / np.sum(x - lower))

    leftover = total - float(np.sum(x))
    if leftover > 0:
        order = np.argsort([-marginal(n, x[n]) for n in range(n_items)])
        for n in order:
            room = upper[n] - x[n]
            if room <= 0:
                continue
            take = min(room, leftover)
            x[n] += take
            leftover -= take
            if leftover <= 0:
                break
    return x, float(lam)
