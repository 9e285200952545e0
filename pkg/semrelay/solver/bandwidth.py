"""
Bandwidth block: satellite-hop and downlink bandwidths with powers, positions
and auxiliary bounds fixed.

Within a cluster, downlink bandwidths follow a common water level ``theta``.
A cluster's best split of its UAV bandwidth balances the satellite-hop rate
against the downlink sum rate. When the balanced satellite bandwidths do not
fit in the satellite budget, the budget is shared at a common marginal rate
and each cluster's downlinks take the least bandwidth that carries what the
satellite delivers, so the rate-balance constraint holds with equality.

That water-level point seeds the multipliers of a projected subgradient
loop over the closed-form bandwidths, with the SNR, spectral-efficiency and
satellite-SNR bounds linearised at the seed. Each closed-form iterate is
repaired onto the budgets and rate balance before it is scored.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core import semcom
from ..core.models import NetworkInstance, SolverConfig
from ..core.netmodel import (
    Allocation,
    NetworkArrays,
    build_arrays,
    s2r_snr_db,
    surrogate_sum_rate,
    user_snr,
)
from ..utils.logging import StructuredLogger
from . import closed_forms as cf
from .balance import count_event, restore_rate_balance
from .duals import dual_update, record_dual_limit, relative_steps, share_budget
from .kkt import bandwidth_components
from .state import AuxState, DualState

logger = StructuredLogger(__name__)

TIE_REL = 1e-12


@dataclass
class ClusterLinks:
    """Downlinks of one cluster with powers and gains frozen."""

    idx: np.ndarray
    a: np.ndarray  # p g / N0, Hz
    w: np.ndarray
    floor: float

    def bandwidth(self, theta: float) -> np.ndarray:
        return cf.user_bandwidth_at_level(theta, self.a, self.w, self.floor)

    def total_bandwidth(self, theta: float) -> float:
        return float(np.sum(self.bandwidth(theta)))

    def rate(self, theta: float) -> float:
        return float(np.sum(cf.user_rate(self.bandwidth(theta), self.a, self.w)))


def cluster_links(arrays: NetworkArrays, alloc: Allocation, gain: np.ndarray,
                  floor: float) -> List[ClusterLinks]:
    a = alloc.p_user * gain / arrays.noise
    return [
        ClusterLinks(idx=idx, a=a[idx], w=arrays.weight[idx], floor=floor)
        for idx in (arrays.members(n) for n in range(arrays.n_clusters))
    ]


def level_for_rate(links: ClusterLinks, target: float) -> float:
    """Smallest-bandwidth water level whose downlink rate does not exceed ``target``."""
    theta = cf.solve_increasing(lambda t: -links.rate(t), -target, 1e-3, 1e3)
    nudge = 1e-13
    while links.rate(theta) > target and nudge < 1.0:
        theta *= 1.0 + nudge
        nudge *= 4.0
    return theta


def balance_point(links: ClusterLinks, b_r: float, s_rate) -> Tuple[float, float, float]:
    """
    Water level at which the satellite hop and the downlinks carry the same rate
    when they share the UAV bandwidth ``b_r``.

    Returns ``(b_s2r, theta, rate)``.
    """
    def gap(theta: float) -> float:
        room = b_r - links.total_bandwidth(theta)
        return (s_rate(room) if room > 0 else 0.0) - links.rate(theta)

    theta = cf.solve_increasing(gap, 0.0, 1e-3, 1e3)
    b_s = max(b_r - links.total_bandwidth(theta), links.floor)
    return b_s, theta, links.rate(theta)


def water_level_response(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                         duals: DualState, cfg: SolverConfig, arrays: NetworkArrays,
                         events: Dict[str, int]) -> Tuple[Allocation, DualState]:
    """
    Bandwidths at the common water level of each cluster.

    Updates ``b_s2r`` and the downlink bandwidths, and derives the multipliers
    of the satellite bandwidth budget (lambda2), the UAV bandwidth budgets
    (lambda3), the rate balance (lambda11) and the satellite SNR bound (lambda7').
    """
    sem, budgets = instance.sem, instance.budgets
    floor = cfg.floor_hz
    out = alloc.copy()
    new = duals.copy()
    links = cluster_links(arrays, alloc, aux.h_hat, floor)

    def s_rate(n: int, b: float) -> float:
        return float(cf.s2r_rate(b, alloc.p_s2r[n], arrays.sat_gain[n], arrays.noise, sem))

    def s_marginal(n: int, b: float) -> float:
        return float(cf.s2r_bandwidth_marginal(b, alloc.p_s2r[n], arrays.sat_gain[n], arrays.noise, sem))

    n_clusters = arrays.n_clusters
    b_star = np.zeros(n_clusters)
    theta_star = np.zeros(n_clusters)
    for n, cl in enumerate(links):
        b_star[n], theta_star[n], _ = balance_point(cl, budgets.b_r_hz, lambda b, n=n: s_rate(n, b))

    # bandwidth above which the satellite rate stops being concave
    r_c = cf.concave_snr_db(sem)
    concave_hi = alloc.p_s2r * arrays.sat_gain / (arrays.noise * 10.0 ** (r_c / 10.0))
    b_s, lam2 = share_budget(
        budgets.b_s_hz, np.full(n_clusters, floor), b_star,
        value=s_rate, marginal=s_marginal,
        concave_lo=np.zeros(n_clusters), concave_hi=concave_hi,
    )
    lam2 = 0.0 if not np.isfinite(lam2) else lam2

    for n, cl in enumerate(links):
        balanced = b_s[n] >= b_star[n] * (1.0 - 1e-12)
        if balanced:
            b_s[n] = b_star[n]
            theta = theta_star[n]
            target = s_rate(n, b_s[n])
            nudge = 1e-13
            while cl.rate(theta) > target and nudge < 1.0:
                theta *= 1.0 + nudge
                nudge *= 4.0
        else:
            theta = level_for_rate(cl, s_rate(n, b_s[n]))
        b_u = cl.bandwidth(theta)
        room = budgets.b_r_hz - b_s[n]
        if np.sum(b_u) > room:
            # floors alone exceed the room left by the satellite hop
            b_u = b_u * (room / np.sum(b_u))
            count_event(events, "projection")
        count_event(events, "projection", int(np.count_nonzero(b_u <= floor)))
        out.b_user[cl.idx] = b_u
        new.theta[n] = theta

        slope = s_marginal(n, b_s[n])
        if balanced:
            lam11 = (lam2 + theta) / (slope + theta)
            new.lambda11[n] = min(lam11, 1.0)
            new.lambda3[n] = theta * (1.0 - new.lambda11[n])
        else:
            new.lambda11[n] = 1.0
            new.lambda3[n] = 0.0
        r = float(cf.s2r_snr_db(b_s[n], alloc.p_s2r[n], arrays.sat_gain[n], arrays.noise))
        new.lambda7p[n] = cf.lambda7p_from_tight(new.lambda11[n], arrays.sat_gain[n],
                                                 alloc.p_s2r[n], r, sem)

    out.b_s2r = b_s
    new.lambda2 = np.array([lam2])
    return out, new


@dataclass
class Linearisation:
    """Auxiliary bounds held fixed while the bandwidth multipliers move."""

    b_user: np.ndarray  # (K,) downlink bandwidths the bounds are tight at
    b_s2r: np.ndarray   # (N,)
    gamma: np.ndarray   # (K,) SNR bounds
    eta: np.ndarray     # (K,) spectral-efficiency bounds
    r_db: np.ndarray    # (N,) satellite SNR bounds


def linearise(arrays: NetworkArrays, alloc: Allocation, h_hat: np.ndarray) -> Linearisation:
    gamma = user_snr(arrays, alloc.b_user, alloc.p_user, h_hat)
    return Linearisation(
        b_user=alloc.b_user.copy(),
        b_s2r=alloc.b_s2r.copy(),
        gamma=gamma,
        eta=np.log2(1.0 + gamma),
        r_db=s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r),
    )


def closed_form_bandwidths(instance: NetworkInstance, arrays: NetworkArrays,
                           alloc: Allocation, h_hat: np.ndarray, lin: Linearisation,
                           duals: DualState, floor: float) -> Allocation:
    """Bandwidths from the block's stationarity conditions at the given multipliers."""
    sem, b_r = instance.sem, instance.budgets.b_r_hz
    uc = arrays.user_cluster
    a_b = cf.downlink_coupling(duals.lambda10[uc], duals.lambda11[uc], lin.eta,
                               arrays.weight, arrays.compute_per_bit)
    lam3_u = duals.lambda3[uc]
    b_user = np.array([
        cf.b_user_closed_form(duals.lambda8[u], h_hat[u], alloc.p_user[u], lam3_u[u], a_b[u],
                              arrays.weight[u], arrays.noise, floor, b_r)
        for u in range(arrays.n_users)
    ])

    lam2 = float(duals.lambda2[0])
    b_s2r = lin.b_s2r.copy()
    for n in range(arrays.n_clusters):
        if duals.lambda7p[n] <= 0:
            continue
        b = cf.s2r_bandwidth_closed_form(lam2, duals.lambda3[n], duals.lambda7p[n],
                                         duals.lambda11[n], arrays.sat_gain[n], alloc.p_s2r[n],
                                         lin.r_db[n], arrays.noise, sem)
        if np.isfinite(b) and b > 0:
            b_s2r[n] = b

    out = alloc.copy()
    out.b_user = b_user
    out.b_s2r = np.clip(b_s2r, floor, b_r)
    return out


def recover_feasible(instance: NetworkInstance, arrays: NetworkArrays, alloc: Allocation,
                     cfg: SolverConfig, events: Dict[str, int]) -> Allocation:
    """Scale an iterate onto the satellite and UAV bandwidth budgets, then restore rate balance."""
    budgets = instance.budgets
    out = alloc.copy()
    total = float(np.sum(out.b_s2r))
    if total > budgets.b_s_hz:
        out.b_s2r = out.b_s2r * (budgets.b_s_hz / total)
    for n in range(arrays.n_clusters):
        idx = arrays.members(n)
        room = budgets.b_r_hz - out.b_s2r[n]
        used = float(np.sum(out.b_user[idx]))
        if used > room:
            out.b_user[idx] = out.b_user[idx] * (room / used)
    return restore_rate_balance(instance, out, arrays, restore="bandwidth",
                                floor_hz=cfg.floor_hz, floor_w=cfg.floor_w, events=events)


def bandwidth_subgradients(instance: NetworkInstance, arrays: NetworkArrays,
                           alloc: Allocation, lin: Linearisation) -> Dict[str, np.ndarray]:
    """Relative constraint residuals of a closed-form iterate, positive when violated."""
    sem, budgets = instance.sem, instance.budgets
    supply_scale = sem.mu1 / sem.q_symbols * np.asarray(semcom.similarity(lin.r_db, sem))
    demand = arrays.cluster_sum(arrays.weight * alloc.b_user * lin.eta)
    supply = supply_scale * alloc.b_s2r
    scale = np.maximum(supply_scale * lin.b_s2r, 1.0)
    ratio_user = alloc.b_user / lin.b_user
    ratio_sat = alloc.b_s2r / lin.b_s2r
    return {
        "lambda2": np.array([(np.sum(alloc.b_s2r) - budgets.b_s_hz) / budgets.b_s_hz]),
        "lambda3": (alloc.b_s2r + arrays.cluster_sum(alloc.b_user) - budgets.b_r_hz) / budgets.b_r_hz,
        "lambda11": (demand - supply) / scale,
        "lambda8": ratio_user - 1.0,
        "lambda7p": ratio_sat * (ratio_sat - 1.0),
    }


def solve_bandwidth(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                    duals: DualState, cfg: SolverConfig,
                    arrays: Optional[NetworkArrays] = None,
                    events: Optional[Dict[str, int]] = None) -> Tuple[Allocation, DualState, int]:
    """
    Optimal bandwidths for fixed powers, positions and gain bounds.

    The water-level point and its multipliers start a projected subgradient
    loop on the satellite budget (lambda2), the UAV budgets (lambda3), the
    rate balance (lambda11), the SNR bounds (lambda8) and the satellite SNR
    bounds (lambda7'). The loop stops once the repaired iterate meets the
    block's KKT conditions within ``cfg.kkt_tol``; the best iterate seen by
    surrogate sum rate is returned with its multipliers.

    Returns the allocation, the multipliers and the number of dual iterations.
    """
    arrays = arrays or build_arrays(instance)
    events = events if events is not None else {}
    h_hat = aux.h_hat
    start, new = water_level_response(instance, alloc, aux, duals, cfg, arrays, events)
    lin = linearise(arrays, start, h_hat)
    uc = arrays.user_cluster
    new.lambda8 = cf.lambda8_from_tight(new.lambda11[uc], arrays.weight, lin.b_user, lin.gamma)
    new.k = 0
    for family in ("lambda2", "lambda3", "lambda11", "lambda8", "lambda7p"):
        new.base_step[family] = relative_steps(getattr(new, family), cfg)

    best, best_duals = start, new
    best_value = surrogate_sum_rate(arrays, start, h_hat)
    residual = np.inf
    iters = 0
    for iters in range(1, cfg.dual_max_iters + 1):
        raw = closed_form_bandwidths(instance, arrays, start, h_hat, lin, new, cfg.floor_hz)
        candidate = recover_feasible(instance, arrays, raw, cfg, events)
        value = surrogate_sum_rate(arrays, candidate, h_hat)
        if value >= best_value - TIE_REL * max(abs(best_value), 1.0):
            best, best_duals, best_value = candidate, new, value
        residual = max(bandwidth_components(instance, candidate, aux, new, arrays,
                                            cfg.floor_hz).values())
        if residual <= cfg.kkt_tol:
            break
        new = dual_update(new, bandwidth_subgradients(instance, arrays, raw, lin), cfg)
        new.lambda11 = np.minimum(new.lambda11, 1.0)
    else:
        record_dual_limit(events, "bandwidth", iters, float(residual))

    logger.debug("bandwidth block", iterations=iters, kkt=float(residual),
                 lambda2=float(best_duals.lambda2[0]), b_s2r=np.round(best.b_s2r).tolist())
    return best, best_duals, iters


__all__ = [
    "ClusterLinks",
    "Linearisation",
    "balance_point",
    "bandwidth_subgradients",
    "closed_form_bandwidths",
    "cluster_links",
    "level_for_rate",
    "linearise",
    "recover_feasible",
    "solve_bandwidth",
    "water_level_response",
]
