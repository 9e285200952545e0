"""
Power and placement block: downlink powers, satellite-hop powers and UAV
positions with bandwidths fixed.

Downlink powers are water-filled against each UAV's transmit budget, UAVs
climb towards the weighted centroid of their users, and the satellite power
budget is shared so that every cluster's satellite hop can carry what its
downlinks deliver. Rate balance is then restored by shrinking whichever
resource the caller leaves free, and the satellite SNR bounds are lowered
to what the downlinks need.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from ..core import semcom
from ..core.models import NetworkInstance, SolverConfig
from ..core.netmodel import (
    Allocation,
    NetworkArrays,
    build_arrays,
    s2r_snr_db,
    transmit_budget,
    user_gains,
    user_snr,
)
from ..utils.logging import StructuredLogger
from . import closed_forms as cf
from .balance import (
    cluster_downlink_rate,
    cluster_s2r_rate,
    count_event,
    restore_rate_balance,
    tighten_b_s2r,
)
from .duals import dual_update, record_dual_limit, relative_steps, share_budget
from .state import AuxState, DualState, tight_aux

logger = StructuredLogger(__name__)

STEP_HALVINGS = 12
MIN_MOVE_M = 1e-6


def _slack(lam: np.ndarray, rel: np.ndarray) -> np.ndarray:
    return lam / (1.0 + lam) * np.abs(rel)


def water_fill_powers(arrays: NetworkArrays, alloc: Allocation, gain: np.ndarray,
                      budget: np.ndarray, duals: DualState, cfg: SolverConfig,
                      events: Dict[str, int]) -> Tuple[np.ndarray, DualState, int]:
    """
    Downlink powers that spend each UAV's transmit budget, with their water
    levels (lambda12) found by projected subgradient steps.

    Levels that start at zero are seeded with the level at which every link
    is above its floor. Powers are finally scaled above their floors so each
    cluster meets its budget exactly.
    """
    uc = arrays.user_cluster
    b, w = alloc.b_user, arrays.weight
    floor = cfg.floor_w
    a_p = gain / (b * arrays.noise)
    weight = w * b / cf.LN2
    level0 = arrays.cluster_sum(weight) / (budget + arrays.cluster_sum(1.0 / a_p))

    new = duals.copy()
    new.lambda12 = np.where(new.lambda12 > 0, new.lambda12, level0)
    new.k = 0
    if cfg.dual_base_step is None:
        # Newton step of the budget residual in the level while every link is active
        new.base_step["lambda12"] = level0 ** 2 * budget / arrays.cluster_sum(weight)
    else:
        new.base_step["lambda12"] = relative_steps(level0, cfg)

    residual = np.inf
    iters = 0
    for iters in range(1, cfg.dual_max_iters + 1):
        p = cf.water_filling_power(b, gain, w, new.lambda12[uc], arrays.noise, floor)
        rel = (arrays.cluster_sum(p) - budget) / budget
        residual = float(np.max(np.abs(rel), initial=0.0))
        if residual <= cfg.kkt_tol:
            break
        new = dual_update(new, {"lambda12": rel}, cfg)
    else:
        record_dual_limit(events, "power", iters, residual)
        p = cf.water_filling_power(b, gain, w, new.lambda12[uc], arrays.noise, floor)

    excess = p - floor
    room = budget - floor * arrays.cluster_sum(np.ones_like(p))
    spent = arrays.cluster_sum(excess)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(spent > 0, room / spent, 1.0)
    return floor + excess * factor[uc], new, iters


def relocate_uav(arrays: NetworkArrays, alloc: Allocation, n: int, cfg: SolverConfig,
                 events: Dict[str, int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Move UAV ``n`` towards the weighted centroid of its users without lowering
    the cluster's downlink rate. Returns the new position and the distance
    multipliers at it.
    """
    idx = arrays.members(n)
    xy = alloc.uav_xy[n].copy()
    weights = np.zeros(idx.size)
    current = cluster_downlink_rate(arrays, alloc, idx, xy)
    for _ in range(cfg.location_iters):
        delta = xy - arrays.user_xy[idx]
        d2 = np.sum(delta * delta, axis=-1) + arrays.height[n] ** 2
        gain = arrays.beta0 * d2 ** (-arrays.alpha / 2.0)
        gamma = user_snr(arrays, alloc.b_user[idx], alloc.p_user[idx], gain)
        weights = cf.location_weights(arrays.weight[idx], alloc.p_user[idx], d2, gamma,
                                      arrays.alpha, arrays.beta0, arrays.noise)
        target = cf.weighted_centroid(arrays.user_xy[idx], weights)
        if target is None:
            count_event(events, "location_unchanged")
            break
        step = target - xy
        moved = False
        for _ in range(STEP_HALVINGS):
            candidate = xy + step
            rate = cluster_downlink_rate(arrays, alloc, idx, candidate)
            if rate >= current:
                moved = bool(np.hypot(*(candidate - xy)) >= MIN_MOVE_M)
                xy, current = candidate, rate
                break
            step = step / 2.0
        if not moved:
            break
    return xy, weights


def s2r_power_caps(instance: NetworkInstance, arrays: NetworkArrays, alloc: Allocation) -> np.ndarray:
    """Per-cluster satellite power at which the satellite hop matches the downlinks."""
    caps = np.empty(arrays.n_clusters)
    p_s = instance.budgets.p_s_w
    for n in range(arrays.n_clusters):
        idx = arrays.members(n)
        demand = cluster_downlink_rate(arrays, alloc, idx, alloc.uav_xy[n])
        if cluster_s2r_rate(instance, arrays, alloc, n, p_s) <= demand:
            caps[n] = p_s
            continue
        caps[n] = cf.solve_increasing(lambda p, n=n: cluster_s2r_rate(instance, arrays, alloc, n, p),
                                      demand, 1e-9, p_s)
        nudge = 1e-13
        while cluster_s2r_rate(instance, arrays, alloc, n, caps[n]) < demand and nudge < 1.0:
            caps[n] = min(caps[n] * (1.0 + nudge), p_s)
            nudge *= 4.0
    return caps


def satellite_snr_bounds(instance: NetworkInstance, arrays: NetworkArrays, alloc: Allocation,
                         duals: DualState, cfg: SolverConfig,
                         events: Dict[str, int]) -> Tuple[AuxState, DualState, int]:
    """
    Tight auxiliary bounds except the satellite SNR bound, which is lowered to
    the SNR the downlinks actually need wherever the satellite hop has slack.

    The bound is the closed form ``E - ln(lambda7 / lambda11')`` projected
    onto ``[E, r]`` with ``E`` the SNR whose similarity meets the rate-balance
    target and ``r`` the true satellite SNR; the multipliers of the two
    bounds follow projected subgradient steps until complementary slackness
    holds within ``cfg.kkt_tol``.
    """
    sem = instance.sem
    aux = tight_aux(arrays, alloc)
    r_true = aux.r_hat
    hat_sum = arrays.cluster_sum(arrays.weight * alloc.b_user * aux.eta_hat)
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.where(alloc.b_s2r > 0, sem.q_symbols * hat_sum / (sem.mu1 * alloc.b_s2r), 0.0)
    above_floor = target > sem.a1
    t = np.where(above_floor, target, sem.a1 + sem.a2 / 2.0)
    zero = np.zeros(arrays.n_clusters)
    e, clamps = cf.r_hat_closed_form(t, zero, zero, sem)
    count_event(events, "clamp", int(clamps))
    usable = above_floor & np.isfinite(r_true) & (e <= r_true)
    scale = np.maximum(np.abs(np.where(np.isfinite(r_true), r_true, 1.0)), 1.0)

    new = duals.copy()
    new.k = 0
    new.base_step["lambda7"] = relative_steps(new.lambda7, cfg)
    new.base_step["lambda11p"] = relative_steps(new.lambda11p, cfg)

    def project(r_cf: np.ndarray) -> np.ndarray:
        return np.where(usable, np.clip(r_cf, e, np.where(usable, r_true, e)), r_true)

    residual = np.inf
    iters = 0
    for iters in range(1, cfg.dual_max_iters + 1):
        r_cf, _ = cf.r_hat_closed_form(t, new.lambda7, new.lambda11p, sem)
        r_hat = project(r_cf)
        with np.errstate(invalid="ignore", over="ignore"):
            c7 = np.where(usable, (r_hat - r_true) / scale, 0.0)
            c11p = np.where(usable, np.expm1(e - r_hat), 0.0)
        residual = float(np.max(np.maximum(_slack(new.lambda7, c7), _slack(new.lambda11p, c11p)),
                                initial=0.0))
        if residual <= cfg.kkt_tol:
            break
        with np.errstate(invalid="ignore", over="ignore"):
            subgradients = {
                "lambda7": np.where(usable, np.clip((r_cf - r_true) / scale, -1.0, 1.0), 0.0),
                "lambda11p": np.where(usable, np.clip(np.expm1(e - r_cf), -1.0, 1.0), 0.0),
            }
        new = dual_update(new, subgradients, cfg)
    else:
        record_dual_limit(events, "satellite_snr", iters, residual)
        r_cf, _ = cf.r_hat_closed_form(t, new.lambda7, new.lambda11p, sem)
        r_hat = project(r_cf)

    covers = np.asarray(semcom.similarity(r_hat, sem)) >= target
    aux.r_hat = np.where(usable & covers, r_hat, r_true)
    return aux, new, iters


def solve_power_location(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                         duals: DualState, cfg: SolverConfig,
                         arrays: Optional[NetworkArrays] = None,
                         optimize_power: bool = True,
                         optimize_location: bool = True,
                         restore: str = "bandwidth",
                         spread: bool = True,
                         tighten: bool = True,
                         events: Optional[Dict[str, int]] = None
                         ) -> Tuple[Allocation, AuxState, DualState, int]:
    """
    Update powers and UAV positions with bandwidths fixed.

    Returns the allocation, auxiliary bounds that are feasible for it, the
    multipliers of the UAV power budgets (lambda12), the satellite power
    budget (lambda4), the satellite SNR bounds (lambda7, lambda11') and the
    distance constraints (lambda6_loc), and the number of dual iterations.
    """
    arrays = arrays or build_arrays(instance)
    events = events if events is not None else {}
    out = alloc.copy()
    new = duals.copy()
    p_tx = transmit_budget(instance, arrays)
    iterations = 0

    for _ in range(max(cfg.inner_rounds, 1)):
        if optimize_power:
            gain = user_gains(arrays, out.uav_xy)
            out.p_user, new, used = water_fill_powers(arrays, out, gain, p_tx, new, cfg, events)
            iterations += used
        if optimize_location:
            for n in range(arrays.n_clusters):
                out.uav_xy[n], weights = relocate_uav(arrays, out, n, cfg, events)
                new.lambda6_loc[arrays.members(n)] = weights
        if not (optimize_power and optimize_location):
            break

    if optimize_power:
        sem = instance.sem
        caps = np.maximum(s2r_power_caps(instance, arrays, out), cfg.floor_w)
        r_c = cf.concave_snr_db(sem)
        concave_lo = out.b_s2r * arrays.noise * 10.0 ** (r_c / 10.0) / arrays.sat_gain
        p_s, lam4 = share_budget(
            instance.budgets.p_s_w, np.full(arrays.n_clusters, cfg.floor_w), caps,
            value=lambda n, p: cluster_s2r_rate(instance, arrays, out, n, p),
            marginal=lambda n, p: float(cf.s2r_power_marginal(
                out.b_s2r[n], p, arrays.sat_gain[n], arrays.noise, sem)),
            concave_lo=concave_lo, concave_hi=np.full(arrays.n_clusters, np.inf),
            spread=spread,
        )
        lam4 = lam4 if np.isfinite(lam4) else 0.0
        out.p_s2r = p_s
        new.lambda4 = np.array([lam4])

    out = restore_rate_balance(instance, out, arrays, restore=restore,
                               floor_hz=cfg.floor_hz, floor_w=cfg.floor_w, events=events)
    if tighten:
        slack = np.array([
            cluster_s2r_rate(instance, arrays, out, n)
            > cluster_downlink_rate(arrays, out, arrays.members(n), out.uav_xy[n])
            for n in range(arrays.n_clusters)
        ])
        if np.any(slack):
            tightened = tighten_b_s2r(instance, out, tight_aux(arrays, out), arrays,
                                      consistent=True, floor=cfg.floor_hz, events=events)
            out.b_s2r = np.where(slack, tightened.b_s2r, out.b_s2r)

    aux_out, new, used = satellite_snr_bounds(instance, arrays, out, new, cfg, events)
    iterations += used
    logger.debug("power/location block", lambda4=float(new.lambda4[0]), iterations=iterations,
                 snr_s2r_db=np.round(s2r_snr_db(arrays, out.b_s2r, out.p_s2r), 3).tolist(),
                 displacement_m=np.round(np.hypot(*(out.uav_xy - arrays.centroid).T), 3).tolist())
    return out, aux_out, new, iterations


__all__ = [
    "relocate_uav",
    "s2r_power_caps",
    "satellite_snr_bounds",
    "solve_power_location",
    "water_fill_powers",
]
