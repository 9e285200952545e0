"""
Rate-balance repairs shared by the bandwidth and power/placement blocks.

A cluster's downlinks may carry no more than its satellite hop delivers.
``restore_rate_balance`` shrinks the downlinks until that holds and
``tighten_b_s2r`` trims satellite bandwidth a cluster cannot use.
"""

from typing import Dict, Optional

import numpy as np

from ..core import semcom
from ..core.models import NetworkInstance
from ..core.netmodel import Allocation, NetworkArrays, build_arrays
from . import closed_forms as cf
from .state import AuxState


def count_event(events: Dict[str, int], key: str, amount: int = 1) -> None:
    if amount:
        events[key] = events.get(key, 0) + amount


def cluster_downlink_rate(arrays: NetworkArrays, alloc: Allocation, idx: np.ndarray,
                          xy: np.ndarray, b: Optional[np.ndarray] = None,
                          p: Optional[np.ndarray] = None) -> float:
    """Downlink sum rate of the users ``idx`` served from ``xy``."""
    n = int(arrays.user_cluster[idx[0]])
    delta = xy - arrays.user_xy[idx]
    d2 = np.sum(delta * delta, axis=-1) + arrays.height[n] ** 2
    gain = arrays.beta0 * d2 ** (-arrays.alpha / 2.0)
    b = alloc.b_user[idx] if b is None else b
    p = alloc.p_user[idx] if p is None else p
    return float(np.sum(cf.user_rate(b, p * gain / arrays.noise, arrays.weight[idx])))


def cluster_s2r_rate(instance: NetworkInstance, arrays: NetworkArrays, alloc: Allocation,
                     n: int, p: Optional[float] = None) -> float:
    p = alloc.p_s2r[n] if p is None else p
    return float(cf.s2r_rate(alloc.b_s2r[n], p, arrays.sat_gain[n], arrays.noise, instance.sem))


def restore_rate_balance(instance: NetworkInstance, alloc: Allocation,
                         arrays: Optional[NetworkArrays] = None,
                         restore: str = "bandwidth",
                         floor_hz: float = 1e-3, floor_w: float = 1e-9,
                         events: Optional[Dict[str, int]] = None) -> Allocation:
    """
    Scale a cluster's downlink bandwidths (or powers, ``restore="power"``)
    by a common factor until its downlinks carry no more than the satellite
    hop delivers.
    """
    arrays = arrays or build_arrays(instance)
    events = events if events is not None else {}
    out = alloc.copy()
    for n in range(arrays.n_clusters):
        idx = arrays.members(n)
        supply = cluster_s2r_rate(instance, arrays, out, n)
        if cluster_downlink_rate(arrays, out, idx, out.uav_xy[n]) <= supply:
            continue
        base = out.b_user[idx] if restore == "bandwidth" else out.p_user[idx]
        floor = floor_hz if restore == "bandwidth" else floor_w

        def scaled(f: float) -> np.ndarray:
            return np.maximum(f * base, floor)

        def rate(f: float) -> float:
            if restore == "bandwidth":
                return cluster_downlink_rate(arrays, out, idx, out.uav_xy[n], b=scaled(f))
            return cluster_downlink_rate(arrays, out, idx, out.uav_xy[n], p=scaled(f))

        f = min(cf.solve_increasing(rate, supply, 1e-6, 1.0), 1.0)
        nudge = 1e-13
        while rate(f) > supply and nudge < 1.0:
            f *= 1.0 - nudge
            nudge *= 4.0
        if restore == "bandwidth":
            out.b_user[idx] = scaled(f)
        else:
            out.p_user[idx] = scaled(f)
        count_event(events, "restore")
    return out


def tighten_b_s2r(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                  arrays: Optional[NetworkArrays] = None,
                  consistent: bool = False,
                  floor: float = 1e-3,
                  events: Optional[Dict[str, int]] = None) -> Allocation:
    """
    Set each satellite-hop bandwidth so the rate-balance constraint is tight.

    With ``consistent=False`` the bound ``r_hat`` is held fixed and
    ``b_s2r = Q (Gamma_SU + Gamma_CU) / (mu1 eps(r_hat))``. With
    ``consistent=True`` the satellite SNR moves with the bandwidth and
    ``b_s2r`` solves ``(mu1/Q) b eps(r(b)) = Gamma_SU + Gamma_CU``, the fixed
    point of the first form with ``r_hat`` tracking the true SNR. A cluster
    whose rate cannot be matched below its current bandwidth keeps it.
    The result is rescaled when the satellite budget would be exceeded.
    """
    arrays = arrays or build_arrays(instance)
    events = events if events is not None else {}
    sem = instance.sem
    out = alloc.copy()
    hat_sum = arrays.cluster_sum(arrays.weight * alloc.b_user * aux.eta_hat)

    if consistent:
        b_new = np.empty(arrays.n_clusters)
        for n in range(arrays.n_clusters):
            if hat_sum[n] <= 0:
                b_new[n] = floor
                continue

            def rate(b: float, n: int = n) -> float:
                return float(cf.s2r_rate(b, alloc.p_s2r[n], arrays.sat_gain[n], arrays.noise, sem))

            hi = max(alloc.b_s2r[n], floor)
            if rate(hi) <= hat_sum[n] or rate(floor) >= hat_sum[n]:
                b_new[n] = hi
                continue
            b_new[n] = cf.solve_increasing(rate, hat_sum[n], floor, hi)
            nudge = 1e-13
            while rate(b_new[n]) < hat_sum[n] and nudge < 1.0:
                b_new[n] *= 1.0 + nudge
                nudge *= 4.0
            if rate(b_new[n]) < hat_sum[n] or b_new[n] > hi:
                # root sits where the rate falls with bandwidth
                b_new[n] = hi
                count_event(events, "keep_b_s2r")
    else:
        eps = np.asarray(semcom.similarity(aux.r_hat, sem))
        b_new = sem.q_symbols * hat_sum / (sem.mu1 * eps)
        b_new = np.where(hat_sum > 0, b_new, floor)

    total = float(np.sum(b_new))
    if total > instance.budgets.b_s_hz:
        b_new = b_new * (instance.budgets.b_s_hz / total)
        count_event(events, "rescale")
    out.b_s2r = b_new
    return out


__all__ = [
    "cluster_downlink_rate",
    "cluster_s2r_rate",
    "count_event",
    "restore_rate_balance",
    "tighten_b_s2r",
]
