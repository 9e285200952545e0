"""
KKT residuals of the three solver blocks.

Each block reports stationarity of its variables and complementary
slackness of the constraints whose multipliers it owns, every term relative
to its own scale. ``kkt_residual`` takes the largest term over the blocks
asked for.
"""

from typing import Dict, Iterable, Optional

import numpy as np

from ..core.models import NetworkInstance
from ..core.netmodel import (
    Allocation,
    NetworkArrays,
    build_arrays,
    constraint_residuals,
    s2r_snr_db,
    transmit_budget,
    user_distance_sq,
    user_gains,
    user_snr,
)
from . import closed_forms as cf
from .state import AuxState, DualState

BLOCKS = ("bandwidth", "auxiliary", "power", "location", "satellite_snr")
TINY = 1e-300


def _stationarity(grad: np.ndarray, at_floor: np.ndarray) -> np.ndarray:
    # at a lower bound only a positive gradient violates stationarity
    return np.where(at_floor, np.maximum(grad, 0.0), np.abs(grad))


def _slackness(lam: np.ndarray, rel: np.ndarray) -> np.ndarray:
    return lam / (1.0 + lam) * np.abs(rel)


def _worst(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.where(np.isfinite(values), values, 0.0), initial=0.0))


def bandwidth_components(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                         duals: DualState, arrays: Optional[NetworkArrays] = None,
                         floor_hz: float = 1e-3) -> Dict[str, float]:
    """Per-condition KKT residuals of the bandwidth block."""
    arrays = arrays or build_arrays(instance)
    sem, budgets = instance.sem, instance.budgets
    tol_floor = floor_hz * (1.0 + 1e-9)

    a = alloc.p_user * aux.h_hat / arrays.noise
    user_marginal = cf.user_marginal_rate(alloc.b_user, a, arrays.weight)
    lam11_u = duals.lambda11[arrays.user_cluster]
    lam3_u = duals.lambda3[arrays.user_cluster]
    grad_user = (1.0 - lam11_u) * user_marginal - lam3_u
    scale_user = np.maximum.reduce([np.abs(user_marginal), lam3_u, np.ones_like(user_marginal)])
    user_term = _stationarity(grad_user, alloc.b_user <= tol_floor) / scale_user

    r = s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r)
    lam2 = float(duals.lambda2[0])
    grad_sat = np.array([
        cf.stationarity_b_s2r(alloc.b_s2r[n], lam2, duals.lambda3[n], duals.lambda7p[n],
                              duals.lambda11[n], arrays.sat_gain[n], alloc.p_s2r[n], r[n],
                              arrays.noise, sem)
        for n in range(arrays.n_clusters)
    ])
    sat_marginal = cf.s2r_bandwidth_marginal(alloc.b_s2r, alloc.p_s2r, arrays.sat_gain,
                                             arrays.noise, sem)
    scale_sat = np.maximum.reduce([np.abs(sat_marginal), np.full(arrays.n_clusters, lam2),
                                   duals.lambda3, np.ones(arrays.n_clusters)])
    sat_term = _stationarity(grad_sat, alloc.b_s2r <= tol_floor) / scale_sat

    c2 = (np.sum(alloc.b_s2r) - budgets.b_s_hz) / budgets.b_s_hz
    c3 = (alloc.b_s2r + arrays.cluster_sum(alloc.b_user) - budgets.b_r_hz) / budgets.b_r_hz
    downlink = arrays.cluster_sum(cf.user_rate(alloc.b_user, a, arrays.weight))
    supply = cf.s2r_rate(alloc.b_s2r, alloc.p_s2r, arrays.sat_gain, arrays.noise, sem)
    c11 = (downlink - supply) / np.maximum(np.maximum(downlink, supply), 1.0)

    return {
        "stationarity_user": _worst(user_term),
        "stationarity_s2r": _worst(sat_term),
        "slackness_b_s": float(_slackness(np.array([lam2]), np.array([c2]))[0]),
        "slackness_b_r": _worst(_slackness(duals.lambda3, c3)),
        "slackness_rate": _worst(_slackness(duals.lambda11, c11)),
    }


def auxiliary_components(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                         duals: DualState,
                         arrays: Optional[NetworkArrays] = None) -> Dict[str, float]:
    """
    Per-condition KKT residuals of the auxiliary block.

    The gain-bound multiplier must equal the marginal value of the gain at
    the bound, and the spectral-efficiency multiplier the marginal value of
    the rate-balance and compute terms at the SNR bound.
    """
    arrays = arrays or build_arrays(instance)
    uc = arrays.user_cluster
    b, p, w = alloc.b_user, alloc.p_user, arrays.weight
    gain = user_gains(arrays, alloc.uav_xy)
    res = constraint_residuals(instance, alloc, aux, arrays)

    lam6_t = cf.lambda6_from_tight(w, b, p, aux.h_hat, arrays.noise)
    gain_term = np.where(lam6_t > 0, np.abs(duals.lambda6 - lam6_t) / np.maximum(lam6_t, TINY), 0.0)

    lam9_t = cf.lambda9_from_tight(duals.lambda10[uc], duals.lambda11[uc],
                                   arrays.compute_per_bit, w, b, aux.gamma_hat)
    eta_term = np.where(lam9_t > 0, np.abs(duals.lambda9 - lam9_t) / np.maximum(lam9_t, TINY), 0.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        c6 = (aux.h_hat - gain) / gain
    return {
        "stationarity_gain": _worst(gain_term),
        "slackness_gain": _worst(_slackness(duals.lambda6, c6)),
        "stationarity_eta": _worst(eta_term),
        "slackness_eta": _worst(_slackness(duals.lambda9, res.relative("C9"))),
        "slackness_compute": _worst(_slackness(duals.lambda10, res.relative("C10"))),
    }


def power_components(instance: NetworkInstance, alloc: Allocation,
                     duals: DualState, arrays: Optional[NetworkArrays] = None,
                     floor_w: float = 1e-9) -> Dict[str, float]:
    """
    KKT residuals of the downlink and satellite-hop powers.

    Satellite-hop power reaches the sum rate only through rate balance, so
    only the slackness of its budget is checked.
    """
    arrays = arrays or build_arrays(instance)
    budgets = instance.budgets
    b, p, w = alloc.b_user, alloc.p_user, arrays.weight
    gain = user_gains(arrays, alloc.uav_xy)

    a_p = gain / (b * arrays.noise)
    marginal = w * b / cf.LN2 * a_p / (1.0 + a_p * p)
    lam12_u = duals.lambda12[arrays.user_cluster]
    power_scale = np.maximum.reduce([marginal, lam12_u, np.full_like(marginal, TINY)])
    power_term = _stationarity(marginal - lam12_u, p <= floor_w * (1.0 + 1e-9)) / power_scale
    p_tx = transmit_budget(instance, arrays)
    c_power = (arrays.cluster_sum(p) - p_tx) / p_tx

    lam4 = float(duals.lambda4[0])
    c4 = (np.sum(alloc.p_s2r) - budgets.p_s_w) / budgets.p_s_w

    return {
        "stationarity_power": _worst(power_term),
        "slackness_power": _worst(_slackness(duals.lambda12, c_power)),
        "slackness_s2r_power": float(_slackness(np.array([lam4]), np.array([c4]))[0]),
    }


def location_components(instance: NetworkInstance, alloc: Allocation,
                        arrays: Optional[NetworkArrays] = None) -> Dict[str, float]:
    """Distance of each UAV from the weighted centroid of its users, relative to the cluster spread."""
    arrays = arrays or build_arrays(instance)
    b, p, w = alloc.b_user, alloc.p_user, arrays.weight
    gain = user_gains(arrays, alloc.uav_xy)
    d2 = user_distance_sq(arrays, alloc.uav_xy)
    gamma = user_snr(arrays, b, p, gain)
    weights = cf.location_weights(w, p, d2, gamma, arrays.alpha, arrays.beta0, arrays.noise)

    term = np.zeros(arrays.n_clusters)
    for n in range(arrays.n_clusters):
        idx = arrays.members(n)
        if idx.size == 0:
            continue
        target = cf.weighted_centroid(arrays.user_xy[idx], weights[idx])
        if target is None:
            continue
        spread = np.sqrt(np.mean(np.sum((arrays.user_xy[idx] - arrays.centroid[n]) ** 2, axis=-1)))
        term[n] = np.hypot(*(alloc.uav_xy[n] - target)) / max(float(spread), 1.0)
    return {"stationarity_location": _worst(term)}


def satellite_snr_components(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                             duals: DualState,
                             arrays: Optional[NetworkArrays] = None) -> Dict[str, float]:
    """Complementary slackness of the satellite SNR bound and its convex rate-balance form."""
    arrays = arrays or build_arrays(instance)
    res = constraint_residuals(instance, alloc, aux, arrays)
    return {
        "slackness_snr": max(_worst(_slackness(duals.lambda7, res.relative("C7"))),
                             _worst(_slackness(duals.lambda11p, res.relative("C11p")))),
    }


def kkt_components(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                   duals: DualState, arrays: Optional[NetworkArrays] = None,
                   floor_hz: float = 1e-3, floor_w: float = 1e-9,
                   blocks: Iterable[str] = BLOCKS) -> Dict[str, float]:
    """Per-condition KKT residuals of the requested blocks."""
    arrays = arrays or build_arrays(instance)
    out: Dict[str, float] = {}
    for block in blocks:
        if block == "bandwidth":
            out.update(bandwidth_components(instance, alloc, aux, duals, arrays, floor_hz))
        elif block == "auxiliary":
            out.update(auxiliary_components(instance, alloc, aux, duals, arrays))
        elif block == "power":
            out.update(power_components(instance, alloc, duals, arrays, floor_w))
        elif block == "location":
            out.update(location_components(instance, alloc, arrays))
        elif block == "satellite_snr":
            out.update(satellite_snr_components(instance, alloc, aux, duals, arrays))
        else:
            raise ValueError(f"unknown block {block!r}")
    return out


def kkt_residual(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                 duals: DualState, arrays: Optional[NetworkArrays] = None,
                 floor_hz: float = 1e-3, floor_w: float = 1e-9,
                 blocks: Iterable[str] = BLOCKS) -> float:
    """
    Largest KKT residual over the requested blocks.

    With all multipliers zero the downlink stationarity term keeps the size of
    the downlink marginal rates, so a point that ignores the budgets never
    looks stationary.
    """
    components = kkt_components(instance, alloc, aux, duals, arrays, floor_hz, floor_w, blocks)
    return max(components.values(), default=0.0)


def s2r_bandwidth_consistency(instance: NetworkInstance, alloc: Allocation,
                              duals: DualState,
                              arrays: Optional[NetworkArrays] = None) -> np.ndarray:
    """
    Relative gap between each satellite-hop bandwidth and the closed form
    evaluated at the tight satellite SNR; nan where lambda7' is zero.
    """
    arrays = arrays or build_arrays(instance)
    r = s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r)
    gaps = np.full(arrays.n_clusters, np.nan)
    for n in range(arrays.n_clusters):
        if duals.lambda7p[n] <= 0:
            continue
        b_cf = cf.s2r_bandwidth_closed_form(
            float(duals.lambda2[0]), duals.lambda3[n], duals.lambda7p[n], duals.lambda11[n],
            arrays.sat_gain[n], alloc.p_s2r[n], r[n], arrays.noise, instance.sem)
        gaps[n] = abs(b_cf - alloc.b_s2r[n]) / alloc.b_s2r[n]
    return gaps
