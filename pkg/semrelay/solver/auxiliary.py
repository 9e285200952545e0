"""
Auxiliary block: gain, SNR, spectral-efficiency, satellite-SNR and compute
bounds with the primal allocation fixed.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from ..core import semcom
from ..core.models import NetworkInstance, SolverConfig
from ..core.netmodel import (
    Allocation,
    NetworkArrays,
    build_arrays,
    cluster_compute_load,
    s2r_snr_db,
    user_gains,
    user_snr,
)
from ..utils.logging import StructuredLogger
from . import closed_forms as cf
from .duals import dual_update, record_dual_limit, relative_steps
from .state import AuxState, DualState

logger = StructuredLogger(__name__)


def _gain_residual(h_hat: np.ndarray, gain: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        rel = (h_hat - gain) / gain
    return np.clip(np.where(np.isfinite(rel), rel, 1.0), -1.0, 1.0)


def _relative_gap(lam: np.ndarray, target: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(target > 0, np.abs(lam - target) / target, 0.0)


def fit_rate_balance(instance: NetworkInstance, arrays: NetworkArrays, alloc: Allocation,
                     eta_hat: np.ndarray, eta_lo: np.ndarray, r_hat: np.ndarray) -> np.ndarray:
    """Pull spectral-efficiency bounds towards ``eta_lo`` until each cluster's rate balance holds."""
    sem = instance.sem
    supply = sem.mu1 / sem.q_symbols * alloc.b_s2r * np.asarray(semcom.similarity(r_hat, sem))
    base = arrays.weight * alloc.b_user
    room = supply - arrays.cluster_sum(base * eta_lo)
    excess = arrays.cluster_sum(base * (eta_hat - eta_lo))
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(excess > 0, np.clip(room / excess, 0.0, 1.0), 1.0)
    return eta_lo + share[arrays.user_cluster] * (eta_hat - eta_lo)


def solve_auxiliary(instance: NetworkInstance, alloc: Allocation, aux: AuxState,
                    duals: DualState, cfg: SolverConfig,
                    arrays: Optional[NetworkArrays] = None,
                    events: Optional[Dict[str, int]] = None) -> Tuple[AuxState, DualState, int]:
    """
    Update the auxiliary bounds for a fixed allocation.

    Projected subgradient steps drive the gain-bound (lambda6),
    spectral-efficiency (lambda9) and compute (lambda10) multipliers until
    their stationarity conditions hold within ``cfg.kkt_tol``; the bounds
    then follow from the closed forms, with every active bound set tight.
    Multipliers that start at zero are seeded with the values that make the
    bounds tight at ``alloc``. When the loop stops at ``cfg.dual_max_iters``
    the projected closed-form bounds are returned and the stop is counted in
    ``events``.

    Returns the new bounds, the new duals and the number of dual iterations.
    """
    arrays = arrays or build_arrays(instance)
    events = events if events is not None else {}
    phys = instance.phys
    uc = arrays.user_cluster
    new = duals.copy()

    gain = user_gains(arrays, alloc.uav_xy)
    b, p, w = alloc.b_user, alloc.p_user, arrays.weight
    kappa = arrays.compute_per_bit
    no_snr_bound = np.zeros_like(gain)
    gamma_t = user_snr(arrays, b, p, gain)
    lam6_t = cf.lambda6_from_tight(w, b, p, gain, arrays.noise)
    r_hat = s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r)
    p_tx = arrays.cluster_sum(p)
    nu_max = np.cbrt(np.maximum(instance.budgets.p_r_w - p_tx, 0.0) / phys.zeta0)

    def lam9_tight() -> np.ndarray:
        return cf.lambda9_from_tight(new.lambda10[uc], new.lambda11[uc], kappa, w, b, gamma_t)

    new.lambda6 = np.where(new.lambda6 > 0, new.lambda6, lam6_t)
    new.lambda9 = np.where(new.lambda9 > 0, new.lambda9, lam9_tight())
    new.k = 0
    new.base_step["lambda6"] = relative_steps(lam6_t * gamma_t / (1.0 + gamma_t), cfg)
    new.base_step["lambda9"] = relative_steps(lam9_tight(), cfg)
    new.base_step["lambda10"] = relative_steps(np.maximum(new.lambda10, 0.0), cfg)

    converged = False
    residual = np.inf
    iters = 0
    for iters in range(1, cfg.dual_max_iters + 1):
        lam9_t = lam9_tight()
        eta_cf = cf.eta_hat_closed_form(new.lambda9, new.lambda10[uc], new.lambda11[uc], kappa, w, b)
        eta_lo = np.log2(1.0 + gamma_t)
        eta_hat = np.where(np.isfinite(eta_cf), np.maximum(eta_cf, eta_lo), eta_lo)
        load = cluster_compute_load(arrays, w * b * eta_hat)
        nu_cf = cf.nu_hat_closed_form(new.lambda10, new.lambda12, phys.zeta0)
        nu_hat = np.clip(nu_cf, load, np.maximum(nu_max, load))
        with np.errstate(invalid="ignore", divide="ignore"):
            c10 = np.where(nu_hat > 0, (load - nu_hat) / nu_hat, 0.0)

        residual = max(
            float(np.max(_relative_gap(new.lambda6, lam6_t), initial=0.0)),
            float(np.max(_relative_gap(new.lambda9, lam9_t), initial=0.0)),
            float(np.max(new.lambda10 / (1.0 + new.lambda10) * np.abs(c10), initial=0.0)),
        )
        if residual <= cfg.kkt_tol:
            converged = True
            break

        h_cf = cf.h_hat_closed_form(new.lambda6, no_snr_bound, w, b, p, arrays.noise)
        with np.errstate(over="ignore"):
            balance = np.where(np.isfinite(eta_cf), (1.0 + gamma_t) * 2.0 ** (-eta_cf) - 1.0, 1.0)
        subgradients = {
            "lambda6": _gain_residual(h_cf, gain),
            "lambda9": np.where(lam9_t > 0, np.clip(balance, -1.0, 1.0), 0.0),
            "lambda10": c10,
        }
        new = dual_update(new, subgradients, cfg)

    h_cf = cf.h_hat_closed_form(new.lambda6, no_snr_bound, w, b, p, arrays.noise)
    h_hat = np.minimum(h_cf, gain)
    if converged:
        h_hat = np.where(new.lambda6 > 0, gain, h_hat)
    gamma_hat = user_snr(arrays, b, p, h_hat)
    eta_lo = np.log2(1.0 + gamma_hat)
    if converged:
        eta_hat = eta_lo
    else:
        eta_cf = cf.eta_hat_closed_form(new.lambda9, new.lambda10[uc], new.lambda11[uc], kappa, w, b)
        eta_hat = np.where(np.isfinite(eta_cf), np.maximum(eta_cf, eta_lo), eta_lo)
        eta_hat = fit_rate_balance(instance, arrays, alloc, eta_hat, eta_lo, r_hat)
        record_dual_limit(events, "auxiliary", iters, float(residual))
    load = cluster_compute_load(arrays, w * b * eta_hat)
    nu_cf = cf.nu_hat_closed_form(new.lambda10, new.lambda12, phys.zeta0)
    nu_hat = np.clip(nu_cf, load, np.maximum(nu_max, load))

    logger.debug("auxiliary block", iterations=iters, converged=converged, kkt=float(residual))
    out = AuxState(h_hat=h_hat, gamma_hat=gamma_hat, eta_hat=eta_hat, r_hat=r_hat, nu_hat=nu_hat)
    return out, new, iters
