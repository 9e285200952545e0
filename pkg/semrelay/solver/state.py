"""
Solver state containers: auxiliary bounds, dual variables and the solve report.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..core import semcom
from ..core.models import NetworkInstance
from ..core.netmodel import (
    Allocation,
    ConstraintResiduals,
    NetworkArrays,
    cluster_compute_load,
    s2r_snr_db,
    user_gains,
    user_snr,
)


@dataclass
class AuxState:
    """Auxiliary bounds: per-link gain, SNR and spectral efficiency; per-cluster SNR and load."""

    h_hat: np.ndarray      # (K,) channel-gain lower bounds
    gamma_hat: np.ndarray  # (K,) SNR upper bounds, linear
    eta_hat: np.ndarray    # (K,) spectral-efficiency upper bounds, bits/s/Hz
    r_hat: np.ndarray      # (N,) satellite-hop SNR lower bounds, dB
    nu_hat: np.ndarray     # (N,) processing-frequency upper bounds, Gcycles/s

    def copy(self) -> "AuxState":
        return AuxState(self.h_hat.copy(), self.gamma_hat.copy(), self.eta_hat.copy(),
                        self.r_hat.copy(), self.nu_hat.copy())

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "h_hat": self.h_hat.tolist(),
            "gamma_hat": self.gamma_hat.tolist(),
            "eta_hat": self.eta_hat.tolist(),
            "r_hat": self.r_hat.tolist(),
            "nu_hat": self.nu_hat.tolist(),
        }


def tight_aux(arrays: NetworkArrays, alloc: Allocation) -> AuxState:
    """Auxiliary bounds that hold with equality at ``alloc``."""
    gain = user_gains(arrays, alloc.uav_xy)
    gamma = user_snr(arrays, alloc.b_user, alloc.p_user, gain)
    eta = np.log2(1.0 + gamma)
    rates = arrays.weight * alloc.b_user * eta
    return AuxState(
        h_hat=gain,
        gamma_hat=gamma,
        eta_hat=eta,
        r_hat=s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r),
        nu_hat=cluster_compute_load(arrays, rates),
    )


DUAL_FAMILIES = (
    "lambda2", "lambda3", "lambda4", "lambda6", "lambda6_loc", "lambda7", "lambda7p",
    "lambda8", "lambda9", "lambda10", "lambda11", "lambda11p", "lambda12",
)


@dataclass
class DualState:
    """
    Dual variables per constraint family plus the step-size schedule.

    Scalars (``lambda2``, ``lambda4``) are stored as length-1 arrays so every
    family can be updated the same way.
    """

    lambda2: np.ndarray
    lambda3: np.ndarray
    lambda4: np.ndarray
    lambda6: np.ndarray
    lambda6_loc: np.ndarray
    lambda7: np.ndarray
    lambda7p: np.ndarray
    lambda8: np.ndarray
    lambda9: np.ndarray
    lambda10: np.ndarray
    lambda11: np.ndarray
    lambda11p: np.ndarray  # (N,) convex rate-balance bound on the satellite SNR
    lambda12: np.ndarray
    theta: np.ndarray  # (N,) downlink bandwidth water levels of the last bandwidth block
    k: int = 0
    base_step: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def zeros(cls, n_clusters: int, n_users: int) -> "DualState":
        n, k = n_clusters, n_users
        return cls(
            lambda2=np.zeros(1), lambda3=np.zeros(n), lambda4=np.zeros(1),
            lambda6=np.zeros(k), lambda6_loc=np.zeros(k), lambda7=np.zeros(n),
            lambda7p=np.zeros(n), lambda8=np.zeros(k), lambda9=np.zeros(k),
            lambda10=np.zeros(n), lambda11=np.zeros(n), lambda11p=np.zeros(n),
            lambda12=np.zeros(n),
            theta=np.zeros(n),
        )

    def copy(self) -> "DualState":
        values = {name: getattr(self, name).copy() for name in DUAL_FAMILIES}
        return DualState(theta=self.theta.copy(), k=self.k,
                         base_step=dict(self.base_step), **values)

    def is_nonnegative(self) -> bool:
        return all(np.all(getattr(self, name) >= 0) for name in DUAL_FAMILIES)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {name: getattr(self, name).tolist() for name in DUAL_FAMILIES}
        out["theta"] = self.theta.tolist()
        out["k"] = self.k
        return out


@dataclass
class SolveReport:
    """Outcome of one solve."""

    mode: str
    allocation: Allocation
    aux: AuxState
    duals: DualState
    objective: float
    objective_trace: List[float]
    status: str
    outer_iterations: int
    dual_iterations: Dict[str, int]
    residuals: ConstraintResiduals
    kkt_residual: Optional[float]
    events: Dict[str, int]
    wall_ms: float
    start: str = "init"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def max_residual(self) -> float:
        """Largest relative violation of the original constraints (0 when all hold)."""
        return max(0.0, self.residuals.max_violation(("C1", "C2", "C3", "C4", "C5")))

    def to_dict(self, instance: Optional[NetworkInstance] = None,
                arrays: Optional[NetworkArrays] = None) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "mode": self.mode,
            "status": self.status,
            "start": self.start,
            "objective_bps": self.objective,
            "objective_trace": list(self.objective_trace),
            "outer_iterations": self.outer_iterations,
            "dual_iterations": dict(self.dual_iterations),
            "kkt_residual": self.kkt_residual,
            "max_residual": self.max_residual,
            "events": dict(self.events),
            "wall_ms": self.wall_ms,
            "allocation": self.allocation.to_dict(),
            "aux": self.aux.to_dict(),
            "duals": self.duals.to_dict(),
            "residuals": self.residuals.to_dict(),
        }
        if instance is not None and arrays is not None:
            out["links"] = link_report(instance, arrays, self.allocation)
            out["placement"] = placement_report(arrays, self.allocation)
        return out


def link_report(instance: NetworkInstance, arrays: NetworkArrays,
                alloc: Allocation) -> Dict[str, Any]:
    """Per-user bit-equivalent and semantic rates plus per-cluster satellite-hop rates."""
    sem = instance.sem
    gain = user_gains(arrays, alloc.uav_xy)
    snr = user_snr(arrays, alloc.b_user, alloc.p_user, gain)
    raw = alloc.b_user * np.log2(1.0 + snr)
    gamma = arrays.weight * raw
    psi = np.where(arrays.is_sem, np.asarray(semcom.semantic_rate_r2su(raw, sem)), 0.0)
    r_db = s2r_snr_db(arrays, alloc.b_s2r, alloc.p_s2r)
    return {
        "users": [
            {
                "cluster": int(arrays.user_cluster[u]),
                "kind": "sem" if arrays.is_sem[u] else "con",
                "gamma_bps": float(gamma[u]),
                "psi_suts": float(psi[u]),
                "snr": float(snr[u]),
            }
            for u in range(arrays.n_users)
        ],
        "clusters": [
            {
                "cluster": n,
                "snr_s2r_db": float(r_db[n]),
                "gamma_s2r_bps": float(semcom.semantic_to_bit_s2r(alloc.b_s2r[n], r_db[n], sem)),
                "psi_s2r_suts": float(semcom.semantic_rate_s2r(alloc.b_s2r[n], r_db[n], sem)),
            }
            for n in range(arrays.n_clusters)
        ],
    }


def placement_report(arrays: NetworkArrays, alloc: Allocation) -> List[Dict[str, float]]:
    rows = []
    for n in range(arrays.n_clusters):
        cx, cy = arrays.centroid[n]
        ux, uy = alloc.uav_xy[n]
        rows.append({
            "cluster": n,
            "centroid_x": float(cx),
            "centroid_y": float(cy),
            "uav_x": float(ux),
            "uav_y": float(uy),
            "displacement_m": float(np.hypot(ux - cx, uy - cy)),
        })
    return rows
