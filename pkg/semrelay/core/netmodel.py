"""
Network model: channel gains, link rates, compute load and constraint residuals.

All functions are pure. Instances are flattened once into ``NetworkArrays``
(users ordered cluster by cluster) so the solver and oracle can work on
numpy vectors instead of walking the pydantic tree.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import semcom
from .exceptions import ConfigurationError, DomainError
from .models import NetworkInstance, PhysConstants, UserKind

# nu is expressed in Gcycles/s when it enters zeta0 * nu^3.
CYCLES_PER_COMPUTE_UNIT = 1e9

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class NetworkArrays:
    """Vectorised view of a ``NetworkInstance``."""

    n_clusters: int
    user_cluster: np.ndarray      # (K,) cluster position of each user
    is_sem: np.ndarray            # (K,) bool
    user_xy: np.ndarray           # (K, 2) m
    height: np.ndarray            # (N,) m
    sat_gain: np.ndarray          # (N,) |h|^2
    weight: np.ndarray            # (K,) bit-equivalent weight per downlink bit
    compute_per_bit: np.ndarray   # (K,) compute units per bit-equivalent bit/s
    centroid: np.ndarray          # (N, 2)
    users_per_cluster: np.ndarray  # (N,)
    noise: float
    beta0: float
    alpha: float

    @property
    def n_users(self) -> int:
        return int(self.user_cluster.shape[0])

    def cluster_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum a per-user vector into per-cluster totals."""
        return np.bincount(self.user_cluster, weights=values, minlength=self.n_clusters)

    def members(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.user_cluster == n)


def build_arrays(instance: NetworkInstance) -> NetworkArrays:
    phys, sem = instance.phys, instance.sem
    user_cluster: List[int] = []
    is_sem: List[bool] = []
    xy: List[List[float]] = []
    for pos, cluster in enumerate(instance.clusters):
        for user in cluster.users:
            user_cluster.append(pos)
            is_sem.append(user.kind == UserKind.SEM)
            xy.append([user.x, user.y])

    sem_mask = np.asarray(is_sem, dtype=bool)
    weight = np.where(sem_mask, sem.sem_weight, 1.0)
    per_bit = np.where(sem_mask, phys.g_sem, phys.g_con) / phys.flops_per_cycle
    return NetworkArrays(
        n_clusters=instance.n_clusters,
        user_cluster=np.asarray(user_cluster, dtype=int),
        is_sem=sem_mask,
        user_xy=np.asarray(xy, dtype=float).reshape(-1, 2),
        height=np.array([c.uav_height_m for c in instance.clusters], dtype=float),
        sat_gain=np.array([c.sat_link.gain for c in instance.clusters], dtype=float),
        weight=weight.astype(float),
        compute_per_bit=per_bit / CYCLES_PER_COMPUTE_UNIT,
        centroid=np.array([c.centroid for c in instance.clusters], dtype=float).reshape(-1, 2),
        users_per_cluster=np.array([len(c.users) for c in instance.clusters], dtype=int),
        noise=phys.noise_psd_w_per_hz,
        beta0=phys.beta0,
        alpha=phys.alpha,
    )


@dataclass
class Allocation:
    """Decision variables: bandwidths, powers and UAV horizontal positions."""

    b_s2r: np.ndarray   # (N,) Hz
    p_s2r: np.ndarray   # (N,) W
    b_user: np.ndarray  # (K,) Hz
    p_user: np.ndarray  # (K,) W
    uav_xy: np.ndarray  # (N, 2) m

    def copy(self) -> "Allocation":
        return Allocation(
            b_s2r=self.b_s2r.copy(),
            p_s2r=self.p_s2r.copy(),
            b_user=self.b_user.copy(),
            p_user=self.p_user.copy(),
            uav_xy=self.uav_xy.copy(),
        )

    @classmethod
    def zeros(cls, arrays: NetworkArrays) -> "Allocation":
        n, k = arrays.n_clusters, arrays.n_users
        return cls(np.zeros(n), np.zeros(n), np.zeros(k), np.zeros(k), arrays.centroid.copy())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "b_s2r": self.b_s2r.tolist(),
            "p_s2r": self.p_s2r.tolist(),
            "b_user": self.b_user.tolist(),
            "p_user": self.p_user.tolist(),
            "uav_xy": self.uav_xy.tolist(),
        }


# ---------------------------------------------------------------------------
# Link primitives
# ---------------------------------------------------------------------------


def _check_finite(name: str, value: Any) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite", quantity=name, value=value)
    return arr


def air_channel_gain(uav_xyz: Any, user_xy: Any, phys: PhysConstants) -> Any:
    """Free-space air-to-ground power gain beta0 * d^-alpha for 3-D distance d."""
    uav = _check_finite("uav_xyz", uav_xyz)
    user = _check_finite("user_xy", user_xy)
    d2 = (uav[..., 0] - user[..., 0]) ** 2 + (uav[..., 1] - user[..., 1]) ** 2 + uav[..., 2] ** 2
    if np.any(d2 <= 0):
        raise DomainError("UAV and user must not coincide", quantity="distance", value=d2)
    gain = phys.beta0 * d2 ** (-phys.alpha / 2.0)
    return float(gain) if np.ndim(gain) == 0 else gain


def snr_linear(p: Any, gain: Any, b: Any, phys: PhysConstants) -> Any:
    """Linear SNR p * gain / (b * N0); zero power gives zero."""
    b_arr = np.asarray(b, dtype=float)
    p_arr = np.asarray(p, dtype=float)
    if np.any(b_arr <= 0):
        raise DomainError("bandwidth must be strictly positive", quantity="b", value=b)
    if np.any(p_arr < 0):
        raise DomainError("power must be nonnegative", quantity="p", value=p)
    snr = p_arr * np.asarray(gain, dtype=float) / (b_arr * phys.noise_psd_w_per_hz)
    return float(snr) if np.ndim(snr) == 0 else snr


def snr_s2r_db(p: Any, gain: Any, b: Any, phys: PhysConstants) -> Any:
    """Satellite-hop SNR in dB. Zero power returns ``-inf``."""
    snr = np.asarray(snr_linear(p, gain, b, phys))
    with np.errstate(divide="ignore"):
        out = np.where(snr > 0, 10.0 * np.log10(np.where(snr > 0, snr, 1.0)), -np.inf)
    return float(out) if np.ndim(out) == 0 else out


def bit_rate(b: Any, snr: Any) -> Any:
    """Shannon rate b * log2(1 + snr)."""
    b_arr = np.asarray(b, dtype=float)
    snr_arr = np.asarray(snr, dtype=float)
    if np.any(b_arr < 0) or np.any(snr_arr < 0):
        raise DomainError("bandwidth and SNR must be nonnegative", quantity="bit_rate")
    rate = b_arr * np.log2(1.0 + snr_arr)
    return float(rate) if np.ndim(rate) == 0 else rate


def compute_load(gamma_sum_su: Any, gamma_sum_cu: Any, phys: PhysConstants) -> Any:
    """Relay processing frequency in Gcycles/s: (G_sem Gamma_SU + G_con Gamma_CU) / z."""
    su = np.asarray(gamma_sum_su, dtype=float)
    cu = np.asarray(gamma_sum_cu, dtype=float)
    if np.any(su < 0) or np.any(cu < 0):
        raise DomainError("rates must be nonnegative", quantity="compute_load")
    nu = (phys.g_sem * su + phys.g_con * cu) / phys.flops_per_cycle / CYCLES_PER_COMPUTE_UNIT
    return float(nu) if np.ndim(nu) == 0 else nu


# ---------------------------------------------------------------------------
# Vectorised evaluation over an allocation
# ---------------------------------------------------------------------------


def user_distance_sq(arrays: NetworkArrays, uav_xy: np.ndarray) -> np.ndarray:
    """Squared 3-D distance from each user to its cluster's UAV."""
    delta = uav_xy[arrays.user_cluster] - arrays.user_xy
    return np.sum(delta * delta, axis=-1) + arrays.height[arrays.user_cluster] ** 2


def user_gains(arrays: NetworkArrays, uav_xy: np.ndarray) -> np.ndarray:
    return arrays.beta0 * user_distance_sq(arrays, uav_xy) ** (-arrays.alpha / 2.0)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def user_snr(arrays: NetworkArrays, b: np.ndarray, p: np.ndarray, gain: np.ndarray) -> np.ndarray:
    """Downlink SNR; links with zero bandwidth report zero."""
    return _ratio(p * gain, b * arrays.noise)


def user_rates(arrays: NetworkArrays, alloc: Allocation,
               gain: Optional[np.ndarray] = None) -> np.ndarray:
    """Bit-equivalent rate Gamma of each downlink."""
    if gain is None:
        gain = user_gains(arrays, alloc.uav_xy)
    snr = user_snr(arrays, alloc.b_user, alloc.p_user, gain)
    return arrays.weight * alloc.b_user * np.log2(1.0 + snr)


def s2r_snr_db(arrays: NetworkArrays, b_s2r: np.ndarray, p_s2r: np.ndarray) -> np.ndarray:
    snr = _ratio(p_s2r * arrays.sat_gain, b_s2r * arrays.noise)
    with np.errstate(divide="ignore"):
        return np.where(snr > 0, 10.0 * np.log10(np.where(snr > 0, snr, 1.0)), -np.inf)


def s2r_rates(arrays: NetworkArrays, b_s2r: np.ndarray, p_s2r: np.ndarray,
              sem: Any) -> np.ndarray:
    """Equivalent bit rate delivered into each cluster by the satellite hop."""
    r = s2r_snr_db(arrays, b_s2r, p_s2r)
    return sem.mu1 / sem.q_symbols * b_s2r * np.asarray(semcom.similarity(r, sem))


def cluster_compute_load(arrays: NetworkArrays, rates: np.ndarray) -> np.ndarray:
    """Per-cluster processing frequency in Gcycles/s for per-user rates."""
    return arrays.cluster_sum(arrays.compute_per_bit * rates)


def sum_rate(instance: NetworkInstance, allocation: Allocation,
             arrays: Optional[NetworkArrays] = None) -> float:
    """Total bit-equivalent downlink rate with true channel gains."""
    arrays = arrays or build_arrays(instance)
    if arrays.n_users == 0:
        return 0.0
    return float(np.sum(user_rates(arrays, allocation)))


def surrogate_sum_rate(arrays: NetworkArrays, alloc: Allocation, h_hat: np.ndarray) -> float:
    """Reformulated objective with channel gains replaced by their lower bounds."""
    return float(np.sum(user_rates(arrays, alloc, gain=h_hat)))


def compute_reserve(instance: NetworkInstance,
                    arrays: Optional[NetworkArrays] = None) -> np.ndarray:
    """
    Per-cluster power reserved for relay computation.

    The reserve is zeta0 * nu_max^3 where nu_max is the processing frequency
    needed for the largest rate the satellite hop can deliver into the
    cluster, so any allocation whose transmit power stays within
    ``P_R - reserve`` satisfies the compute-power constraint.
    """
    arrays = arrays or build_arrays(instance)
    sem, budgets = instance.sem, instance.budgets
    s_max = sem.mu1 / sem.q_symbols * min(budgets.b_r_hz, budgets.b_s_hz) * (sem.a1 + sem.a2)
    reserve = np.zeros(arrays.n_clusters)
    for n in range(arrays.n_clusters):
        idx = arrays.members(n)
        if idx.size:
            nu_max = float(np.max(arrays.compute_per_bit[idx])) * s_max
            reserve[n] = instance.phys.zeta0 * nu_max ** 3
    return reserve


def transmit_budget(instance: NetworkInstance,
                    arrays: Optional[NetworkArrays] = None) -> np.ndarray:
    """Per-cluster downlink transmit power available after the compute reserve."""
    budget = instance.budgets.p_r_w - compute_reserve(instance, arrays)
    if np.any(budget <= 0):
        raise ConfigurationError(
            "UAV power budget does not cover the computation reserve",
            config_key="budgets.p_r_w",
        )
    return budget


# ---------------------------------------------------------------------------
# Constraint residuals
# ---------------------------------------------------------------------------

ORIGINAL_CONSTRAINTS = ("C1", "C2", "C3", "C4", "C5")
AUXILIARY_CONSTRAINTS = ("C6", "C7", "C8", "C9", "C10", "C11", "C12")
CONVEX_CONSTRAINTS = ("C6p", "C7p", "C9p", "C11p")


@dataclass
class ConstraintResiduals:
    """Signed residuals (<= 0 satisfied) and the scales used to normalise them."""

    values: Dict[str, np.ndarray] = field(default_factory=dict)
    scales: Dict[str, np.ndarray] = field(default_factory=dict)
    clamp_events: int = 0

    def relative(self, name: str) -> np.ndarray:
        return self.values[name] / self.scales[name]

    def max_violation(self, names: Optional[Iterable[str]] = None,
                      relative: bool = True) -> float:
        """Largest signed residual over ``names``; -inf when nothing is evaluated."""
        worst = -np.inf
        for name in names if names is not None else self.values:
            if name not in self.values or self.values[name].size == 0:
                continue
            vals = self.relative(name) if relative else self.values[name]
            worst = max(worst, float(np.max(vals)))
        return worst

    def satisfied(self, tol: float, names: Optional[Iterable[str]] = None) -> bool:
        return self.max_violation(names) <= tol

    def violated(self, tol: float) -> List[str]:
        return [name for name in self.values
                if self.values[name].size and float(np.max(self.relative(name))) > tol]

    def to_dict(self) -> Dict[str, List[float]]:
        return {name: vals.tolist() for name, vals in self.values.items()}


def _floor_scale(values: np.ndarray, floor: float) -> np.ndarray:
    return np.maximum(np.abs(values), floor)


def constraint_residuals(instance: NetworkInstance, allocation: Allocation,
                         aux: Any = None,
                         arrays: Optional[NetworkArrays] = None) -> ConstraintResiduals:
    """
    Residuals of the original constraints C1-C5 and, when ``aux`` is given,
    of the auxiliary constraints C6-C12 and their convex forms.

    Residuals are returned for infeasible points as well; nothing is raised.
    """
    arrays = arrays or build_arrays(instance)
    budgets, phys, sem = instance.budgets, instance.phys, instance.sem
    a = allocation
    res = ConstraintResiduals()

    gain = user_gains(arrays, a.uav_xy)
    rates = user_rates(arrays, a, gain=gain)
    gamma_sum = arrays.cluster_sum(rates)
    s_rate = s2r_rates(arrays, a.b_s2r, a.p_s2r, sem)
    nu = cluster_compute_load(arrays, rates)
    p_tx = arrays.cluster_sum(a.p_user)
    b_tx = arrays.cluster_sum(a.b_user)

    res.values["C1"] = gamma_sum - s_rate
    res.scales["C1"] = _floor_scale(np.maximum(s_rate, gamma_sum), 1.0)
    res.values["C2"] = np.array([np.sum(a.b_s2r) - budgets.b_s_hz])
    res.scales["C2"] = np.array([budgets.b_s_hz])
    res.values["C3"] = a.b_s2r + b_tx - budgets.b_r_hz
    res.scales["C3"] = np.full(arrays.n_clusters, budgets.b_r_hz)
    res.values["C4"] = np.array([np.sum(a.p_s2r) - budgets.p_s_w])
    res.scales["C4"] = np.array([budgets.p_s_w])
    res.values["C5"] = phys.zeta0 * nu ** 3 + p_tx - budgets.p_r_w
    res.scales["C5"] = np.full(arrays.n_clusters, budgets.p_r_w)

    if aux is None:
        return res

    h_hat = np.asarray(aux.h_hat, dtype=float)
    g_hat = np.asarray(aux.gamma_hat, dtype=float)
    eta = np.asarray(aux.eta_hat, dtype=float)
    r_hat = np.asarray(aux.r_hat, dtype=float)
    nu_hat = np.asarray(aux.nu_hat, dtype=float)

    d2 = user_distance_sq(arrays, a.uav_xy)
    radius2 = (arrays.beta0 / np.maximum(h_hat, 1e-300)) ** (2.0 / arrays.alpha)
    res.values["C6"] = h_hat - gain
    res.scales["C6"] = gain
    res.values["C6p"] = d2 - radius2
    res.scales["C6p"] = radius2

    snr_db = s2r_snr_db(arrays, a.b_s2r, a.p_s2r)
    res.values["C7"] = np.where(np.isfinite(snr_db), r_hat - snr_db,
                                np.where(np.isneginf(r_hat), 0.0, np.inf))
    res.scales["C7"] = _floor_scale(np.where(np.isfinite(snr_db), snr_db, 1.0), 1.0)
    signal = arrays.sat_gain * a.p_s2r * a.b_s2r
    with np.errstate(over="ignore"):
        res.values["C7p"] = arrays.noise * 10.0 ** (r_hat / 10.0) * a.b_s2r ** 2 - signal
    res.scales["C7p"] = _floor_scale(signal, 1e-300)

    res.values["C8"] = user_snr(arrays, a.b_user, a.p_user, h_hat) - g_hat
    res.scales["C8"] = _floor_scale(g_hat, 1.0)
    res.values["C9"] = 2.0 ** (-eta) - 1.0 / (1.0 + g_hat)
    res.scales["C9"] = np.ones_like(eta)
    res.values["C9p"] = g_hat ** 2 - (2.0 ** eta - 1.0) * g_hat
    res.scales["C9p"] = _floor_scale(g_hat ** 2, 1.0)

    hat_rates = arrays.weight * a.b_user * eta
    hat_sum = arrays.cluster_sum(hat_rates)
    res.values["C10"] = cluster_compute_load(arrays, hat_rates) - nu_hat
    res.scales["C10"] = _floor_scale(nu_hat, 1e-12)

    s_hat = sem.mu1 / sem.q_symbols * a.b_s2r * np.asarray(semcom.similarity(r_hat, sem))
    res.values["C11"] = hat_sum - s_hat
    res.scales["C11"] = _floor_scale(np.maximum(s_hat, hat_sum), 1.0)

    target = _ratio(sem.q_symbols * hat_sum, sem.mu1 * a.b_s2r)
    below_floor = target <= sem.a1
    clamped, events = semcom.clamp_similarity(np.where(below_floor, sem.a1 + sem.a2 / 2.0, target), sem)
    with np.errstate(over="ignore", invalid="ignore"):
        exponent = np.asarray(semcom.similarity_inverse(clamped, sem)) - r_hat
        res.values["C11p"] = np.where(below_floor, -1.0, np.expm1(exponent))
    res.scales["C11p"] = np.ones(arrays.n_clusters)
    res.clamp_events = events

    res.values["C12"] = phys.zeta0 * nu_hat ** 3 + p_tx - budgets.p_r_w
    res.scales["C12"] = np.full(arrays.n_clusters, budgets.p_r_w)
    return res
