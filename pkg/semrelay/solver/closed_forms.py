"""
Closed-form block solutions and the scalar marginals they are built from.

Downlink bandwidth at a water level comes from the Lambert-W solution of
``d/db [w b log2(1 + a/b)] = theta``. The satellite-hop marginals are the
derivatives of ``(mu1/Q) b similarity(10 log10(p h / (b N0)))``. The dual
closed forms for the satellite bandwidth, gain bounds, spectral-efficiency
bounds, compute frequency, powers and UAV position are kept in the form the
KKT conditions produce so they can be checked against the numerical blocks.
"""

import math
from typing import Callable, Optional

import numpy as np
from scipy.optimize import bisect, brentq
from scipy.special import lambertw, logit

from ..core import semcom
from ..core.exceptions import SolverError
from ..core.models import SemanticParams

LN2 = float(np.log(2.0))
LN10 = float(np.log(10.0))
DB_PER_NEPER = 10.0 / LN10
# keeps exp() of a bracket end finite
LOG_RANGE = 700.0


# ---------------------------------------------------------------------------
# Downlink bandwidth water level
# ---------------------------------------------------------------------------


def _efficiency_gap(x: np.ndarray) -> np.ndarray:
    return np.log1p(x) - x / (1.0 + x)


def snr_at_level(t: np.ndarray) -> np.ndarray:
    """
    Solve ``ln(1+x) - x/(1+x) = t`` for the per-link SNR ``x >= 0``.

    ``t = theta ln2 / w`` is the normalised water level. ``t = 0`` gives 0 and
    very large ``t`` gives ``inf``.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        branch = np.real(lambertw(-np.exp(-1.0 - t)))
        x = -1.0 / branch - 1.0
        small = t < 1e-6
        x = np.where(small, np.sqrt(2.0 * t), x)
        x = np.where(np.isfinite(x) & (x > 0), x, np.where(t > 0, np.inf, 0.0))
        # Newton polish on finite interior points
        for _ in range(3):
            interior = np.isfinite(x) & (x > 0)
            slope = np.where(interior, x / (1.0 + x) ** 2, 1.0)
            step = np.where(interior, (_efficiency_gap(x) - t) / slope, 0.0)
            x = np.where(interior, np.maximum(x - step, 0.5 * x), x)
    return x


def user_bandwidth_at_level(theta: float, a: np.ndarray, w: np.ndarray,
                            floor: float) -> np.ndarray:
    """
    Bandwidth maximising ``w b log2(1 + a/b) - theta b`` per link.

    ``a = p g / N0`` is the link's SNR-bandwidth product in Hz.
    """
    a = np.asarray(a, dtype=float)
    if theta <= 0:
        return np.full_like(a, np.inf)
    x = snr_at_level(theta * LN2 / np.asarray(w, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        b = a / x
    return np.where(np.isnan(b), floor, np.maximum(b, floor))


def user_rate(b: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Bit-equivalent rate ``w b log2(1 + a/b)``; zero bandwidth gives zero."""
    b = np.asarray(b, dtype=float)
    safe = np.where(b > 0, b, 1.0)
    return np.where(b > 0, w * b * np.log2(1.0 + np.asarray(a) / safe), 0.0)


def user_marginal_rate(b: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """d/db of ``w b log2(1 + a/b)``."""
    x = np.asarray(a, dtype=float) / np.asarray(b, dtype=float)
    return np.asarray(w) / LN2 * _efficiency_gap(x)


# ---------------------------------------------------------------------------
# Satellite hop
# ---------------------------------------------------------------------------


def s2r_snr_db(b: np.ndarray, p: np.ndarray, h: np.ndarray, noise: float) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = p * h / (b * noise)
        return np.where(snr > 0, 10.0 * np.log10(np.where(snr > 0, snr, 1.0)), -np.inf)


def s2r_rate(b: np.ndarray, p: np.ndarray, h: np.ndarray, noise: float,
             sem: SemanticParams) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    r = s2r_snr_db(np.where(b > 0, b, 1.0), p, h, noise)
    return np.where(b > 0, sem.mu1 / sem.q_symbols * b * np.asarray(semcom.similarity(r, sem)), 0.0)


def s2r_bandwidth_marginal(b: np.ndarray, p: np.ndarray, h: np.ndarray, noise: float,
                           sem: SemanticParams) -> np.ndarray:
    """d/db of the satellite-hop rate at fixed power."""
    r = s2r_snr_db(b, p, h, noise)
    eps = np.asarray(semcom.similarity(r, sem))
    slope = np.asarray(semcom.similarity_derivative(r, sem))
    return sem.mu1 / sem.q_symbols * (eps - DB_PER_NEPER * slope)


def s2r_power_marginal(b: np.ndarray, p: np.ndarray, h: np.ndarray, noise: float,
                       sem: SemanticParams) -> np.ndarray:
    """d/dp of the satellite-hop rate at fixed bandwidth."""
    p = np.asarray(p, dtype=float)
    r = s2r_snr_db(b, p, h, noise)
    slope = np.asarray(semcom.similarity_derivative(r, sem))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, sem.mu1 / sem.q_symbols * np.asarray(b) * slope * DB_PER_NEPER / p, 0.0)


def concave_snr_db(sem: SemanticParams) -> float:
    """
    SNR (dB) above which the satellite-hop rate is concave in power and in bandwidth.

    The rate is concave where ``c1 (1 - 2 s) 10/ln10 < 1`` with ``s`` the
    logistic value.
    """
    s_c = 0.5 * (1.0 - 1.0 / (sem.c1 * DB_PER_NEPER))
    if s_c <= 0:
        return -np.inf
    return float((logit(s_c) - sem.c2) / sem.c1)


def s2r_bandwidth_closed_form(lam2: float, lam3: float, lam7p: float, lam11: float,
                              h: float, p: float, r_hat: float, noise: float,
                              sem: SemanticParams) -> float:
    """
    Satellite-hop bandwidth from the bandwidth-block stationarity condition.

    ``B = (-(lam2 + lam3) + lam7p h P + lam11 (mu1/Q) eps(r_hat)) / (2 lam7p N0 10^(r_hat/10))``
    """
    numerator = -(lam2 + lam3) + lam7p * h * p + lam11 * sem.mu1 / sem.q_symbols * semcom.similarity(r_hat, sem)
    return float(numerator / (2.0 * lam7p * noise * 10.0 ** (r_hat / 10.0)))


def stationarity_b_s2r(b: float, lam2: float, lam3: float, lam7p: float, lam11: float,
                       h: float, p: float, r_hat: float, noise: float,
                       sem: SemanticParams) -> float:
    """Partial derivative of the bandwidth-block Lagrangian in the satellite-hop bandwidth."""
    gain_term = lam11 * sem.mu1 / sem.q_symbols * semcom.similarity(r_hat, sem)
    snr_term = lam7p * (2.0 * noise * 10.0 ** (r_hat / 10.0) * b - h * p)
    return float(gain_term - lam2 - lam3 - snr_term)


def lambda7p_from_tight(lam11: float, h: float, p: float, r: float,
                        sem: SemanticParams) -> float:
    """C7' multiplier consistent with a tight satellite SNR bound at ``r``."""
    if p <= 0 or h <= 0:
        return 0.0
    slope = float(semcom.similarity_derivative(r, sem))
    return lam11 * sem.mu1 / sem.q_symbols * DB_PER_NEPER * slope / (h * p)


# ---------------------------------------------------------------------------
# Downlink bandwidth in multiplier form
# ---------------------------------------------------------------------------


def downlink_coupling(lam10: float, lam11: float, eta_hat: np.ndarray, w: np.ndarray,
                      compute_per_bit: np.ndarray) -> np.ndarray:
    """``A_B``: weight of a downlink bandwidth in the compute and rate-balance constraints."""
    return (lam10 * compute_per_bit + lam11) * w * eta_hat


def b_user_closed_form(lam8: float, h_hat: float, p: float, lam3: float, a_b: float,
                       w: float, noise: float, lo: float, hi: float,
                       xtol: float = 1e-12) -> float:
    """
    Solve ``B = sqrt(lam8 H P / (N0 (-dF/dB + lam3 + A_B)))`` for ``B`` on ``[lo, hi]``.

    ``dF/dB`` depends on ``B``, so the fixed point is located by bisection on
    ``B^2 N0 (-dF/dB + lam3 + A_B) - lam8 H P``.
    """
    a = h_hat * p / noise

    def residual(b: float) -> float:
        marginal = float(user_marginal_rate(b, a, w))
        return b * b * noise * (-marginal + lam3 + a_b) - lam8 * h_hat * p

    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo >= 0:
        return lo
    if f_hi <= 0:
        return hi
    return float(bisect(residual, lo, hi, xtol=xtol * hi, rtol=4 * np.finfo(float).eps, maxiter=400))


def lambda8_from_tight(lam11: np.ndarray, w: np.ndarray, b: np.ndarray,
                       gamma_hat: np.ndarray) -> np.ndarray:
    """C8 multiplier at which the downlink closed form returns ``b`` with the SNR bound tight."""
    return lam11 * w * b / ((1.0 + gamma_hat) * LN2)


# ---------------------------------------------------------------------------
# Auxiliary bounds
# ---------------------------------------------------------------------------


def h_hat_closed_form(lam6: np.ndarray, lam8: np.ndarray, w: np.ndarray, b: np.ndarray,
                      p: np.ndarray, noise: float) -> np.ndarray:
    """Gain bound maximising the rate term against the C6/C8 multipliers."""
    a = p / (b * noise)
    with np.errstate(divide="ignore", invalid="ignore"):
        level = (w * b / LN2) * a / (lam6 + lam8 * a)
        h = (level - 1.0) / a
    return np.where(np.isfinite(h), np.maximum(h, 0.0), np.inf)


def lambda6_from_tight(w: np.ndarray, b: np.ndarray, p: np.ndarray, gain: np.ndarray,
                       noise: float) -> np.ndarray:
    """C6 multiplier at which the gain-bound closed form returns the true gain (C8 inactive)."""
    a = p / (b * noise)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (w * b / LN2) / (gain + 1.0 / a)
    return np.where(np.isfinite(lam), lam, 0.0)


def lambda9_from_tight(lam10: np.ndarray, lam11: np.ndarray, compute_per_bit: np.ndarray,
                       w: np.ndarray, b: np.ndarray, gamma_hat: np.ndarray) -> np.ndarray:
    return (lam10 * compute_per_bit + lam11) * w * b * (1.0 + gamma_hat) / LN2


def eta_hat_closed_form(lam9: np.ndarray, lam10: np.ndarray, lam11: np.ndarray,
                        compute_per_bit: np.ndarray, w: np.ndarray,
                        b: np.ndarray) -> np.ndarray:
    """Spectral-efficiency bound ``-log2((lam10 kappa + lam11) w B / (lam9 ln2))``; nan where lam9 = 0."""
    num = (lam10 * compute_per_bit + lam11) * w * b
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lam9 > 0, -np.log2(num / (lam9 * LN2)), np.nan)


def nu_hat_closed_form(lam10: np.ndarray, lam12: np.ndarray, zeta0: float) -> np.ndarray:
    """Processing-frequency bound ``sqrt(lam10 / (3 lam12 zeta0))``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lam12 > 0, np.sqrt(lam10 / (3.0 * lam12 * zeta0)), 0.0)


def r_hat_closed_form(target_similarity: np.ndarray, lam7: np.ndarray, lam11p: np.ndarray,
                      sem: SemanticParams) -> tuple:
    """
    Satellite SNR bound ``E - ln(lam7 / lam11')`` with ``E`` the inverse similarity
    of the rate-balance target. Returns the bound and the number of clamped targets.
    """
    clamped, events = semcom.clamp_similarity(target_similarity, sem)
    e = np.asarray(semcom.similarity_inverse(clamped, sem))
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where((lam7 > 0) & (lam11p > 0), np.log(lam7 / np.where(lam11p > 0, lam11p, 1.0)), 0.0)
    return e - shift, events


# ---------------------------------------------------------------------------
# Powers and location
# ---------------------------------------------------------------------------


def water_filling_power(b: np.ndarray, h_hat: np.ndarray, w: np.ndarray, lam12: float,
                        noise: float, floor: float, lam8: Optional[np.ndarray] = None) -> np.ndarray:
    """``P = (w B / ln2) / (lam8 A_P + lam12) - 1/A_P`` with ``A_P = H / (B N0)``, floored."""
    a_p = h_hat / (b * noise)
    lam8 = np.zeros_like(a_p) if lam8 is None else lam8
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (w * b / LN2) / (lam8 * a_p + lam12) - 1.0 / a_p
    return np.maximum(np.where(np.isfinite(p), p, floor), floor)


def location_weights(w: np.ndarray, p: np.ndarray, d2: np.ndarray, gamma: np.ndarray,
                     alpha: float, beta0: float, noise: float) -> np.ndarray:
    """Multipliers of the distance constraints at a stationary UAV position."""
    return alpha * w * p * beta0 * d2 ** (-alpha / 2.0 - 1.0) / (noise * LN2 * (1.0 + gamma))


def weighted_centroid(xy: np.ndarray, weights: np.ndarray) -> Optional[np.ndarray]:
    """Weighted mean of ``xy``; None when all weights vanish."""
    total = float(np.sum(weights))
    if not np.isfinite(total) or total <= 0:
        return None
    return (weights[:, None] * xy).sum(axis=0) / total


# ---------------------------------------------------------------------------
# Shared-budget water level
# ---------------------------------------------------------------------------


def solve_increasing(func: Callable[[float], float], target: float, lo: float, hi: float,
                     rtol: float = 1e-13, grow: float = 1e3, max_expand: int = 60) -> float:
    """
    Root of ``func(x) = target`` for ``func`` nondecreasing on ``x > 0``, searched in log-space.

    The bracket ``[lo, hi]`` is widened geometrically until it contains the root.
    When no sign change is found the endpoint closest to the target side is
    returned. Non-finite values of ``func`` raise :class:`SolverError`.
    """
    def gap(u: float) -> float:
        value = func(math.exp(u)) - target
        if not math.isfinite(value):
            raise SolverError(f"non-finite value {value!r} at x={math.exp(u)!r}", subproblem="root")
        return value

    u_lo, u_hi, step = math.log(lo), math.log(hi), math.log(grow)
    g_lo, g_hi = gap(u_lo), gap(u_hi)
    expand = 0
    while g_lo > 0 and expand < max_expand and u_lo - step > -LOG_RANGE:
        u_lo -= step
        g_lo = gap(u_lo)
        expand += 1
    while g_hi < 0 and expand < 2 * max_expand and u_hi + step < LOG_RANGE:
        u_hi += step
        g_hi = gap(u_hi)
        expand += 1
    if g_lo >= 0:
        return math.exp(u_lo)
    if g_hi <= 0:
        return math.exp(u_hi)
    u = brentq(gap, u_lo, u_hi, xtol=1e-15, rtol=rtol, maxiter=300)
    return math.exp(u)
