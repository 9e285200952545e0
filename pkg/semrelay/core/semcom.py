"""
Semantic similarity curve and semantic-rate conversions.

The similarity of a decoded semantic block is modeled as a generalized
logistic function of the link SNR in dB. Semantic throughput is converted
into the equivalent conventional bit rate so that semantic and conventional
users can be summed on the same scale.
"""

from typing import Tuple, Union

import numpy as np
from scipy.special import expit, logit

from .exceptions import DomainError
from .models import SemanticParams

ArrayLike = Union[float, np.ndarray]

# Relative inset from the logistic asymptotes used by the inverse.
INVERSE_CLAMP = 1e-6


def _as_output(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def similarity(r_db: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """
    Semantic similarity at SNR ``r_db``.

    Returns ``a1 + a2 / (1 + exp(-(c1 r + c2)))``. The sentinels ``-inf`` and
    ``+inf`` map to ``a1`` and ``a1 + a2``.
    """
    r = np.asarray(r_db, dtype=float)
    if np.any(np.isnan(r)):
        raise DomainError("similarity is undefined for NaN SNR", quantity="r_db", value=r_db)
    return _as_output(sem.a1 + sem.a2 * expit(sem.c1 * r + sem.c2))


def similarity_derivative(r_db: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """d similarity / d r (per dB)."""
    s = expit(sem.c1 * np.asarray(r_db, dtype=float) + sem.c2)
    return _as_output(sem.a2 * sem.c1 * s * (1.0 - s))


def inverse_bounds(sem: SemanticParams) -> Tuple[float, float]:
    """Open interval on which the inverse is evaluated."""
    delta = INVERSE_CLAMP * sem.a2
    return sem.a1 + delta, sem.a1 + sem.a2 - delta


def clamp_similarity(eps: ArrayLike, sem: SemanticParams) -> Tuple[ArrayLike, int]:
    """Clamp into the inverse's domain. Returns the clamped value and the number of clamped entries."""
    lo, hi = inverse_bounds(sem)
    e = np.asarray(eps, dtype=float)
    clamped = np.clip(e, lo, hi)
    return _as_output(clamped), int(np.count_nonzero(clamped != e))


def similarity_inverse(eps: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """
    SNR in dB at which the similarity equals ``eps``.

    Raises:
        DomainError: If ``eps`` lies outside the clamped open interval
            ``(a1 + delta, a1 + a2 - delta)`` with ``delta = 1e-6 a2``
    """
    lo, hi = inverse_bounds(sem)
    e = np.asarray(eps, dtype=float)
    if np.any(~np.isfinite(e)) or np.any(e < lo):
        raise DomainError(
            f"similarity {eps!r} is below the lower bound a1 + delta = {lo:.9g}",
            quantity="lower_bound", value=eps,
        )
    if np.any(e > hi):
        raise DomainError(
            f"similarity {eps!r} is above the upper bound a1 + a2 - delta = {hi:.9g}",
            quantity="upper_bound", value=eps,
        )
    return _as_output((logit((e - sem.a1) / sem.a2) - sem.c2) / sem.c1)


def semantic_to_bit_s2r(b: ArrayLike, r_db: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """Equivalent bit rate of the satellite hop: mu1 * (b / Q) * similarity(r)."""
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0):
        raise DomainError("bandwidth must be nonnegative", quantity="b", value=b)
    return _as_output(sem.mu1 * b_arr / sem.q_symbols * np.asarray(similarity(r_db, sem)))


def semantic_rate_s2r(b: ArrayLike, r_db: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """Semantic rate of the satellite hop in suts/s: (b M / Q) * similarity(r)."""
    b_arr = np.asarray(b, dtype=float)
    return _as_output(b_arr * sem.m_suts / sem.q_symbols * np.asarray(similarity(r_db, sem)))


def semantic_to_bit_r2su(c_bits: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """Equivalent bit rate of a semantic downlink carrying ``c_bits`` bits/s."""
    c = np.asarray(c_bits, dtype=float)
    if np.any(c < 0):
        raise DomainError("rate must be nonnegative", quantity="c_bits", value=c_bits)
    return _as_output(sem.mu1 * c / (sem.mu2 * sem.q_symbols))


def semantic_rate_r2su(c_bits: ArrayLike, sem: SemanticParams) -> ArrayLike:
    """Semantic rate in suts/s of a semantic downlink carrying ``c_bits`` bits/s."""
    c = np.asarray(c_bits, dtype=float)
    return _as_output(c * sem.m_suts / (sem.mu2 * sem.q_symbols))
