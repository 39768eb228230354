"""Noise tolerances and error probabilities of nearest-codebook decoding."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erfc

from .codebook import Codebook, cluster_stats, in_F_D, min_gap
from .errors import ParameterError, SizeError

MAX_PROB_DECIMATION = 20


def q_function(x):
    """Standard normal upper tail ``Q(x) = erfc(x / sqrt(2)) / 2``.

    Accepts scalars or arrays.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def sigma1_sq(cb: Codebook, sigma: float) -> float:
    """Variance of ``w[n] - alpha**D w[n-1]`` for i.i.d. ``N(0, sigma**2)`` noise."""
    return (1.0 + cb.model.alpha ** (2 * cb.decimation)) * sigma**2


@dataclass(frozen=True)
class NoiseBudget:
    exact_recovery_bound: float
    count_recovery_bound: float | None
    sigma1_sq: float

    def to_dict(self):
        return asdict(self)


def noise_budget(cb: Codebook, sigma: float = 0.0) -> NoiseBudget:
    """Largest per-sample noise magnitude that still guarantees recovery.

    The count bound is only present when ``alpha`` satisfies the clustering
    predicate for this ``D``.
    """
    gap = min_gap(cb)
    count_bound = None
    if in_F_D(cb.model.alpha, cb.decimation):
        stats = cluster_stats(cb)
        if stats.clustered:
            count_bound = stats.cluster_min_gap / 4.0
    return NoiseBudget(gap / 4.0, count_bound, sigma1_sq(cb, sigma))


def snr_condition(cb: Codebook, sigma: float, m: int, delta: float, strict: bool = False) -> bool:
    """``gap**2 / sigma**2 >= 4 ln(2M / delta)``.

    With ``strict=True`` the test is
    ``gap**2 / sigma1**2 >= 8 ln(2M / delta)``, which does guarantee a
    whole-train failure probability of at most ``delta``: each block fails
    with probability at most ``2 Q(gap / (2 sigma1)) <= 2 exp(-gap**2 / (8 sigma1**2))``.
    The default form is too loose by a factor of about two in the exponent.
    """
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    rhs = math.log(2.0 * m / delta)
    if strict:
        return bool(min_gap(cb) ** 2 / sigma1_sq(cb, sigma) >= 8.0 * rhs)
    return bool(min_gap(cb) ** 2 / sigma**2 >= 4.0 * rhs)


def error_bound(cb: Codebook, sigma: float, m: int, strict: bool = False) -> float:
    """Whole-train union bound ``min(1, 2M exp(-gap**2 / (k sigma1**2)))``.

    ``k = 4`` by default.  ``strict=True`` uses ``k = 8``, the constant that
    follows from ``Q(x) <= exp(-x**2 / 2)``; only that version is a valid
    upper bound on the failure probability.
    """
    if sigma == 0:
        return 0.0
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    s1 = sigma1_sq(cb, sigma)
    k = 8.0 if strict else 4.0
    return min(1.0, 2.0 * m * math.exp(-min_gap(cb) ** 2 / (k * s1)))


def block_error_prob(cb: Codebook, sigma: float, p: float, max_decimation: int = MAX_PROB_DECIMATION) -> float:
    """Exact probability that nearest decoding gets one ``D``-block wrong.

    The block is i.i.d. Bernoulli(``p``) and its measurement is perturbed by
    ``N(0, sigma1**2)``.  A block at sorted position ``k`` is decoded
    correctly iff the noise stays within half the gap to each neighbour.
    """
    if cb.decimation > max_decimation:
        raise SizeError(f"D={cb.decimation} exceeds guard {max_decimation} for the exact sum")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1]")
    if sigma == 0:
        return 0.0
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    min_gap(cb)
    s1 = math.sqrt(sigma1_sq(cb, sigma))
    d = cb.decimation
    tails = q_function(np.diff(cb.thetas) / (2.0 * s1))
    cond = np.zeros(cb.size)
    cond[1:] += tails
    cond[:-1] += tails
    k = cb.counts()
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.power(p, k) * np.power(1.0 - p, d - k)
    return float(np.dot(cond, weights))


def train_error_prob(cb: Codebook, sigma: float, p: float, m: int) -> float:
    """Whole-train error probability treating blocks as independent.

    Block 0 (a single slot, threshold ``A/2``, noise ``sigma``) is included.
    Neighbouring blocks share a noise sample, so this is an approximation.
    """
    if sigma == 0:
        return 0.0
    pe = block_error_prob(cb, sigma, p)
    p0 = q_function(cb.model.amplitude / (2.0 * sigma))
    return float(1.0 - (1.0 - p0) * (1.0 - pe) ** (m - 1))
