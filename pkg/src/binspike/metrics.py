"""Spike-train scoring: tolerance-window F-score and count error."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class MatchResult:
    pairs: list = field(default_factory=list)
    true_positives: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f_score: float = 0.0

    def to_dict(self):
        return {
            "pairs": [list(p) for p in self.pairs],
            "true_positives": self.true_positives,
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
        }


def match_spikes(truth, est, t0: int = 0) -> MatchResult:
    """One-to-one matching of spike indices with ``|i - j| <= t0``.

    Truth spikes are swept in increasing order and each takes the earliest
    still-unmatched estimate inside its window.  Because all windows have the
    same width this yields a maximum-cardinality matching.

    Both sets empty counts as perfect recovery (``F = 1``).
    """
    if t0 < 0:
        raise ParameterError("t0 must be >= 0")
    truth = np.unique(np.asarray(truth, dtype=np.int64))
    est = np.unique(np.asarray(est, dtype=np.int64))
    k, k_est = truth.size, est.size
    if k == 0 and k_est == 0:
        return MatchResult([], 0, 1.0, 1.0, 1.0)

    pairs = []
    j = 0
    for i in truth:
        # estimates left of the window can never be matched by later truths
        while j < k_est and est[j] < i - t0:
            j += 1
        if j < k_est and est[j] <= i + t0:
            pairs.append((int(i), int(est[j])))
            j += 1
    tp = len(pairs)
    precision = tp / k_est if k_est else 0.0
    recall = tp / k if k else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MatchResult(pairs, tp, precision, recall, f)


def count_error(gamma, gamma_hat) -> int:
    """``sum |gamma - gamma_hat|`` over blocks."""
    gamma = np.asarray(gamma, dtype=np.int64)
    gamma_hat = np.asarray(gamma_hat, dtype=np.int64)
    if gamma.shape != gamma_hat.shape:
        raise ShapeError(f"count vectors differ in shape: {gamma.shape} vs {gamma_hat.shape}")
    return int(np.abs(gamma - gamma_hat).sum())
