"""Block-wise recovery of binary spike trains from low-rate traces.

Differencing consecutive low-rate samples,
``c[n] = z[n] - alpha**D * z[n-1]``, decouples the measurements: each
``c[n]`` only depends on the ``D`` spikes between samples ``n-1`` and ``n``.
Each block is then decoded on its own by binary search in the sorted codebook.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .codebook import Codebook, pattern_bits, unit_thetas
from .errors import (
    DegenerateCodebookError,
    EstimationError,
    ModelMismatchError,
    NotInCodebookError,
    ParameterError,
)
from .model import SpikeTrain, Trace

EXACT = "exact"
NEAREST = "nearest"


def match_tolerance(cb: Codebook) -> float:
    return 1e-9 * (1.0 + cb.theta_max)


@dataclass(frozen=True)
class DecodeReport:
    train: SpikeTrain
    counts: np.ndarray
    residuals: np.ndarray
    amplitude_used: float
    c: np.ndarray

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "residuals": self.residuals.tolist(),
            "amplitude": self.amplitude_used,
        }


def preprocess(trace) -> np.ndarray:
    """Per-block measurements ``c[0] = z[0]``, ``c[n] = z[n] - alpha**D z[n-1]``."""
    z = np.asarray(trace.values, dtype=float)
    c = z.copy()
    c[1:] -= trace.model.alpha_d * z[:-1]
    return c


def _require_free(cb):
    if not cb.collision_free:
        raise DegenerateCodebookError("decoding needs a collision-free codebook")


def search_nearest(c_e: float, thetas) -> tuple[int, int]:
    """Bracketing binary search for the nearest sorted value.

    Returns ``(position, probes)`` where ``probes`` counts list comparisons,
    the final two-way choice included.  Exact midpoints resolve downwards.
    """
    lo, hi = 0, len(thetas) - 1
    probes = 0
    while hi - lo > 1:
        mid = lo + (hi - lo) // 2
        probes += 1
        if thetas[mid] > c_e:
            hi = mid
        else:
            lo = mid
    probes += 1
    if (c_e - thetas[hi]) ** 2 < (c_e - thetas[lo]) ** 2:
        return hi, probes
    return lo, probes


def decode_block_nn(c_e: float, cb: Codebook):
    """Closest codebook pattern to one noisy block measurement.

    Returns ``(block, residual)`` with ``residual = |c_e - theta|``.
    """
    _require_free(cb)
    pos, _ = search_nearest(float(c_e), cb.thetas)
    return cb.pattern(pos), abs(float(c_e) - float(cb.thetas[pos]))


def decode_block_exact(c: float, cb: Codebook, tol: float | None = None) -> np.ndarray:
    """Pattern whose codebook value equals ``c`` up to ``tol``.

    Raises :class:`NotInCodebookError` when no value is close enough, which
    signals noise or a wrong model rather than a decodable block.
    """
    _require_free(cb)
    tol = match_tolerance(cb) if tol is None else tol
    pos, _ = search_nearest(float(c), cb.thetas)
    if abs(float(c) - float(cb.thetas[pos])) > tol:
        raise NotInCodebookError(f"measurement {c!r} matches no codebook value", value=c)
    return cb.pattern(pos)


def _search(c_blocks, cb, mode, workers):
    k = kernels
    tol = match_tolerance(cb)
    run = (lambda q: k.nn_search(cb.thetas, q)) if mode == NEAREST else (
        lambda q: k.exact_search(cb.thetas, q, tol)
    )
    if not workers or workers <= 1 or c_blocks.size < 2 * workers:
        return run(c_blocks)
    # kernels release the GIL; chunks are independent and reassembled in order
    chunks = np.array_split(c_blocks, workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(run, chunks))
    return np.concatenate(parts)


def decode_c(c, cb: Codebook, mode: str = NEAREST, workers: int | None = None) -> DecodeReport:
    """Decode a precomputed block-measurement sequence ``c``."""
    _require_free(cb)
    if mode not in (EXACT, NEAREST):
        raise ParameterError(f"unknown mode {mode!r}")
    c = np.ascontiguousarray(c, dtype=float)
    amp = cb.model.amplitude
    d = cb.decimation
    m = c.size

    # block 0 is a single slot
    if mode == NEAREST:
        x0 = amp if abs(c[0] - amp) < abs(c[0]) else 0.0
    else:
        tol0 = 1e-9 * (1.0 + amp)
        if abs(c[0]) <= tol0:
            x0 = 0.0
        elif abs(c[0] - amp) <= tol0:
            x0 = amp
        else:
            raise NotInCodebookError(f"block 0: {float(c[0])!r} is neither 0 nor A", value=float(c[0]), block=0)

    pos = _search(c[1:], cb, mode, workers)
    if mode == EXACT and np.any(pos < 0):
        bad = int(np.flatnonzero(pos < 0)[0]) + 1
        raise NotInCodebookError(
            f"block {bad}: measurement {float(c[bad])!r} matches no codebook value",
            value=float(c[bad]),
            block=bad,
        )
    bits = pattern_bits(cb.perm[pos], d)
    values = np.concatenate(([x0], bits.ravel() * amp))
    train = SpikeTrain(values, amp, d)
    counts = np.concatenate(([int(x0 != 0)], bits.sum(axis=1))).astype(int)
    residuals = np.concatenate(([abs(c[0] - x0)], np.abs(c[1:] - cb.thetas[pos])))
    return DecodeReport(train, counts, residuals, amp, c)


def decode_train(trace: Trace, cb: Codebook, mode: str = NEAREST, workers: int | None = None) -> DecodeReport:
    """Recover the high-rate train behind ``trace``.

    Blocks are independent; with ``workers > 1`` they are searched in chunks
    on a thread pool and the result is identical to the sequential one.
    """
    if trace.model != cb.model:
        raise ModelMismatchError(f"trace model {trace.model} differs from codebook model {cb.model}")
    return decode_c(preprocess(trace), cb, mode, workers)


def default_workers() -> int:
    return min(8, os.cpu_count() or 1)


def estimate_counts(report_or_train) -> np.ndarray:
    """Spikes per block; block 0 contributes 0 or 1."""
    if isinstance(report_or_train, DecodeReport):
        return report_or_train.counts.copy()
    train = report_or_train
    nz = train.values != 0
    return np.concatenate(([int(nz[0])], nz[1:].reshape(-1, train.decimation).sum(axis=1))).astype(int)


def estimate_amplitude(c_e, alpha: float, decimation: int, pivot: int | None = None, tol: float = 0.5):
    """Estimate the common spike amplitude from block measurements.

    Every nonzero unit-amplitude codebook value ``theta`` proposes
    ``c_e[pivot] / theta``.  A proposal survives if every other block
    measurement lies within ``tol`` of ``A_k * theta'`` for some codebook
    value ``theta'``.  Block 0 is not used.

    Among several survivors the one with the smallest summed distance wins,
    then the larger amplitude.

    Returns
    -------
    (float, list of float)
        Estimate and all surviving candidates in ascending order.
    """
    c_e = np.asarray(c_e, dtype=float)
    if tol < 0:
        raise ParameterError("tol must be >= 0")
    if c_e.size < 2:
        raise EstimationError("need at least one block measurement besides c[0]")
    blocks = c_e[1:]
    if pivot is None:
        pivot = 1 + int(np.argmax(np.abs(blocks)))
    if not 1 <= pivot < c_e.size:
        raise ParameterError(f"pivot {pivot} outside [1, {c_e.size - 1}]")
    if not c_e[pivot] > 3 * tol:
        raise EstimationError(f"pivot measurement {c_e[pivot]!r} is below the noise floor {3 * tol}")

    unit = np.sort(unit_thetas(alpha, decimation))
    candidates = c_e[pivot] / unit[1:]
    others = np.delete(blocks, pivot - 1)
    survivors = []
    for amp in candidates:
        pos = kernels.nn_search(unit, np.ascontiguousarray(others / amp))
        dist = np.abs(others - amp * unit[pos])
        if np.all(dist <= tol):
            survivors.append((float(dist.sum()), -float(amp)))
    if not survivors:
        raise EstimationError("no candidate amplitude is consistent with all measurements")
    survivors.sort()
    best = -survivors[0][1]
    return best, sorted(-s[1] for s in survivors)
