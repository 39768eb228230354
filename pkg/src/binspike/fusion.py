"""Denoise-then-decode pipeline.

A nonnegative l1-penalised deconvolution on the low-rate grid produces an
activity estimate ``x_l1``; rebuilding the clean trace from it by the
low-rate recursion and differencing again gives back exactly ``x_l1``, which
is then decoded block by block with the nearest-codebook rule.  Any external
low-rate deconvolution (e.g. an OASIS run) can be fed in through
:func:`from_external`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .codebook import Codebook
from .decoder import NEAREST, DecodeReport, decode_c
from .errors import ConvergenceError, ModelMismatchError, ParameterError
from .model import ArModel, Trace


@dataclass(frozen=True)
class DenoiseResult:
    x_l1: np.ndarray
    y_hat: np.ndarray
    lam: float
    model: ArModel
    iterations: int = 0


def rebuild_trace(x_l1, alpha_d: float) -> np.ndarray:
    """``y[0] = x[0]``, ``y[n] = alpha_d * y[n-1] + x[n]``, evaluated sequentially."""
    x = np.asarray(x_l1, dtype=float)
    y = np.empty_like(x)
    prev = 0.0
    for n in range(x.size):
        prev = alpha_d * prev + x[n]
        y[n] = prev
    return y


def estimate_noise_sigma(z) -> float:
    """Robust noise level from first differences (median absolute deviation)."""
    dz = np.diff(np.asarray(z, dtype=float))
    if dz.size == 0:
        return 0.0
    return float(np.median(np.abs(dz - np.median(dz))) / (0.6745 * math.sqrt(2.0)))


def default_lambda(trace: Trace) -> float:
    """``sigma * sqrt(2 ln M) * (1 - alpha**D)**2``.

    The penalty shifts each interior block estimate down by about
    ``lam * (1 - alpha**D)**2``, so the universal threshold is rescaled by the
    same factor.  Sigma is taken from the trace or estimated.
    """
    sigma = trace.noise_sigma if trace.noise_sigma > 0 else estimate_noise_sigma(trace.values)
    universal = sigma * math.sqrt(2.0 * math.log(max(len(trace), 2)))
    return universal * (1.0 - trace.model.alpha_d) ** 2


def denoise_low_rate(trace: Trace, lam: float | str | None = "auto", max_iter: int = 100_000, tol: float = 1e-12) -> DenoiseResult:
    """Nonnegative lasso ``min 0.5||z - T s||^2 + lam * sum(s)``, ``s >= 0``.

    ``T`` is the low-rate AR response with pole ``alpha**D``.  Solved by
    accelerated projected proximal gradient.
    """
    if lam is None or lam == "auto":
        lam = default_lambda(trace)
    lam = float(lam)
    if lam < 0:
        raise ParameterError("lambda must be >= 0")
    ad = trace.model.alpha_d
    z = np.ascontiguousarray(trace.values, dtype=float)
    if not np.any(z):
        zeros = np.zeros(z.size)
        return DenoiseResult(zeros, zeros.copy(), lam, trace.model, 0)
    step = (1.0 - ad) ** 2
    s, it, ch = kernels.fista_nn_lasso(z, ad, lam, step, int(max_iter), float(tol))
    if it >= max_iter and ch > tol * (1.0 + np.max(np.abs(s))):
        raise ConvergenceError(
            f"denoiser did not converge in {it} iterations (change {ch:.3g})",
            diagnostics={"iterations": int(it), "last_change": float(ch)},
        )
    s = np.asarray(s)
    return DenoiseResult(s, rebuild_trace(s, ad), lam, trace.model, int(it))


def from_external(x_l1, model: ArModel) -> DenoiseResult:
    """Wrap an externally computed low-rate activity estimate."""
    x = np.asarray(x_l1, dtype=float)
    return DenoiseResult(x, rebuild_trace(x, model.alpha_d), float("nan"), model)


def fused_decode(den: DenoiseResult, cb: Codebook, workers: int | None = None) -> DecodeReport:
    """Nearest-codebook decode of the differenced denoised trace."""
    if den.model != cb.model:
        raise ModelMismatchError(f"denoised model {den.model} differs from codebook model {cb.model}")
    c_hat = den.y_hat.copy()
    c_hat[1:] -= den.model.alpha_d * den.y_hat[:-1]
    return decode_c(c_hat, cb, NEAREST, workers)
