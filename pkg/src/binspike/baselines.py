"""Comparison methods and counterexamples.

* :func:`sparse_alternative` builds a non-binary vector that explains the same
  measurements with no more nonzeros than the true train.
* :func:`box_l1_noiseless` is the closed-form minimum-l1 point of the box
  relaxation; :func:`box_l1_noisy` solves the noise-constrained version
  iteratively.
* :func:`fir_collision_pair` builds two binary trains that a decimated FIR
  filter cannot tell apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .decoder import preprocess
from .errors import ConvergenceError, InfeasibleError, NotApplicableError, ParameterError
from .model import ArModel, SpikeTrain, Trace, n_blocks


def sparse_alternative(x_hi: SpikeTrain, model: ArModel) -> np.ndarray:
    """A vector ``v != x_hi`` with the same block measurements and ``||v||_0 <= ||x_hi||_0``.

    Per block: empty blocks stay empty; a block with several spikes, or one
    spike before the last slot, is replaced by its measurement in the last
    slot; a lone spike in the last slot moves to the slot before it with
    weight ``1/alpha``.
    """
    d = model.decimation
    if d < 2:
        raise NotApplicableError("with D = 1 every block is observed directly; no alternative exists")
    x = np.asarray(x_hi.values, dtype=float)
    blocks = x[1:].reshape(-1, d)
    if not np.any(blocks):
        raise NotApplicableError("train has no spikes after index 0; the measurements determine it")
    c = blocks @ model.h
    out = np.zeros_like(blocks)
    nnz = np.count_nonzero(blocks, axis=1)
    last_only = (nnz == 1) & (blocks[:, -1] != 0)
    move = (nnz >= 1) & ~last_only
    out[move, -1] = c[move]
    out[last_only, -2] = c[last_only] / model.alpha
    return np.concatenate((x[:1], out.ravel()))


def _cum_levels(model):
    # A * (1 + alpha + ... + alpha**(k-1)) for k = 0..D
    return np.concatenate(([0.0], model.amplitude * np.cumsum(model.alpha ** np.arange(model.decimation))))


def box_l1_noiseless(c, model: ArModel) -> np.ndarray:
    """Minimum-l1 vector in ``[0, A]^L`` with block measurements ``c``.

    Each block is filled from its last slot backwards: full-amplitude entries
    while they fit, then one partial entry carrying the remainder.
    """
    c = np.asarray(c, dtype=float)
    d, a, amp = model.decimation, model.alpha, model.amplitude
    levels = _cum_levels(model)
    slack = 1e-12 * (1.0 + levels[-1])
    if c[0] < -slack or c[0] > amp + slack:
        raise InfeasibleError(f"c[0]={float(c[0])!r} outside [0, {amp}]")
    bad = np.flatnonzero((c[1:] < -slack) | (c[1:] > levels[-1] + slack))
    if bad.size:
        n = int(bad[0]) + 1
        raise InfeasibleError(f"c[{n}]={float(c[n])!r} outside [0, {levels[-1]}]")
    cb = np.clip(c[1:], 0.0, levels[-1])
    k = np.searchsorted(levels, cb + slack, side="right") - 1
    k = np.clip(k, 0, d)
    out = np.zeros((cb.size, d))
    slot = np.arange(d)
    out[slot[None, :] >= (d - k)[:, None]] = amp
    rem = np.maximum(cb - levels[k], 0.0)
    part = k < d
    rows = np.flatnonzero(part & (rem > 0))
    out[rows, d - 1 - k[rows]] = rem[rows] / a ** k[rows]
    return np.concatenate(([min(max(c[0], 0.0), amp)], out.ravel()))


@dataclass(frozen=True)
class SolverInfo:
    iterations: int
    last_change: float
    residual_norm: float
    objective: float


def operator_norm(model: ArModel, m: int, iters: int = 200) -> float:
    """Spectral norm of the spikes-to-low-rate-samples map (power iteration)."""
    length = model.high_rate_length(m)
    v = np.random.default_rng(0).random(length)
    est = 0.0
    h, ad = model.h, model.alpha_d
    for _ in range(iters):
        w = kernels.apply_adjoint(kernels.apply_forward(v, h, ad, m), h, ad)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= 1e-12 * nw:
            est = nw
            break
        est = nw
    return math.sqrt(est)


def box_l1_noisy(
    trace: Trace,
    model: ArModel | None = None,
    epsilon: float = 0.0,
    max_iter: int = 100_000,
    tol: float = 1e-10,
    feas_tol: float = 1e-8,
    return_info: bool = False,
):
    """Solve ``min ||x||_1`` s.t. ``||y - S G x||_2 <= epsilon``, ``0 <= x <= A``.

    Uses primal-dual hybrid gradient iterations.  Stops once successive
    primal and dual iterates move by less than ``tol``; the final iterate must
    satisfy the data constraint to within ``feas_tol * (1 + ||y||)``.

    Raises :class:`ConvergenceError` (with diagnostics) otherwise.
    """
    model = model or trace.model
    if epsilon < 0:
        raise ParameterError("epsilon must be >= 0")
    y = np.ascontiguousarray(getattr(trace, "values", trace), dtype=float)
    m = y.size
    length = model.high_rate_length(m)
    if not np.any(y):
        x = np.zeros(length)
        info = SolverInfo(0, 0.0, 0.0, 0.0)
        return (x, info) if return_info else x
    nk = operator_norm(model, m) * 1.01
    step = 1.0 / nk
    h = np.ascontiguousarray(model.h)
    x, _, it, ch = kernels.pdhg_box_l1(
        y, h, model.alpha_d, model.amplitude, float(epsilon), step, step, int(max_iter), float(tol)
    )
    resid = float(np.linalg.norm(kernels.apply_forward(x, h, model.alpha_d, m) - y))
    info = SolverInfo(int(it), float(ch), resid, float(x.sum()))
    if ch >= tol or resid > epsilon + feas_tol * (1.0 + np.linalg.norm(y)):
        raise ConvergenceError(
            f"box-l1 solver stopped after {it} iterations (change {ch:.3g}, residual {resid:.3g})",
            diagnostics=info.__dict__,
        )
    return (x, info) if return_info else x


def epsilon_for(trace: Trace, noise=None, rule: str = "oracle") -> float:
    """Constraint radius: ``||w||_2`` (oracle) or ``sqrt(M) * sigma``."""
    if rule == "oracle":
        return 0.0 if noise is None else float(np.linalg.norm(noise))
    if rule == "sigma-sqrt-m":
        return math.sqrt(len(trace)) * trace.noise_sigma
    raise ParameterError(f"unknown epsilon rule {rule!r}")


def binarize(x, amplitude: float, threshold: float | None = None) -> np.ndarray:
    """Indices of entries above ``threshold`` (default ``A / 2``)."""
    thr = amplitude / 2.0 if threshold is None else threshold
    return np.flatnonzero(np.asarray(x) > thr)


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.taps, dtype=float))
        if t.ndim != 1 or t.size < 1:
            raise ParameterError("FIR filter needs at least one tap")
        object.__setattr__(self, "taps", t)

    @property
    def length(self) -> int:
        return self.taps.size

    def decimated_output(self, x, decimation: int) -> np.ndarray:
        y = np.convolve(np.asarray(getattr(x, "values", x), dtype=float), self.taps)[: len(x)]
        return y[::decimation]


def fir_collision_pair(u: FirFilter, decimation: int, length: int, amplitude: float = 1.0):
    """Two different binary trains with identical decimated FIR outputs.

    Sample ``D n`` only sees inputs ``D n - r + 1 .. D n``, so inputs at offsets
    ``1 .. D - r`` after a sample are never observed when ``D > r``.  The pair
    differs at index 1.
    """
    r = u.length
    if decimation <= r:
        raise NotApplicableError(f"D={decimation} does not exceed the filter length {r}")
    n_blocks(length, decimation)
    x0 = np.zeros(length)
    x1 = x0.copy()
    x1[1] = amplitude
    return SpikeTrain(x0, amplitude, decimation), SpikeTrain(x1, amplitude, decimation)


def l1box_from_trace(trace: Trace, epsilon: float = 0.0, exact: bool = False) -> np.ndarray:
    """Convenience: closed form on ``c`` when ``exact``, iterative solver otherwise."""
    if exact:
        return box_l1_noiseless(preprocess(trace), trace.model)
    return box_l1_noisy(trace, trace.model, epsilon)
