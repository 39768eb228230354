"""AR(1) measurement model: filtering, decimation and synthetic data.

A binary spike train ``x_hi`` on a fine grid drives the first-order filter
``y_hi[n] = alpha * y_hi[n-1] + x_hi[n]`` (at rest before ``n = 0``) and only
every ``D``-th output sample is observed, optionally with additive Gaussian
noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ParameterError, ShapeError, SizeError

#: largest high-rate length for which dense system matrices are built
DENSE_GUARD = 4096


@dataclass(frozen=True)
class ArModel:
    """Parameters of the measurement system.

    Parameters
    ----------
    alpha : float
        Filter pole, strictly inside ``(0, 1)``.
    amplitude : float
        Spike amplitude ``A > 0``.
    decimation : int
        Decimation factor ``D >= 1``.
    """

    alpha: float
    amplitude: float = 1.0
    decimation: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.amplitude > 0.0:
            raise ParameterError(f"amplitude must be positive, got {self.amplitude!r}")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ParameterError(f"decimation must be an integer >= 1, got {self.decimation!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "decimation", int(self.decimation))

    @property
    def h(self) -> np.ndarray:
        """Block response ``[alpha**(D-1), ..., alpha, 1]``."""
        return self.alpha ** np.arange(self.decimation - 1, -1, -1, dtype=float)

    @property
    def alpha_d(self) -> float:
        return self.alpha**self.decimation

    def high_rate_length(self, m: int) -> int:
        return (m - 1) * self.decimation + 1

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "amplitude": self.amplitude, "decimation": self.decimation}


def n_blocks(length: int, decimation: int) -> int:
    """Number of low-rate samples ``M`` for a train of ``length = (M-1) D + 1``."""
    if length < 1 or (length - 1) % decimation:
        raise ShapeError(
            f"train length {length} is not of the form (M-1)*{decimation}+1"
        )
    return (length - 1) // decimation + 1


@dataclass(frozen=True)
class SpikeTrain:
    """Binary high-rate spike train with entries in ``{0, A}``.

    The block view splits ``values`` into the scalar ``values[0]`` followed by
    ``M - 1`` consecutive blocks of length ``D``.
    """

    values: np.ndarray
    amplitude: float = 1.0
    decimation: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1:
            raise ShapeError("spike train must be one-dimensional")
        n_blocks(v.size, self.decimation)
        if not np.all((v == 0.0) | (v == self.amplitude)):
            raise ParameterError("spike train entries must be exactly 0 or the amplitude")

    @classmethod
    def from_bits(cls, bits, model: ArModel) -> "SpikeTrain":
        bits = np.asarray(bits)
        return cls(bits.astype(float) * model.amplitude, model.amplitude, model.decimation)

    def __len__(self):
        return self.values.size

    @property
    def n_blocks(self) -> int:
        return n_blocks(self.values.size, self.decimation)

    @property
    def bits(self) -> np.ndarray:
        return (self.values != 0.0).astype(np.int8)

    @property
    def blocks(self) -> np.ndarray:
        """Blocks ``1..M-1`` as an ``(M-1, D)`` array (block 0 excluded)."""
        return self.values[1:].reshape(-1, self.decimation)

    def block(self, n: int) -> np.ndarray:
        if n == 0:
            return self.values[:1]
        return self.blocks[n - 1]

    @property
    def spike_indices(self) -> np.ndarray:
        return np.flatnonzero(self.values)


@dataclass(frozen=True)
class Trace:
    """Low-rate measurement sequence ``y_lo`` (clean) or ``z_lo`` (noisy)."""

    values: np.ndarray
    model: ArModel
    noisy: bool = False
    noise_sigma: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 1:
            raise ShapeError("trace must be a non-empty 1-D sequence")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")

    def __len__(self):
        return self.values.size


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")


def ar_filter(x, alpha: float) -> np.ndarray:
    """Run the AR(1) recursion from rest over ``x`` (a SpikeTrain or array)."""
    _check_alpha(alpha)
    x = np.asarray(getattr(x, "values", x), dtype=float)
    return lfilter([1.0], [1.0, -alpha], x)


def decimate(y_hi, decimation: int, m: int | None = None, model: ArModel | None = None) -> Trace | np.ndarray:
    """Keep every ``decimation``-th sample starting at index 0.

    Returns a :class:`Trace` when ``model`` is given, else a plain array.
    ``m`` defaults to the largest count that fits.
    """
    y_hi = np.asarray(y_hi, dtype=float)
    if decimation < 1:
        raise ParameterError("decimation must be >= 1")
    if m is None:
        m = (y_hi.size - 1) // decimation + 1 if y_hi.size else 0
    if m < 1 or y_hi.size < (m - 1) * decimation + 1:
        raise ShapeError(
            f"need at least {(m - 1) * decimation + 1} samples for M={m}, got {y_hi.size}"
        )
    out = y_hi[: (m - 1) * decimation + 1 : decimation].copy()
    if model is None:
        return out
    return Trace(out, model)


def measure(x: SpikeTrain, model: ArModel) -> Trace:
    """Noiseless low-rate trace of a spike train."""
    y = decimate(ar_filter(x, model.alpha), model.decimation)
    return Trace(y, model)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate(model: ArModel, m: int, p: float, sigma: float, seed=None):
    """Draw an i.i.d. ``A * Bernoulli(p)`` train and its noisy low-rate trace.

    Spikes are drawn first, then the noise, from one generator, so a fixed
    ``seed`` reproduces both.  ``seed`` may also be a ``numpy`` Generator that
    the caller owns.

    Returns
    -------
    (SpikeTrain, Trace)
    """
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"spiking probability must be in [0, 1], got {p!r}")
    if not sigma >= 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma!r}")
    if m < 1:
        raise ParameterError("M must be >= 1")
    rng = make_rng(seed)
    length = model.high_rate_length(m)
    bits = rng.random(length) < p
    x = SpikeTrain.from_bits(bits, model)
    y = decimate(ar_filter(x, model.alpha), model.decimation)
    w = rng.normal(0.0, sigma, size=m) if sigma > 0 else np.zeros(m)
    trace = Trace(y + w, model, noisy=sigma > 0, noise_sigma=float(sigma))
    return x, trace


def build_system_matrices(model: ArModel, m: int):
    """Dense ``(G_alpha, S_D, H_D)`` for small instances (test oracle).

    ``G_alpha`` is the ``L x L`` lower-triangular Toeplitz filter matrix,
    ``S_D`` the ``M x L`` row selector and ``H_D`` the block-diagonal map from
    spikes to the decoupled per-block measurements.
    """
    d = model.decimation
    length = model.high_rate_length(m)
    if length > DENSE_GUARD:
        raise SizeError(f"L={length} exceeds dense guard {DENSE_GUARD}")
    idx = np.arange(length)
    lag = idx[:, None] - idx[None, :]
    g = np.where(lag >= 0, model.alpha ** np.maximum(lag, 0), 0.0)
    s = np.zeros((m, length))
    s[np.arange(m), np.arange(m) * d] = 1.0
    hmat = np.zeros((m, length))
    hmat[0, 0] = 1.0
    for n in range(1, m):
        hmat[n, (n - 1) * d + 1 : n * d + 1] = model.h
    return g, s, hmat
