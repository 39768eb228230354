"""Sorted codebook of block measurements.

For a block of ``D`` binary slots every spike pattern ``v`` maps to the scalar
``h . v`` with ``h = [alpha**(D-1), ..., alpha, 1]``.  The codebook stores
those ``2**D`` scalars in ascending order together with the pattern that
produced each of them, so a single measurement can be decoded by binary
search instead of enumeration.

Patterns are packed as ``D``-bit integers whose most significant bit is the
earliest slot of the block.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CodewordIndexError,
    DegenerateCodebookError,
    FormatError,
    ModelMismatchError,
    SizeError,
)
from .model import ArModel

MAGIC = b"BSRC"
VERSION = 1
MAX_DECIMATION = 24
_HEADER = struct.Struct("<4sHddI")


def collision_tolerance(theta_max: float) -> float:
    """Adjacent sorted values closer than this are treated as equal."""
    return 1e-10 * (1.0 + theta_max)


def unit_thetas(alpha: float, decimation: int) -> np.ndarray:
    """Unsorted unit-amplitude values ``h . b(k)`` for ``k = 0 .. 2**D - 1``."""
    t = np.zeros(1)
    # bit j (LSB = 0) is slot D - j, whose weight is alpha**j
    for j in range(decimation):
        t = np.concatenate((t, t + alpha**j))
    return t


def pattern_bits(indices, decimation: int) -> np.ndarray:
    """Unpack packed codeword indices into ``(..., D)`` arrays of 0/1, MSB first."""
    idx = np.asarray(indices, dtype=np.uint64)
    shifts = np.arange(decimation - 1, -1, -1, dtype=np.uint64)
    return ((idx[..., None] >> shifts) & np.uint64(1)).astype(np.int8)


def codeword(k: int, model: ArModel) -> np.ndarray:
    """Spike block for packed index ``k``; slot 1 is the most significant bit."""
    d = model.decimation
    if not 0 <= k < 2**d:
        raise CodewordIndexError(f"codeword index {k} outside [0, {2**d - 1}]")
    return pattern_bits(k, d).astype(float) * model.amplitude


@dataclass(frozen=True, eq=False)
class Codebook:
    model: ArModel
    thetas: np.ndarray
    perm: np.ndarray
    min_gap: float
    collision_free: bool

    @property
    def decimation(self) -> int:
        return self.model.decimation

    @property
    def size(self) -> int:
        return self.thetas.size

    @property
    def theta_max(self) -> float:
        return float(self.thetas[-1])

    @property
    def tolerance(self) -> float:
        return collision_tolerance(self.theta_max)

    def pattern(self, j: int) -> np.ndarray:
        """Spike block stored at sorted position ``j``."""
        return codeword(int(self.perm[j]), self.model)

    def patterns(self, positions) -> np.ndarray:
        return pattern_bits(self.perm[np.asarray(positions)], self.decimation).astype(float) * self.model.amplitude

    def counts(self) -> np.ndarray:
        """Number of spikes of the pattern at each sorted position."""
        return pattern_bits(self.perm, self.decimation).sum(axis=-1)

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.model == other.model
            and np.array_equal(self.thetas, other.thetas)
            and np.array_equal(self.perm, other.perm)
            and self.min_gap == other.min_gap
            and self.collision_free == other.collision_free
        )

    def __repr__(self):
        return (
            f"Codebook(alpha={self.model.alpha}, A={self.model.amplitude}, D={self.decimation}, "
            f"min_gap={self.min_gap:.3g}, collision_free={self.collision_free})"
        )


def _finish(model, thetas, perm) -> Codebook:
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    perm = np.ascontiguousarray(perm, dtype=np.uint64)
    thetas.setflags(write=False)
    perm.setflags(write=False)
    gap = float(np.min(np.diff(thetas)))
    free = gap > collision_tolerance(float(thetas[-1]))
    return Codebook(model, thetas, perm, gap, bool(free))


def build_codebook(model: ArModel, max_decimation: int = MAX_DECIMATION) -> Codebook:
    """Enumerate, scale and sort all ``2**D`` block values.

    Ties keep packed-index order and mark the codebook as not collision free.
    """
    if model.decimation > max_decimation:
        raise SizeError(
            f"D={model.decimation} exceeds the codebook guard {max_decimation} "
            f"({2 * 8 * 2**model.decimation} bytes)"
        )
    raw = unit_thetas(model.alpha, model.decimation) * model.amplitude
    perm = np.argsort(raw, kind="stable")
    return _finish(model, raw[perm], perm)


def is_collision_free(cb: Codebook) -> bool:
    return cb.collision_free


def min_gap(cb: Codebook) -> float:
    """Smallest distance between neighbouring codebook values."""
    if not cb.collision_free:
        raise DegenerateCodebookError(
            f"codebook for alpha={cb.model.alpha}, D={cb.decimation} has collisions"
        )
    return cb.min_gap


@dataclass(frozen=True)
class ClusterStats:
    """Per-count extrema of the codebook values.

    ``theta_min[k]``/``theta_max[k]`` bound the values of patterns with ``k``
    spikes.  ``cluster_min_gap`` is ``None`` unless the count groups occupy
    disjoint, ordered intervals.
    """

    theta_min: np.ndarray
    theta_max: np.ndarray
    clustered: bool
    cluster_min_gap: float | None


def count_extrema(model: ArModel):
    """Closed-form ``(theta_min, theta_max)`` per spike count ``k = 0..D``.

    The largest value for ``k`` spikes puts them in the last ``k`` slots, the
    smallest in the first ``k`` slots.
    """
    d, a, amp = model.decimation, model.alpha, model.amplitude
    partial = np.concatenate(([0.0], np.cumsum(a ** np.arange(d))))
    k = np.arange(d + 1)
    tmax = amp * partial
    tmin = amp * a ** (d - k) * partial
    return tmin, tmax


def cluster_stats(cb: Codebook) -> ClusterStats:
    tmin, tmax = count_extrema(cb.model)
    seps = tmin[1:] - tmax[:-1]
    clustered = bool(np.all(seps > cb.tolerance))
    gap = float(seps.min()) if clustered else None
    return ClusterStats(tmin, tmax, clustered, gap)


def in_F_D(alpha: float, decimation: int) -> bool:
    """Count-clustering predicate ``a**D - a**(D-k0-1) - a**k0 + 1 < 0``, ``k0 = D // 2``."""
    d = decimation
    k0 = d // 2
    return bool(alpha**d - alpha ** (d - k0 - 1) - alpha**k0 + 1 < 0)


def save_codebook(cb: Codebook, path) -> None:
    """Write the little-endian ``BSRC`` binary format."""
    m = cb.model
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, m.alpha, m.amplitude, m.decimation))
        fh.write(cb.thetas.astype("<f8").tobytes())
        fh.write(cb.perm.astype("<u8").tobytes())


def load_codebook(path, expect: ArModel | None = None, max_decimation: int = MAX_DECIMATION) -> Codebook:
    """Read a ``BSRC`` file.

    Raises :class:`FormatError` for a bad header, truncation or an invalid
    permutation, and :class:`ModelMismatchError` when ``expect`` is given and
    differs from the stored model.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("file too short for codebook header")
    magic, version, alpha, amp, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported codebook version {version}")
    if d < 1 or d > max_decimation:
        raise FormatError(f"decimation {d} outside [1, {max_decimation}]")
    n = 2**d
    if len(data) != _HEADER.size + 16 * n:
        raise FormatError(f"expected {_HEADER.size + 16 * n} bytes, got {len(data)}")
    try:
        model = ArModel(alpha, amp, d)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if expect is not None and expect != model:
        raise ModelMismatchError(f"file holds {model}, expected {expect}")
    off = _HEADER.size
    thetas = np.frombuffer(data, "<f8", n, off).astype(np.float64)
    perm = np.frombuffer(data, "<u8", n, off + 8 * n).astype(np.uint64)
    if np.any(np.diff(thetas) < 0):
        raise FormatError("codebook values are not sorted")
    if not np.array_equal(np.sort(perm), np.arange(n, dtype=np.uint64)):
        raise FormatError("codeword indices are not a permutation")
    return _finish(model, thetas, perm)
