"""Counter-based randomness.

Every random draw in the package is a pure function of a 64-bit key and a
64-bit counter, so Monte Carlo results do not depend on how samples are split
across workers or in which order they are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(x):
    """splitmix64 finalizer applied elementwise to a uint64 array (wrapping)."""
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == np.uint64:
        return arr
    # negative indices wrap modulo 2**64
    return arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)


def derive_key(master_seed: int, stream_index: int) -> int:
    a = mix64(np.uint64(master_seed & _MASK64))
    b = mix64(np.uint64(stream_index & _MASK64) ^ a)
    return int(mix64(b ^ np.uint64(0x5851F42D4C957F2D)))


def derive_keys(master_seed: int, stream_indices) -> np.ndarray:
    """Vectorized :func:`derive_key` over an array of stream indices."""
    a = mix64(np.uint64(master_seed & _MASK64))
    b = mix64(_as_u64(stream_indices) ^ a)
    return mix64(b ^ np.uint64(0x5851F42D4C957F2D))


def hash_uniform(keys, counters) -> np.ndarray:
    """Uniform doubles in [0, 1) from broadcast (key, counter) pairs."""
    k = _as_u64(keys)
    c = mix64(_as_u64(counters))
    h = mix64(k ^ c)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def categorical(u: np.ndarray, p) -> np.ndarray:
    """Map uniforms to states 0..n-1 with probabilities p (inverse CDF)."""
    cdf = np.cumsum(np.asarray(p, dtype=float))[:-1]
    return np.searchsorted(cdf, u, side="right").astype(np.int8)


@dataclass(frozen=True)
class SeedSpec:
    """A (master seed, stream index) pair naming one independent random stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    @property
    def key(self) -> int:
        return derive_key(int(self.master_seed), int(self.stream_index))

    def child(self, index: int) -> "SeedSpec":
        """An independent sub-stream, e.g. for the per-step draws of a probabilistic rule."""
        return SeedSpec(self.key, index & _MASK64)

    def uniforms(self, counters) -> np.ndarray:
        return hash_uniform(np.uint64(self.key), counters)
