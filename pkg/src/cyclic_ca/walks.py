"""Height-function encoding of 3-state configurations and the associated random walks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import BernoulliParams, Configuration
from .seeding import SeedSpec, categorical, hash_uniform


@dataclass(frozen=True, eq=False)
class Walk:
    """Integer path given by its value at time 0 and its increments."""

    start: int
    steps: np.ndarray

    def __post_init__(self):
        steps = np.array(self.steps, dtype=np.int64).ravel()
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "start", int(self.start))

    @classmethod
    def from_values(cls, values: Sequence[int]) -> "Walk":
        v = np.asarray(values, dtype=np.int64)
        return cls(int(v[0]), np.diff(v))

    @property
    def length(self) -> int:
        """Number of steps n (the walk has n + 1 positions)."""
        return self.steps.size

    @property
    def values(self) -> np.ndarray:
        out = np.empty(self.steps.size + 1, dtype=np.int64)
        out[0] = self.start
        np.cumsum(self.steps, out=out[1:])
        out[1:] += self.start
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Walk)
            and self.start == other.start
            and np.array_equal(self.steps, other.steps)
        )

    def __repr__(self):
        return f"Walk(values={self.values.tolist()})"


@dataclass(frozen=True)
class EmbeddedWalk:
    times: tuple
    values: tuple

    def __len__(self) -> int:
        return len(self.times)


def _steps3(prev_labels: np.ndarray, labels: np.ndarray) -> np.ndarray:
    # the unique d in {-1, 0, 1} with prev + d == label (mod 3)
    return (labels.astype(np.int64) - prev_labels.astype(np.int64) + 1) % 3 - 1


def encode_walk(config: Configuration, anchor: Optional[int] = None) -> Walk:
    """W[x] read rightward from ``anchor``: w_anchor = x_anchor, each value congruent to its cell."""
    if config.n != 3:
        raise ValueError("the height encoding is defined for 3 states")
    anchor = config.origin if anchor is None else anchor
    x = config.cells[anchor - config.origin :]
    if x.size == 0:
        raise ValueError(f"anchor {anchor} outside window")
    return Walk(int(x[0]), _steps3(x[:-1], x[1:]))


def decode_walk(walk: Walk, origin: int = 0) -> Configuration:
    return Configuration(walk.values % 3, 3, origin)


def encode_batch(words: np.ndarray) -> np.ndarray:
    """Walk values for each row of a batch of 3-state words."""
    w = np.asarray(words, dtype=np.int64)
    out = np.empty_like(w)
    out[:, 0] = w[:, 0]
    np.cumsum(_steps3(w[:, :-1], w[:, 1:]), axis=1, out=out[:, 1:])
    out[:, 1:] += w[:, :1]
    return out


def max_oracle(config: Configuration, n: int) -> int:
    """State of cell 0 after n one-sided steps, read off the walk: max(W[0..n]) mod 3."""
    if not config.covers(0, n):
        raise ValueError(f"window must cover indices 0..{n}")
    values = encode_walk(config, 0).values
    return int(values[: n + 1].max() % 3)


def walk_values_from_labels(k, labels: np.ndarray) -> np.ndarray:
    """Values of W_{k,n} driven by labels Z_1..Z_n (rows). ``k`` is scalar or one per row."""
    labels = np.atleast_2d(labels).astype(np.int64)
    rows, n = labels.shape
    k = np.broadcast_to(np.asarray(k, dtype=np.int64), (rows,))
    out = np.empty((rows, n + 1), dtype=np.int64)
    out[:, 0] = k
    if n:
        prev = np.empty_like(labels)
        prev[:, 0] = k % 3
        prev[:, 1:] = labels[:, :-1]
        np.cumsum(_steps3(prev, labels), axis=1, out=out[:, 1:])
        out[:, 1:] += k[:, None]
    return out


def sample_labels(params: BernoulliParams, keys, n: int) -> np.ndarray:
    """i.i.d. labels Z_1..Z_n per key; label t uses counter t."""
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    t = np.arange(1, n + 1, dtype=np.int64).reshape(1, -1)
    return categorical(hash_uniform(keys, t), params.as_float())


def sample_walk(params: BernoulliParams, k: int, n: int, seed: SeedSpec) -> Walk:
    """W_{k,n}: start at k, step t lands on the neighbour congruent to Z_t mod 3."""
    if params.n != 3:
        raise ValueError("walk sampling needs 3-state parameters")
    if n < 0:
        raise ValueError("n must be non-negative")
    values = walk_values_from_labels(k, sample_labels(params, [seed.key], n))[0]
    return Walk.from_values(values)


def records(walk: Walk) -> list[int]:
    v = walk.values
    return np.nonzero(v == np.maximum.accumulate(v))[0].tolist()


def h_tail(walk: Walk, h: int) -> Optional[int]:
    """Length n - t' of the suffix after the last record divisible by h, or None."""
    m = int(tail_lengths(walk.values[None], h)[0])
    return None if m < 0 else m


def tail_lengths(values: np.ndarray, h: int) -> np.ndarray:
    """Vectorized h-tail lengths per row; -1 where no record is divisible by h."""
    if h < 1:
        raise ValueError("h must be positive")
    v = np.atleast_2d(values)
    ok = (v == np.maximum.accumulate(v, axis=1)) & (v % h == 0)
    last_from_end = np.argmax(ok[:, ::-1], axis=1)
    return np.where(ok.any(axis=1), last_from_end, -1)


def embed(walk: Walk) -> EmbeddedWalk:
    """Greedy subsequence of visits to 3Z, keeping a visit only when its value changed."""
    v = walk.values
    times, vals = [], []
    for t in np.nonzero(v % 3 == 0)[0]:
        if not vals or v[t] != vals[-1]:
            times.append(int(t))
            vals.append(int(v[t]))
    return EmbeddedWalk(tuple(times), tuple(vals))


def embedded_vertices(values: np.ndarray) -> np.ndarray:
    """Boolean mask (rows x times) of embedded-walk vertices, vectorized over rows."""
    v = np.atleast_2d(values)
    zero = v % 3 == 0
    idx = np.where(zero, np.arange(v.shape[1]), -1)
    last = np.maximum.accumulate(idx, axis=1)
    prev = np.full_like(last, -1)
    prev[:, 1:] = last[:, :-1]
    rows = np.arange(v.shape[0])[:, None]
    prev_val = v[rows, np.maximum(prev, 0)]
    return zero & ((prev < 0) | (prev_val != v))


def embedded_steps(values: np.ndarray):
    """Per-row embedded lengths J and the flat embedded step signs (+1/-1) with row ids."""
    v = np.atleast_2d(values)
    mask = embedded_vertices(v)
    lengths = mask.sum(axis=1)
    r, c = np.nonzero(mask)
    vals = v[r, c]
    same_row = r[1:] == r[:-1]
    signs = np.sign(vals[1:] - vals[:-1])[same_row]
    return lengths, signs.astype(np.int8), r[1:][same_row]


def _realizes_embedded_step(labels: np.ndarray) -> int:
    """+1 / -1 if the labels (after a vertex at 0) first reach +3 / -3 exactly at the end, else 0."""
    v = walk_values_from_labels(0, labels[None])[0][1:]
    hit = np.nonzero((v % 3 == 0) & (v != 0))[0]
    if hit.size and hit[0] == v.size - 1:
        return int(np.sign(v[-1]))
    return 0


def flip_tail(step_labels: Sequence[int]) -> tuple:
    """The involution exchanging +3 and -3 embedded steps.

    The labels after the last 0 (excluding the final label) are mirrored;
    everything else is kept.
    """
    z = np.asarray(step_labels, dtype=np.int64)
    if z.size == 0 or _realizes_embedded_step(z) == 0:
        raise ValueError("labels do not realize a single embedded step from a vertex")
    zeros = np.nonzero(z[:-1] == 0)[0]
    s = zeros[-1] + 1 if zeros.size else 0
    out = z.copy()
    out[s:-1] = z[s:-1][::-1]
    return tuple(int(a) for a in out)


def check_walk_oracle(max_len: int, max_steps: Optional[int] = None) -> dict:
    """Compare max(W[0..t]) mod 3 with t one-sided steps on every word of length k + 1, k <= max_len.

    Returns counts of (word, t) cases checked and failed, with t <= min(k, max_steps).
    """
    from .automata import OneSidedCyclic3, column_trajectory_batch

    max_steps = max_len if max_steps is None else max_steps
    checked = failed = 0
    for k in range(max_len + 1):
        steps = min(k, max_steps)
        words = np.indices((3,) * (k + 1), dtype=np.int8).reshape(k + 1, -1).T
        ca = column_trajectory_batch(OneSidedCyclic3(), words[:, : steps + 1], steps)
        oracle = np.maximum.accumulate(encode_batch(words[:, : steps + 1]), axis=1) % 3
        checked += ca.size
        failed += int((ca != oracle).sum())
    return {"max_len": max_len, "max_steps": max_steps, "checked": checked, "failed": failed}
