"""Alphabets, finite configuration windows, Bernoulli parameters and word statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .seeding import SeedSpec, categorical, hash_uniform

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    n: int

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError(f"alphabet needs at least 2 states, got {self.n}")


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite window ``x[origin], ..., x[origin + len - 1]`` of a configuration over Z/nZ."""

    cells: np.ndarray
    n: int = 3
    origin: int = 0

    def __post_init__(self):
        Alphabet(self.n)
        cells = np.array(self.cells, dtype=np.int64).ravel()
        if cells.size == 0:
            raise ValueError("a configuration window has at least one cell")
        if cells.min() < 0 or cells.max() >= self.n:
            raise ValueError(f"cell values must lie in 0..{self.n - 1}")
        cells = cells.astype(np.int8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.n)

    def __len__(self) -> int:
        return self.cells.size

    @property
    def end(self) -> int:
        """One past the last index of the window."""
        return self.origin + self.cells.size

    def covers(self, lo: int, hi: int) -> bool:
        """True if indices lo..hi (inclusive) all lie in the window."""
        return self.origin <= lo and hi < self.end

    def __getitem__(self, index: int) -> int:
        if not self.origin <= index < self.end:
            raise IndexError(f"index {index} outside window [{self.origin}, {self.end})")
        return int(self.cells[index - self.origin])

    def restrict(self, lo: int, hi: int) -> "Configuration":
        if not self.covers(lo, hi):
            raise ValueError(f"[{lo}, {hi}] is not inside the window")
        return Configuration(self.cells[lo - self.origin : hi - self.origin + 1], self.n, lo)

    def tolist(self) -> list[int]:
        return [int(c) for c in self.cells]

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.n == other.n
            and self.origin == other.origin
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self):
        return hash((self.n, self.origin, self.cells.tobytes()))

    def __repr__(self):
        body = ",".join(str(c) for c in self.cells[:40])
        more = "..." if len(self) > 40 else ""
        return f"Configuration(n={self.n}, origin={self.origin}, cells=[{body}{more}])"


@dataclass(frozen=True)
class BernoulliParams:
    """Per-state probabilities of an i.i.d. product measure.

    Entries may be floats or :class:`fractions.Fraction`; with fractions every
    exact routine in the package stays in rational arithmetic.
    """

    p: tuple = field()

    def __post_init__(self):
        p = tuple(self.p)
        if len(p) < 2:
            raise ValueError("need at least two states")
        if any(not v > 0 for v in p):
            raise ValueError(f"all parameters must be strictly positive, got {p}")
        total = sum(p)
        if abs(total - 1) > PROB_TOL:
            raise ValueError(f"parameters must sum to 1, got sum {float(total)!r}")
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.p)

    def __getitem__(self, i: int):
        return self.p[i % self.n]

    def __iter__(self):
        return iter(self.p)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.p)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.p])

    def rotated(self, shift: int) -> "BernoulliParams":
        """Parameters with p'_i = p_{i + shift}."""
        return BernoulliParams(tuple(self.p[(i + shift) % self.n] for i in range(self.n)))

    def prey_target(self) -> tuple:
        """The permuted vector (p_{n-1}, p_0, ..., p_{n-2}): each state gets its prey's weight."""
        return self.rotated(-1).p

    @classmethod
    def uniform(cls, n: int, exact: bool = False) -> "BernoulliParams":
        return cls(tuple(Fraction(1, n) if exact else 1.0 / n for _ in range(n)))

    @classmethod
    def parse(cls, text: str, exact: bool = False) -> "BernoulliParams":
        """Parse ``"0.1,0.3,0.6"`` or ``"1/3,1/3,1/3"``; ``exact=True`` keeps Fractions."""
        parts = [Fraction(s.strip()) for s in text.split(",") if s.strip()]
        return cls(tuple(parts if exact else (float(v) for v in parts)))


def sample_cells(params: BernoulliParams, keys, lo: int, hi: int) -> np.ndarray:
    """Batch of i.i.d. windows over absolute indices lo..hi-1, one row per key.

    The cell at absolute index i depends only on (key, i), so nested windows
    drawn with the same key agree on their overlap.
    """
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    idx = np.arange(lo, hi, dtype=np.int64).reshape(1, -1)
    return categorical(hash_uniform(keys, idx), params.as_float())


def sample_configuration(
    params: BernoulliParams, length: int, origin: int, seed: SeedSpec
) -> Configuration:
    if not isinstance(params, BernoulliParams):
        params = BernoulliParams(tuple(params))
    if length < 1:
        raise ValueError("length must be positive")
    cells = sample_cells(params, [seed.key], origin, origin + length)[0]
    return Configuration(cells, params.n, origin)


def word_frequency(config: Configuration, word: Sequence[int]) -> Fraction:
    """Fraction of window positions at which ``word`` occurs (overlapping occurrences count)."""
    w = np.asarray(word, dtype=np.int64)
    L, k = len(config), w.size
    if k == 0:
        raise ValueError("empty word")
    if k > L:
        raise ValueError(f"word of length {k} longer than configuration of length {L}")
    cells = config.cells.astype(np.int64)
    hits = np.ones(L - k + 1, dtype=bool)
    for j in range(k):
        hits &= cells[j : L - k + 1 + j] == w[j]
    return Fraction(int(hits.sum()), L - k + 1)


def format_configuration(config: Configuration) -> str:
    """Text form: an ``origin=<k>`` header line (omitted when 0) then comma-separated states."""
    body = ",".join(str(int(c)) for c in config.cells)
    if config.origin:
        return f"origin={config.origin}\n{body}\n"
    return body + "\n"


def parse_configuration(text: str, n: int = 3) -> Configuration:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    origin = 0
    if lines and lines[0].startswith("origin="):
        origin = int(lines[0].split("=", 1)[1])
        lines = lines[1:]
    if len(lines) != 1:
        raise ValueError("expected exactly one line of comma-separated states")
    cells = [int(s) for s in lines[0].split(",") if s.strip()]
    return Configuration(cells, n, origin)
