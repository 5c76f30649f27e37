"""Prey/predator tournaments and the max-path-preserving property."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from importlib import resources
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .core import Configuration
from .walks import Walk


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True, eq=False)
class Tournament:
    """Complete orientation on states 0..n-1; ``predates[i, j]`` means i eats j."""

    predates: np.ndarray

    def __post_init__(self):
        m = np.array(self.predates, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError("predation matrix must be square with n >= 2")
        if m.diagonal().any():
            raise ValueError("a state cannot predate itself")
        off = ~np.eye(m.shape[0], dtype=bool)
        if not np.array_equal(m[off], ~m.T[off]):
            raise ValueError("not a tournament: every pair needs exactly one orientation")
        m.setflags(write=False)
        object.__setattr__(self, "predates", m)

    @property
    def n(self) -> int:
        return self.predates.shape[0]

    def __eq__(self, other):
        return isinstance(other, Tournament) and np.array_equal(self.predates, other.predates)

    def __hash__(self):
        return hash(self.predates.tobytes())

    def __repr__(self):
        return f"Tournament(n={self.n}, edges={self.edges()})"

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.predates))]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Tournament":
        m = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge {i} -> {j} outside 0..{n - 1}")
            if m[j, i] or m[i, j]:
                raise ValueError(f"pair ({i}, {j}) oriented twice")
            m[i, j] = True
        return cls(m)

    @classmethod
    def from_bitmask(cls, n: int, mask: int) -> "Tournament":
        """Bit b set means i -> j for the b-th pair (i < j) in lexicographic order."""
        m = np.zeros((n, n), dtype=bool)
        for b, (i, j) in enumerate(_pairs(n)):
            if mask >> b & 1:
                m[i, j] = True
            else:
                m[j, i] = True
        return cls(m)

    def bitmask(self) -> int:
        return sum(1 << b for b, (i, j) in enumerate(_pairs(self.n)) if self.predates[i, j])

    def reversed(self) -> "Tournament":
        return Tournament(self.predates.T.copy())

    def relabel(self, perm: Sequence[int]) -> "Tournament":
        """Tournament in which state perm[i] plays the role of state i."""
        perm = np.asarray(perm)
        m = np.zeros_like(self.predates)
        m[np.ix_(perm, perm)] = self.predates
        return Tournament(m)

    def to_edge_list(self) -> str:
        return "".join(f"{i} -> {j}\n" for i, j in self.edges())

    @classmethod
    def parse_edge_list(cls, text: str, n: int | None = None) -> "Tournament":
        edges = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                a, b = line.split("->")
                edges.append((int(a), int(b)))
            except ValueError:
                raise ValueError(f"bad edge line {raw!r}; expected 'i -> j'") from None
        if n is None:
            n = 1 + max(max(e) for e in edges)
        return cls.from_edges(n, edges)

    @classmethod
    def load(cls, path) -> "Tournament":
        with open(path) as fh:
            return cls.parse_edge_list(fh.read())

    @classmethod
    def cyclic(cls, n: int) -> "Tournament":
        """Standard cyclic dominance: i+1 eats i."""
        if n != 3:
            raise ValueError("only n = 3 gives a cyclic tournament; use k_predator for 2k+1")
        return cls.k_predator(1)

    @classmethod
    def k_predator(cls, k: int) -> "Tournament":
        """2k+1 states where i is eaten by i+1, ..., i+k (mod 2k+1)."""
        n = 2 * k + 1
        m = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for d in range(1, k + 1):
                m[(i + d) % n, i] = True
        return cls(m)


def bundled(name: str) -> Tournament:
    """The graphs shipped with the package: ``"g1"`` (4 states) and ``"g2"`` (5 states)."""
    text = resources.files("cyclic_ca").joinpath(f"data/{name.lower()}.txt").read_text()
    return Tournament.parse_edge_list(text)


def cyclic_before(a: int, b: int, c: int, n: int) -> bool:
    """True if counting up from a (mod n) reaches b before c."""
    if len({a % n, b % n, c % n}) != 3:
        raise ValueError("cyclic_before needs three distinct states")
    return (b - a) % n < (c - a) % n


def _ordered_triples(n: int) -> np.ndarray:
    return np.array(
        [t for t in itertools.permutations(range(n), 3) if cyclic_before(*t, n)], dtype=np.intp
    ).reshape(-1, 3)


def _mpp_batch(mats: np.ndarray) -> np.ndarray:
    """Vectorized max-path-preserving test over a stack of predation matrices."""
    n = mats.shape[-1]
    tr = _ordered_triples(n)
    if tr.size == 0:
        return np.ones(mats.shape[0], dtype=bool)
    a, b, c = tr.T
    bad = mats[:, a, c] & mats[:, b, c] & ~mats[:, b, a]
    return ~bad.any(axis=1)


def is_max_path_preserving(t: Tournament) -> bool:
    """For all cyclically ordered a < b < c: (a -> c and b -> c) implies b -> a."""
    return bool(_mpp_batch(t.predates[None])[0])


class FamilyLabel(enum.Enum):
    TOTAL_ORDER = "total_order"
    FAMILY2 = "family2"
    FAMILY3 = "family3"
    NOT_MPP = "not_mpp"


def has_standard_cycle(t: Tournament) -> bool:
    """Whether 0 -> n-1 -> n-2 -> ... -> 1 -> 0 is a directed cycle of t."""
    m = t.predates
    return bool(m[0, t.n - 1] and all(m[k + 1, k] for k in range(t.n - 1)))


def is_transitive(t: Tournament) -> bool:
    return sorted(t.predates.sum(axis=1).tolist()) == list(range(t.n))


def classify(t: Tournament) -> FamilyLabel:
    if not is_max_path_preserving(t):
        return FamilyLabel.NOT_MPP
    if is_transitive(t):
        return FamilyLabel.TOTAL_ORDER
    if has_standard_cycle(t):
        return FamilyLabel.FAMILY2
    return FamilyLabel.FAMILY3


def eulerian_count(n: int) -> int:
    """e_n = sum over k >= 1 of C(n, 2k+1)."""
    return sum(comb(n, 2 * k + 1) for k in range(1, (n - 1) // 2 + 1))


def _all_matrices(n: int) -> np.ndarray:
    pairs = _pairs(n)
    masks = np.arange(1 << len(pairs), dtype=np.int64)
    mats = np.zeros((masks.size, n, n), dtype=bool)
    for b, (i, j) in enumerate(pairs):
        bit = (masks >> b & 1).astype(bool)
        mats[:, i, j] = bit
        mats[:, j, i] = ~bit
    return mats


def enumerate_mpp(n: int) -> dict:
    """Brute-force census of all 2^(n(n-1)/2) tournaments on n states, 3 <= n <= 6."""
    if not 3 <= n <= 6:
        raise ValueError("enumeration supported for 3 <= n <= 6")
    mats = _all_matrices(n)
    ok = _mpp_batch(mats)
    counts = {label: 0 for label in FamilyLabel}
    members: dict[str, list[int]] = {label.value: [] for label in FamilyLabel if label is not FamilyLabel.NOT_MPP}
    for mask in np.nonzero(ok)[0]:
        t = Tournament(mats[mask])
        label = classify(t)
        counts[label] += 1
        members[label.value].append(int(mask))
    counts[FamilyLabel.NOT_MPP] = int((~ok).sum())
    return {
        "n": n,
        "total": int(mats.shape[0]),
        "total_orders": counts[FamilyLabel.TOTAL_ORDER],
        "family2": counts[FamilyLabel.FAMILY2],
        "family3": counts[FamilyLabel.FAMILY3],
        "not_mpp": counts[FamilyLabel.NOT_MPP],
        "eulerian": eulerian_count(n),
        "members": sorted(int(m) for m in np.nonzero(ok)[0]),
        "members_by_family": members,
    }


def _cyclic_range(a: int, b: int, n: int) -> list[int]:
    """States a, a+1, ..., b-1 (mod n)."""
    out, x = [], a % n
    while x != b % n:
        out.append(x)
        x = (x + 1) % n
    return out


def generate_conjectural(n: int, cut_vertices: Sequence[int]) -> Tournament:
    """Build the orientation attached to an odd set of cut vertices c_0 < ... < c_{2k}.

    A state j in the block [c_i, c_{i+1}[ eats every state of [c_{i-k}, j[
    (cyclic intervals in increasing label order) and is eaten by the rest.
    """
    cuts = sorted(int(c) for c in cut_vertices)
    m = len(cuts)
    if m < 3 or m % 2 == 0:
        raise ValueError("need an odd number (>= 3) of cut vertices")
    if len(set(cuts)) != m or cuts[0] < 0 or cuts[-1] >= n:
        raise ValueError(f"cut vertices must be distinct states in 0..{n - 1}")
    k = (m - 1) // 2
    mat = np.zeros((n, n), dtype=bool)
    for i in range(m):
        lo = cuts[(i - k) % m]
        for j in _cyclic_range(cuts[i], cuts[(i + 1) % m], n):
            for prey in _cyclic_range(lo, j, n):
                mat[j, prey] = True
    return Tournament(mat)


def all_conjectural(n: int) -> list[Tournament]:
    return [
        generate_conjectural(n, cuts)
        for size in range(3, n + 1, 2)
        for cuts in itertools.combinations(range(n), size)
    ]


def generalized_walk(t: Tournament, config: Configuration, check: bool = True) -> Walk:
    """Height function of ``config`` under the prey/predator relation ``t``.

    Equal neighbours give a flat step; moving onto a predator climbs to the
    nearest higher value congruent to it mod n, moving onto a prey descends.
    """
    if check and not is_max_path_preserving(t):
        raise ValueError("generalized walk is only defined for max-path-preserving tournaments")
    if config.n != t.n:
        raise ValueError(f"configuration over {config.n} states, tournament over {t.n}")
    x = config.cells.astype(np.int64)
    a, b = x[:-1], x[1:]
    up = t.predates[b, a]
    down = t.predates[a, b]
    steps = np.where(up, (b - a) % t.n, 0) - np.where(down, (a - b) % t.n, 0)
    return Walk(int(x[0]), steps)


def generalized_walk_batch(t: Tournament, words: np.ndarray) -> np.ndarray:
    """Walk values (rows) for a batch of words (rows), each starting at its first letter."""
    x = words.astype(np.int64)
    a, b = x[:, :-1], x[:, 1:]
    up = t.predates[b, a]
    down = t.predates[a, b]
    steps = np.where(up, (b - a) % t.n, 0) - np.where(down, (a - b) % t.n, 0)
    out = np.empty_like(x)
    out[:, 0] = x[:, 0]
    np.cumsum(steps, axis=1, out=out[:, 1:])
    out[:, 1:] += x[:, :1]
    return out


def all_words(n: int, length: int) -> np.ndarray:
    """All n**length words as rows, in lexicographic order."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int8)
    grids = np.indices((n,) * length, dtype=np.int8)
    return grids.reshape(length, -1).T.copy()


def check_generalized_oracle(t: Tournament, max_len: int, max_steps: int, keep: int = 20) -> dict:
    """Compare (max of the generalized walk) mod n with the one-sided tournament CA.

    Exhaustive over all words of length L <= max_len and iteration counts
    s <= min(max_steps, L - 1). An experiment: disagreements are reported, not raised.
    """
    from .automata import TournamentRule, step_batch

    rule = TournamentRule(t, "one_sided")
    checked = agree = 0
    examples = []
    for L in range(1, max_len + 1):
        words = all_words(t.n, L)
        walk = generalized_walk_batch(t, words)
        runmax = np.maximum.accumulate(walk, axis=1)
        rows = words
        for s in range(0, min(max_steps, L - 1) + 1):
            if s > 0:
                rows = step_batch(rule, rows)
            ca = rows[:, 0].astype(np.int64)
            oracle = runmax[:, s] % t.n
            ok = ca == oracle
            checked += ok.size
            agree += int(ok.sum())
            for r in np.nonzero(~ok)[0][: max(0, keep - len(examples))]:
                examples.append(
                    {"word": words[r].tolist(), "steps": s, "ca": int(ca[r]), "walk": int(oracle[r])}
                )
    return {
        "n": t.n,
        "edges": t.edges(),
        "checked": checked,
        "agree": agree,
        "disagree": checked - agree,
        "counterexamples": examples,
    }
