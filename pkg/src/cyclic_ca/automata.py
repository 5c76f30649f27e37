"""Cellular-automaton stepping on exact light-cone windows.

All batch routines take a 2-D int8 array whose rows are independent windows
and return the image windows, which are narrower by the rule's radius on each
consulted side. Nothing wraps around unless ``periodic=True`` is asked for.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import Configuration
from .seeding import SeedSpec, hash_uniform
from .tournaments import Tournament, bundled


@dataclass(frozen=True)
class Cyclic:
    n: int = 3
    left: int = field(default=1, init=False)
    right: int = field(default=1, init=False)
    probabilistic: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("cyclic automata need n >= 3")

    def describe(self) -> str:
        return f"cyclic{self.n}"


@dataclass(frozen=True)
class OneSidedCyclic3:
    n: int = field(default=3, init=False)
    left: int = field(default=0, init=False)
    right: int = field(default=1, init=False)
    probabilistic: bool = field(default=False, init=False)

    def describe(self) -> str:
        return "cyclic3+"


@dataclass(frozen=True)
class ProbabilisticCyclic:
    """Cyclic rule where an eligible invasion happens with probability ``q``."""

    n: int = 3
    q: float = 0.5
    left: int = field(default=1, init=False)
    right: int = field(default=1, init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("cyclic automata need n >= 3")
        if not 0 < self.q <= 1:
            raise ValueError("invasion rate must lie in (0, 1]")

    @property
    def probabilistic(self) -> bool:
        return self.q < 1

    def describe(self) -> str:
        return f"prob{self.n}:{self.q:g}"


@dataclass(frozen=True)
class TournamentRule:
    """Replace a cell by a neighbour that predates it.

    Two-sided ties: equal predators agree; distinct predators are resolved in
    favour of the one that eats the other.
    """

    tournament: Tournament
    sided: str = "two_sided"
    name: str = ""
    probabilistic: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.sided not in ("one_sided", "two_sided"):
            raise ValueError("sided must be 'one_sided' or 'two_sided'")

    @property
    def n(self) -> int:
        return self.tournament.n

    @property
    def left(self) -> int:
        return 1 if self.sided == "two_sided" else 0

    @property
    def right(self) -> int:
        return 1

    def describe(self) -> str:
        tag = self.name or "custom"
        return f"tournament{'+' if self.sided == 'one_sided' else ''}:{tag}"


RuleSpec = Union[Cyclic, OneSidedCyclic3, ProbabilisticCyclic, TournamentRule]


def parse_rule(text: str) -> RuleSpec:
    """``cyclic3``, ``cyclic4``, ``cyclic3+``, ``prob3:0.5``, ``tournament:<file|g1|g2>``, ``tournament+:...``."""
    t = text.strip().lower() if not text.startswith("tournament") else text.strip()
    if t == "cyclic3+":
        return OneSidedCyclic3()
    if t.startswith("cyclic"):
        return Cyclic(int(t[len("cyclic"):]))
    if t.startswith("prob"):
        head, q = t[len("prob"):].split(":")
        return ProbabilisticCyclic(int(head), float(q))
    if t.startswith("tournament"):
        head, src = t.split(":", 1)
        sided = "one_sided" if head.endswith("+") else "two_sided"
        if src.lower() in ("g1", "g2"):
            return TournamentRule(bundled(src), sided, src.lower())
        name = os.path.splitext(os.path.basename(src))[0]
        return TournamentRule(Tournament.load(src), sided, name)
    raise ValueError(f"unknown rule {text!r}")


def _draw_counter(t, sites):
    # configuration cells use counters |i| < 2**31; invasion draws live above them
    return (np.int64(t) + 1) * (1 << 32) + sites


def step_uniforms(key, t: int, lo: int, hi: int) -> np.ndarray:
    """Invasion draws for output sites lo..hi-1 at step t; keyed by absolute site."""
    keys = np.asarray(key, dtype=np.uint64).reshape(-1, 1)
    sites = np.arange(lo, hi, dtype=np.int64).reshape(1, -1)
    return hash_uniform(keys, _draw_counter(t, sites))


class LazyDraws:
    """Invasion draws for one step, hashed only at the cells that ask for them."""

    def __init__(self, keys, t: int, lo: int):
        self.keys = np.asarray(keys, dtype=np.uint64).ravel()
        self.t, self.lo = t, lo

    def at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return hash_uniform(self.keys[rows], _draw_counter(self.t, self.lo + cols.astype(np.int64)))


def _local(rule, left, c, right, u=None):
    if isinstance(rule, (Cyclic, ProbabilisticCyclic)):
        s = (c + 1) % rule.n
        hit = right == s
        if left is not None:
            hit |= left == s
        if isinstance(rule, ProbabilisticCyclic) and rule.q < 1:
            if isinstance(u, LazyDraws):
                r, col = np.nonzero(hit)
                hit[r, col] = u.at(r, col) < rule.q
            else:
                hit &= u < rule.q
        return np.where(hit, s, c).astype(np.int8)
    if isinstance(rule, OneSidedCyclic3):
        s = (c + 1) % 3
        return np.where(right == s, s, c).astype(np.int8)
    if isinstance(rule, TournamentRule):
        P = rule.tournament.predates
        ci, ri = c.astype(np.intp), right.astype(np.intp)
        pr = P[ri, ci]
        if left is None:
            return np.where(pr, right, c).astype(np.int8)
        li = left.astype(np.intp)
        pl = P[li, ci]
        both = pl & pr
        winner = np.where(P[li, ri] | (li == ri), left, right)
        out = np.where(pl, left, np.where(pr, right, c))
        return np.where(both, winner, out).astype(np.int8)
    raise TypeError(f"unsupported rule {rule!r}")


def step_batch(rule: RuleSpec, rows: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
    """One synchronous step on each row; the output loses ``rule.left`` / ``rule.right`` cells."""
    rows = np.atleast_2d(rows)
    L = rows.shape[1]
    if L < rule.left + rule.right + 1:
        raise ValueError(f"window of {L} cells too small for one step of {rule.describe()}")
    c = rows[:, rule.left : L - rule.right]
    right = rows[:, rule.left + 1 : L - rule.right + 1]
    left = rows[:, : L - rule.right - rule.left] if rule.left else None
    if rule.probabilistic and u is None:
        raise ValueError("probabilistic rule needs random draws")
    return _local(rule, left, c, right, u)


def step_periodic(rule: RuleSpec, rows: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
    rows = np.atleast_2d(rows)
    right = np.roll(rows, -1, axis=1)
    left = np.roll(rows, 1, axis=1) if rule.left else None
    return _local(rule, left, rows, right, u)


def _check_seed(rule, seed):
    if rule.probabilistic and seed is None:
        raise ValueError(f"{rule.describe()} is probabilistic and needs a seed")


def step(rule: RuleSpec, config: Configuration, seed: Optional[SeedSpec] = None, t: int = 0) -> Configuration:
    """Image of ``config`` on its shrunken window. ``t`` indexes the step for random draws."""
    _check_seed(rule, seed)
    if config.n != rule.n:
        raise ValueError(f"configuration over {config.n} states, rule over {rule.n}")
    if len(config) < 2:
        raise ValueError("need at least two cells")
    lo, hi = config.origin + rule.left, config.end - rule.right
    u = step_uniforms(seed.key, t, lo, hi) if rule.probabilistic else None
    out = step_batch(rule, config.cells[None], u)[0]
    return Configuration(out, rule.n, lo)


def iterate(rule: RuleSpec, config: Configuration, t: int, seed: Optional[SeedSpec] = None) -> Configuration:
    for s in range(t):
        config = step(rule, config, seed, s)
    return config


def light_cone(rule: RuleSpec, site: int, t: int) -> tuple[int, int]:
    """Initial interval (inclusive) that determines F^t(x)_site."""
    return site - rule.left * t, site + rule.right * t


def iterate_column(
    rule: RuleSpec, initial: Configuration, t: int, site: int, seed: Optional[SeedSpec] = None
) -> int:
    """F^t(x)_site, exact for the infinite lattice as long as the light cone fits in the window."""
    if t < 0:
        raise ValueError("t must be non-negative")
    lo, hi = light_cone(rule, site, t)
    if not initial.covers(lo, hi):
        raise ValueError(f"window [{initial.origin}, {initial.end - 1}] misses light cone [{lo}, {hi}]")
    _check_seed(rule, seed)
    return iterate(rule, initial.restrict(lo, hi), t, seed)[site]


@dataclass(frozen=True)
class SpaceTimeDiagram:
    rows: tuple
    approximate: bool = False

    def as_array(self, width: Optional[int] = None) -> np.ndarray:
        """Rectangular array (time x space) cropped to the centred common width."""
        width = width or min(len(r) for r in self.rows)
        out = []
        for r in self.rows:
            off = (len(r) - width) // 2
            out.append(r.cells[off : off + width])
        return np.stack(out)


def space_time(
    rule: RuleSpec,
    config: Configuration,
    steps: int,
    seed: Optional[SeedSpec] = None,
    periodic: bool = False,
) -> SpaceTimeDiagram:
    """Rows F^0(x), ..., F^steps(x). Periodic mode keeps the width but is only approximate."""
    _check_seed(rule, seed)
    rows = [config]
    cur = config
    for s in range(steps):
        if periodic:
            u = step_uniforms(seed.key, s, cur.origin, cur.end) if rule.probabilistic else None
            cur = Configuration(step_periodic(rule, cur.cells[None], u)[0], rule.n, cur.origin)
        else:
            cur = step(rule, cur, seed, s)
        rows.append(cur)
    return SpaceTimeDiagram(tuple(rows), approximate=periodic)


def column_trajectory_batch(
    rule: RuleSpec, rows: np.ndarray, steps: int, keys=None, origin: Optional[int] = None
) -> np.ndarray:
    """States of the cell at the light-cone apex for t = 0..steps, one row per sample.

    ``rows`` must be exactly the light cone of (site, steps): width
    (left + right) * steps + 1, the tracked site sitting at column left * steps.
    ``origin`` is the absolute index of column 0, needed for random draws.
    """
    rows = np.atleast_2d(rows)
    width = (rule.left + rule.right) * steps + 1
    if rows.shape[1] != width:
        raise ValueError(f"expected light-cone width {width}, got {rows.shape[1]}")
    if rule.probabilistic and keys is None:
        raise ValueError("probabilistic rule needs per-sample keys")
    origin = -rule.left * steps if origin is None else origin
    out = np.empty((rows.shape[0], steps + 1), dtype=np.int8)
    cur = rows
    for t in range(steps + 1):
        out[:, t] = cur[:, rule.left * (steps - t)]
        if t == steps:
            break
        u = LazyDraws(keys, t, origin + rule.left * (t + 1)) if rule.probabilistic else None
        cur = step_batch(rule, cur, u)
    return out


def verify_c3_decomposition(words=None) -> bool:
    """Check C_3(x)_0 == (C_{3+}^2 o shift)(x)_0 on length-3 words (all 27 by default)."""
    return all(c3_decomposition_table(words).values())


def c3_decomposition_table(words=None) -> dict:
    if words is None:
        words = [(a, b, c) for a in range(3) for b in range(3) for c in range(3)]
    out = {}
    for w in words:
        x = Configuration(w, 3, -1)  # cells x_{-1}, x_0, x_1
        lhs = iterate_column(Cyclic(3), x, 1, 0)
        y = Configuration(w, 3, 0)  # shifted: y_i = x_{i-1}
        rhs = iterate_column(OneSidedCyclic3(), y, 2, 0)
        out[tuple(w)] = lhs == rhs
    return out


def particle_census(config: Configuration) -> dict:
    """Counts and densities of positive (b = a+1), negative (b = a-1) and neutral particles."""
    if len(config) < 2:
        raise ValueError("need at least two cells")
    a = config.cells[:-1].astype(np.int64)
    b = config.cells[1:].astype(np.int64)
    diff = (b - a) % config.n
    pos = int((diff == 1).sum())
    neg = int((diff == config.n - 1).sum())
    neutral = int(((diff != 0) & (diff != 1) & (diff != config.n - 1)).sum())
    pairs = len(config) - 1
    return {
        "positive": pos,
        "negative": neg,
        "neutral": neutral,
        "density_positive": pos / pairs,
        "density_negative": neg / pairs,
        "density_neutral": neutral / pairs,
    }


def particle_density_batch(rows: np.ndarray, n: int) -> np.ndarray:
    """Fraction of adjacent unequal pairs per row (all particles)."""
    rows = np.atleast_2d(rows)
    return (rows[:, 1:] != rows[:, :-1]).mean(axis=1)


def count_state_changes(
    rule: RuleSpec, initial: Configuration, site: int, t_max: int, seed: Optional[SeedSpec] = None
) -> int:
    lo, hi = light_cone(rule, site, t_max)
    if not initial.covers(lo, hi):
        raise ValueError(f"window misses light cone [{lo}, {hi}]")
    _check_seed(rule, seed)
    keys = None if seed is None else [seed.key]
    traj = column_trajectory_batch(rule, initial.restrict(lo, hi).cells[None], t_max, keys, lo)[0]
    return int((traj[1:] != traj[:-1]).sum())
