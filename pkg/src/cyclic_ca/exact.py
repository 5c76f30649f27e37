"""Exact dynamic programs and counting for the 3-state height walk.

Every DP here works on float arrays for speed, or on object arrays of
``Fraction`` when the parameters are exact, in which case results are exact
rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import BernoulliParams
from .seeding import SeedSpec
from .walks import sample_labels, tail_lengths, walk_values_from_labels
from .seeding import derive_keys


def _check3(params: BernoulliParams) -> BernoulliParams:
    if not isinstance(params, BernoulliParams):
        params = BernoulliParams(tuple(params))
    if params.n != 3:
        raise ValueError("the height walk needs 3-state parameters")
    return params


def _dtype(params: BernoulliParams):
    return object if params.is_exact else np.float64


def _zeros(shape, params):
    if params.is_exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def _move_probs(params: BernoulliParams, residues: np.ndarray):
    """(up, stay, down) probabilities from positions with the given residues mod 3."""
    p = np.array(list(params.p), dtype=_dtype(params))
    return p[(residues + 1) % 3], p[residues % 3], p[(residues - 1) % 3]


# --- walks confined below a barrier -------------------------------------------------


def barrier_survival(params: BernoulliParams, k: int, H: int, n: int) -> np.ndarray:
    """P^{<H}_{k,m} for m = 0..n: probability W_{k,m} stays strictly below H throughout."""
    params = _check3(params)
    if k >= H:
        raise ValueError(f"start {k} must lie strictly below the barrier {H}")
    if n < 0:
        raise ValueError("n must be non-negative")
    d0 = H - k
    D = d0 + n + 1
    d = np.arange(D + 1)  # index = distance below H; index 0 is absorbed
    up, stay, down = _move_probs(params, (H - d) % 3)
    mass = _zeros(D + 2, params)
    mass[d0] = 1 if not params.is_exact else Fraction(1)
    out = [mass.sum()]
    for _ in range(n):
        new = _zeros(D + 2, params)
        new[1 : D + 1] = mass[1 : D + 1] * stay[1 : D + 1]
        new[1:D] += mass[2 : D + 1] * up[2 : D + 1]
        new[2 : D + 1] += mass[1:D] * down[1:D]
        mass = new
        out.append(mass.sum())
    return np.array(out, dtype=_dtype(params))


def barrier_probability(params: BernoulliParams, k: int, H: int, n: int):
    return barrier_survival(params, k, H, n)[n]


def km_table(params: BernoulliParams, max_m: int):
    """(P^{<0}_{-1,m} for m = 0..max_m, K_m for m = 1..max_m, log P^{<0}_{-1,m}).

    Float parameters run a renormalized DP so K_m is a ratio of O(1) numbers
    and log P never underflows; exact parameters give exact rationals.
    """
    params = _check3(params)
    if max_m < 1:
        raise ValueError("max_m must be >= 1")
    if params.is_exact:
        P = barrier_survival(params, -1, 0, max_m)
        K = np.array([P[m - 1] / P[m] for m in range(1, max_m + 1)], dtype=object)
        logp = np.array([math.log(x) for x in P])
        return P, K, logp
    D = max_m + 2
    d = np.arange(D + 1)
    up, stay, down = _move_probs(params, (0 - d) % 3)
    mass = np.zeros(D + 2)
    mass[1] = 1.0
    logp = np.zeros(max_m + 1)
    K = np.ones(max_m)
    for m in range(1, max_m + 1):
        killed = mass[1] * up[1]
        total = mass.sum()
        new = np.zeros(D + 2)
        new[1 : D + 1] = mass[1 : D + 1] * stay[1 : D + 1]
        new[1:D] += mass[2 : D + 1] * up[2 : D + 1]
        new[2 : D + 1] += mass[1:D] * down[1:D]
        survive = 1.0 - killed / total
        K[m - 1] = 1.0 / survive
        logp[m] = logp[m - 1] + math.log(survive)
        mass = new / new.sum()
    return np.exp(logp), K, logp


def k_m(params: BernoulliParams, m: int):
    """K_m = P^{<0}_{-1,m-1} / P^{<0}_{-1,m} (always >= 1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return km_table(params, m)[1][m - 1]


# --- law of the running maximum --------------------------------------------------------


@dataclass
class MaxLawResult:
    n: int
    law: np.ndarray  # P(max W_{k,[0,n]} = i mod 3), i = 0, 1, 2
    record_mass: np.ndarray  # P(W_t is a record and W_t = 0 mod 3), t = 0..n


def max_law_dp(params: BernoulliParams, k: int, checkpoints: Sequence[int]) -> dict:
    """Exact laws of max(W_{k,[0,n]}) mod 3 at each checkpoint n.

    State: (deficit e = running max - W_t, running max mod 3). The deficit
    never exceeds t, so the table grows by one row per step.
    """
    params = _check3(params)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if checkpoints and checkpoints[0] < 0:
        raise ValueError("checkpoints must be non-negative")
    N = checkpoints[-1] if checkpoints else 0
    E = N + 2
    e = np.arange(E)[:, None]
    r = np.arange(3)[None, :]
    up, stay, down = _move_probs(params, (r - e) % 3)
    mass = _zeros((E, 3), params)
    mass[0, k % 3] = Fraction(1) if params.is_exact else 1.0
    records = [mass[0, 0]]
    out = {}
    for t in range(N + 1):
        if t in checkpoints:
            out[t] = MaxLawResult(t, mass[: t + 1].sum(axis=0), np.array(records, dtype=_dtype(params)))
        if t == N:
            break
        h = t + 1  # rows 0..t are live
        new = mass[: h + 1] * 0 if params.is_exact else np.zeros((h + 1, 3))
        new[:h] = mass[:h] * stay[:h]
        new[1 : h + 1] += mass[:h] * down[:h]
        new[: h - 1] += mass[1:h] * up[1:h]
        new[0] += np.roll(mass[0] * up[0], 1)
        mass[: h + 1] = new
        records.append(mass[0, 0])
    return out


def exact_max_law(params: BernoulliParams, k: int, n: int) -> np.ndarray:
    """P(max(W_{k,[0,n]}) = i mod 3) for i = 0, 1, 2."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return max_law_dp(params, k, [n])[n].law


def record_mass(params: BernoulliParams, k: int, n: int) -> np.ndarray:
    """R(t) = P(t is a record of W_{k,n} with W_t divisible by 3), t = 0..n."""
    return max_law_dp(params, k, [n])[n].record_mass


def tail_length_law(params: BernoulliParams, k: int, n: int) -> dict:
    """Exact law of the 3-tail length of W_{k,n}; key None means no such record.

    Conditioning on the last record divisible by 3 sitting at time n - m gives
    P(tail = m) = R(n - m) * P^{<0}_{-1,m} for m >= 1 and P(tail = 0) = R(n).
    """
    params = _check3(params)
    R = record_mass(params, k, n)
    P = barrier_survival(params, -1, 0, n)
    law = {0: R[n]}
    for m in range(1, n + 1):
        law[m] = R[n - m] * P[m]
    law[None] = 1 - sum(law.values())
    return law


def joint_tail_max0(params: BernoulliParams, k: int, n: int, m: int):
    """P(3-tail = m and max = 0 mod 3) = R(n - m) * p_2 * P^{<0}_{-1,m-1}, m >= 1."""
    params = _check3(params)
    R = record_mass(params, k, n)
    return R[n - m] * params.p[2] * barrier_probability(params, -1, 0, m - 1)


# --- exhaustive enumeration of label sequences ------------------------------------------


class ExhaustiveWalks:
    """All 3**n label sequences Z_1..Z_n with walk values from start k.

    Probabilities are accumulated per label composition (c0, c1, c2), so an
    event's probability is an exact polynomial in the parameters.
    """

    def __init__(self, n: int, k: int = 0):
        if not 0 <= n <= 13:
            raise ValueError("exhaustive enumeration supported for n <= 13")
        self.n, self.k = n, k
        if n:
            self.labels = np.indices((3,) * n, dtype=np.int8).reshape(n, -1).T
        else:
            self.labels = np.zeros((1, 0), dtype=np.int8)
        self.values = walk_values_from_labels(k, self.labels)
        c = np.stack([(self.labels == j).sum(axis=1) for j in range(3)], axis=1)
        self._comp = c[:, 0] * (n + 1) + c[:, 1]  # c2 is implied
        self._ncomp = (n + 1) ** 2

    def _weights(self, params: BernoulliParams):
        n = self.n
        w = [0] * self._ncomp
        for c0 in range(n + 1):
            for c1 in range(n + 1 - c0):
                w[c0 * (n + 1) + c1] = params.p[0] ** c0 * params.p[1] ** c1 * params.p[2] ** (n - c0 - c1)
        return w

    def probability(self, mask: np.ndarray, params: BernoulliParams):
        params = _check3(params)
        counts = np.bincount(self._comp[np.asarray(mask, dtype=bool)], minlength=self._ncomp)
        w = self._weights(params)
        total = Fraction(0) if params.is_exact else 0.0
        for idx in np.nonzero(counts)[0]:
            total += int(counts[idx]) * w[idx]
        return total

    def tails(self, h: int = 3) -> np.ndarray:
        return tail_lengths(self.values, h)

    def max_mod3(self) -> np.ndarray:
        return self.values.max(axis=1) % 3


def exhaustive_max_law(params: BernoulliParams, k: int, n: int) -> list:
    ew = ExhaustiveWalks(n, k)
    mx = ew.max_mod3()
    return [ew.probability(mx == i, params) for i in range(3)]


def exhaustive_barrier_probability(params: BernoulliParams, k: int, H: int, n: int):
    ew = ExhaustiveWalks(n, k)
    return ew.probability(ew.values.max(axis=1) < H, params)


def first_embedded_step_mass(params: BernoulliParams, length: int) -> tuple:
    """Exact masses of label windows of ``length`` that carry an embedded vertex at 0
    to its next vertex at +3 (first) or -3 (second) exactly on the last label."""
    params = _check3(params)
    if length < 1:
        raise ValueError("length must be >= 1")
    ew = ExhaustiveWalks(length, 0)
    v = ew.values[:, 1:]
    hit = (v % 3 == 0) & (v != 0)
    ends = hit.any(axis=1) & (np.argmax(hit, axis=1) == length - 1)
    return ew.probability(ends & (v[:, -1] > 0), params), ew.probability(ends & (v[:, -1] < 0), params)


def embedded_sign_law(params: BernoulliParams, n: int, k: int = 0) -> dict:
    """Exact law of (J, sign pattern) of the embedded walk of W_{k,n}.

    Returns ``{J: {signs: probability}}`` where ``signs`` is a tuple of +1/-1.
    """
    from .walks import embedded_steps

    params = _check3(params)
    ew = ExhaustiveWalks(n, k)
    lengths, signs, rows = embedded_steps(ew.values)
    pos = np.zeros(rows.size, dtype=np.int64)
    if rows.size:
        start = np.r_[True, rows[1:] != rows[:-1]]
        run = np.cumsum(start) - 1
        first = np.nonzero(start)[0]
        pos = np.arange(rows.size) - first[run]
    code = np.zeros(ew.labels.shape[0], dtype=np.int64)
    np.add.at(code, rows, (signs > 0).astype(np.int64) << pos)
    key = lengths.astype(np.int64) * (1 << 20) + code
    out: dict = {}
    for kv in np.unique(key):
        J, c = divmod(int(kv), 1 << 20)
        pattern = tuple(1 if (c >> i) & 1 else -1 for i in range(max(J - 1, 0)))
        out.setdefault(J, {})[pattern] = ew.probability(key == kv, params)
    return out


def conditional_tail_law_check(
    params: BernoulliParams,
    n: int,
    m: int,
    k: int = 0,
    mode: str = "exhaustive",
    samples: int = 10**6,
    seed: Optional[SeedSpec] = None,
):
    """(P(max = 0 mod 3 | 3-tail = m), p_2 K_m).

    ``mode="exhaustive"`` enumerates all label sequences (exact with Fraction
    parameters); ``mode="montecarlo"`` estimates the left side from samples and
    also returns its standard error as a third element.
    """
    params = _check3(params)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rhs = params.p[2] * k_m(params, m)
    if mode == "exhaustive":
        ew = ExhaustiveWalks(n, k)
        tail = ew.tails(3)
        den = ew.probability(tail == m, params)
        if den == 0:
            raise ValueError(f"3-tail length {m} has probability zero")
        num = ew.probability((tail == m) & (ew.max_mod3() == 0), params)
        return num / den, rhs
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    seed = seed or SeedSpec(0)
    hit = good = 0
    chunk = max(1, min(samples, 4_000_000 // (n + 1)))
    for start in range(0, samples, chunk):
        idx = np.arange(start, min(samples, start + chunk))
        keys = derive_keys(seed.key, idx)
        v = walk_values_from_labels(k, sample_labels(params, keys, n))
        sel = tail_lengths(v, 3) == m
        hit += int(sel.sum())
        good += int((v[sel].max(axis=1) % 3 == 0).sum())
    if hit == 0:
        raise ValueError(f"no sample had 3-tail length {m}")
    est = good / hit
    return est, float(rhs), math.sqrt(est * (1 - est) / hit)


# --- lattice path counting -------------------------------------------------------------


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def bridges(n: int) -> int:
    return math.comb(n, n // 2) if n % 2 == 0 else 0


def dyck(n: int) -> int:
    return catalan(n // 2) if n % 2 == 0 else 0


def meanders(n: int) -> int:
    """Prefixes of Dyck words of length n (all prefix sums >= 0)."""
    if n % 2 == 0:
        return math.comb(n, n // 2)
    j = n // 2
    return 2 * math.comb(2 * j, j) - catalan(j)


@dataclass(frozen=True)
class PathCounts:
    n: int
    bridges: int
    dyck: int
    meanders: int


def path_counts(n: int) -> PathCounts:
    if n < 0:
        raise ValueError("n must be non-negative")
    return PathCounts(n, bridges(n), dyck(n), meanders(n))


def brute_force_path_counts(n: int) -> PathCounts:
    """Count bridges, Dyck words and meanders among all 2**n words over {a=+1, b=-1}."""
    if n == 0:
        return PathCounts(0, 1, 1, 1)
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    steps = (2 * bits - 1).astype(np.int8)
    h = np.cumsum(steps, axis=1, dtype=np.int16)
    nonneg = (h >= 0).all(axis=1)
    closed = h[:, -1] == 0
    return PathCounts(n, int(closed.sum()), int((closed & nonneg).sum()), int(nonneg.sum()))


def dyck_meander_ratio(ell: int) -> Fraction:
    """dyck(ell - 2) / meanders(ell - 1) from exact counts (equals 1/(ell - 1) for even ell)."""
    if ell < 2:
        raise ValueError("ell must be >= 2")
    return Fraction(dyck(ell - 2), meanders(ell - 1))


def _meander_prob(i: int) -> float:
    """meanders(i) / 2**i in floating point via log-gamma."""
    j = i // 2
    if i % 2 == 0:
        lg = math.lgamma(2 * j + 1) - 2 * math.lgamma(j + 1)
    else:
        lg = math.lgamma(2 * j + 2) - math.lgamma(j + 1) - math.lgamma(j + 2)
    return math.exp(lg - i * math.log(2))


def one_tail_law(n: int, exact: Optional[bool] = None) -> list:
    """P(1-tail = T), T = 0..n, for the simple symmetric +-1 walk of n steps.

    Split at the last visit to the maximum: the reversed prefix of length n - T
    is a meander, then one down step, then a length T - 1 walk staying at or
    below its start (a flipped meander).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = n <= 30 if exact is None else exact
    if exact:
        den = 2**n
        return [Fraction(meanders(n), den)] + [
            Fraction(meanders(n - T) * meanders(T - 1), den) for T in range(1, n + 1)
        ]
    return [_meander_prob(n)] + [
        _meander_prob(n - T) * _meander_prob(T - 1) / 2 for T in range(1, n + 1)
    ]


def small_tail_probability(n: int, cutoff: float, exact: Optional[bool] = None):
    """P(1-tail of the n-step symmetric walk <= cutoff)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    top = min(n, math.floor(cutoff))
    if top < 0:
        return 0
    exact = n <= 30 if exact is None else exact
    if exact:
        return sum(one_tail_law(n, True)[: top + 1])
    total = _meander_prob(n)
    for T in range(1, top + 1):
        total += _meander_prob(n - T) * _meander_prob(T - 1) / 2
    return total
