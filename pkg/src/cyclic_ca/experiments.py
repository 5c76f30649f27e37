"""Monte Carlo and exact-DP experiments, table reproduction and figure rendering."""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import plotting
from .automata import (
    Cyclic,
    OneSidedCyclic3,
    RuleSpec,
    column_trajectory_batch,
    light_cone,
    parse_rule,
    space_time,
)
from .core import BernoulliParams, sample_cells, sample_configuration
from .exact import exact_max_law, max_law_dp
from .seeding import SeedSpec, derive_keys
from .walks import embedded_steps, embedded_vertices, encode_batch, sample_labels, tail_lengths, walk_values_from_labels

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BLOCK = 2048  # samples per work unit; results do not depend on it

# Published estimates of P(F^t(x)_0 = i), 100000 samples each.
PUBLISHED_TABLES = {
    "cyclic3": {
        "rule": "cyclic3",
        "params": (0.1, 0.3, 0.6),
        "values": {
            0: (0.100, 0.301, 0.599),
            50: (0.550, 0.087, 0.362),
            100: (0.565, 0.090, 0.345),
            150: (0.572, 0.091, 0.336),
        },
        "asserted": True,
    },
    "prob3_half": {
        "rule": "prob3:0.5",
        "params": (0.1, 0.3, 0.6),
        "values": {
            0: (0.100, 0.300, 0.600),
            50: (0.760, 0.087, 0.153),
            100: (0.780, 0.147, 0.074),
            150: (0.742, 0.198, 0.060),
        },
        "asserted": False,
    },
    "cyclic4": {
        "rule": "cyclic4",
        "params": (0.05, 0.15, 0.3, 0.5),
        "values": {
            0: (0.050, 0.149, 0.300, 0.500),
            50: (0.065, 0.578, 0.018, 0.339),
            100: (0.122, 0.615, 0.019, 0.354),
            150: (0.005, 0.615, 0.123, 0.368),
        },
        "asserted": False,
    },
    "g1": {
        "rule": "tournament:g1",
        "params": (0.05, 0.15, 0.3, 0.5),
        "values": {
            0: (0.051, 0.149, 0.302, 0.498),
            50: (0.369, 0.009, 0.040, 0.580),
            100: (0.407, 0.009, 0.040, 0.544),
            150: (0.424, 0.010, 0.041, 0.525),
        },
        "asserted": False,
    },
    "g2": {
        "rule": "tournament:g2",
        "params": (0.025, 0.075, 0.15, 0.3, 0.45),
        "values": {
            0: (0.025, 0.076, 0.152, 0.298, 0.450),
            50: (0.169, 0.354, 0.026, 0.061, 0.390),
            100: (0.165, 0.376, 0.028, 0.061, 0.370),
            150: (0.165, 0.385, 0.027, 0.061, 0.362),
        },
        "asserted": False,
    },
}


def _as_params(params) -> BernoulliParams:
    return params if isinstance(params, BernoulliParams) else BernoulliParams(tuple(params))


def _map_blocks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _blocks(samples: int):
    return [(s, min(samples, s + BLOCK)) for s in range(0, samples, BLOCK)]


# --- column law estimation -----------------------------------------------------------------


@dataclass
class EstimateReport:
    rule: str
    params: tuple
    times: list
    samples: int
    master_seed: int
    counts: np.ndarray  # (len(times), n) integer tallies
    engine: str = "ca"

    @property
    def estimates(self) -> np.ndarray:
        return self.counts / self.samples

    @property
    def half_widths(self) -> np.ndarray:
        p = self.estimates
        return 1.96 * np.sqrt(p * (1 - p) / self.samples)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "rule": self.rule,
            "params": [float(v) for v in self.params],
            "times": [int(t) for t in self.times],
            "samples": int(self.samples),
            "master_seed": int(self.master_seed),
            "engine": self.engine,
            "counts": self.counts.astype(int).tolist(),
            "estimates": [[round(float(v), 12) for v in row] for row in self.estimates],
            "half_widths": [[round(float(v), 12) for v in row] for row in self.half_widths],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def _column_states(rule: RuleSpec, params, T: int, start: int, stop: int, master_seed: int, engine: str):
    """(samples, T + 1) trajectory of site 0 for samples start..stop-1."""
    keys = derive_keys(master_seed, np.arange(start, stop))
    lo, hi = light_cone(rule, 0, T)
    cells = sample_cells(params, keys, lo, hi + 1)
    if engine == "walk":
        W = encode_batch(cells)
        if isinstance(rule, OneSidedCyclic3):
            return (np.maximum.accumulate(W, axis=1) % 3).astype(np.int8)
        # C_3 = C_{3+}^2 o shift: F^t(x)_0 = max(W[-t..t]) mod 3
        out = np.empty((W.shape[0], T + 1), dtype=np.int8)
        M = W[:, T].copy()
        out[:, 0] = M % 3
        for t in range(1, T + 1):
            np.maximum(M, np.maximum(W[:, T - t], W[:, T + t]), out=M)
            out[:, t] = M % 3
        return out
    return column_trajectory_batch(rule, cells, T, keys if rule.probabilistic else None, lo)


def _tally_task(args):
    rule, params, times, start, stop, master_seed, engine = args
    T = max(times)
    traj = _column_states(rule, params, T, start, stop, master_seed, engine)
    counts = np.zeros((len(times), rule.n), dtype=np.int64)
    for i, t in enumerate(times):
        counts[i] = np.bincount(traj[:, t], minlength=rule.n)
    return counts


def _pick_engine(rule: RuleSpec, engine: str) -> str:
    if engine == "auto":
        return "walk" if isinstance(rule, OneSidedCyclic3) else "ca"
    if engine == "walk" and not (isinstance(rule, OneSidedCyclic3) or (isinstance(rule, Cyclic) and rule.n == 3)):
        raise ValueError("the walk engine applies to cyclic3 and cyclic3+ only")
    if engine not in ("walk", "ca"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def estimate_column_law(
    rule,
    params,
    times: Sequence[int],
    samples: int,
    seed: int = 0,
    workers: int = 1,
    engine: str = "auto",
) -> EstimateReport:
    """Estimate P(F^t(x)_0 = i) at each requested t from exact light-cone samples.

    Sample j draws its initial cells and any invasion coins from the stream
    (seed, j), so the report is identical for any worker count.
    """
    rule = parse_rule(rule) if isinstance(rule, str) else rule
    params = _as_params(params)
    if params.n != rule.n:
        raise ValueError(f"{params.n} parameters for a {rule.n}-state rule")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    times = [int(t) for t in times]
    if times != sorted(times) or times[0] < 0:
        raise ValueError("times must be sorted and non-negative")
    engine = _pick_engine(rule, engine)
    tasks = [(rule, params, times, a, b, seed, engine) for a, b in _blocks(samples)]
    counts = sum(_map_blocks(_tally_task, tasks, workers))
    return EstimateReport(rule.describe(), params.p, times, samples, seed, counts, engine)


def sample_column_trajectory(rule, params, T: int, index: int, seed: int = 0) -> np.ndarray:
    """Single-sample trajectory computed through the Configuration-level API (reference path)."""
    from .automata import iterate_column

    rule = parse_rule(rule) if isinstance(rule, str) else rule
    params = _as_params(params)
    lo, hi = light_cone(rule, 0, T)
    spec = SeedSpec(seed, index)
    x = sample_configuration(params, hi - lo + 1, lo, spec)
    return np.array([iterate_column(rule, x, t, 0, spec) for t in range(T + 1)], dtype=np.int8)


# --- convergence of the max law ----------------------------------------------------------------


@dataclass
class ConvergenceReport:
    params: tuple
    k: int
    mode: str
    entries: list = field(default_factory=list)  # dicts with n, law, target, linf_error

    def errors(self) -> list:
        return [e["linf_error"] for e in self.entries]

    def decreasing_steps(self) -> int:
        err = self.errors()
        return sum(b < a for a, b in zip(err, err[1:]))

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "params": [float(p) for p in self.params],
                "k": self.k, "mode": self.mode, "entries": self.entries}


def max_law_convergence(
    params,
    n_grid: Sequence[int],
    mode: str = "exact_dp",
    k: int = 0,
    samples: int = 100_000,
    seed: int = 0,
) -> ConvergenceReport:
    """Law of max(W_{k,[0,n]}) mod 3 along ``n_grid`` against the prey weights (p2, p0, p1)."""
    params = _as_params(params)
    n_grid = [int(n) for n in n_grid]
    if n_grid != sorted(n_grid):
        raise ValueError("n_grid must be increasing")
    target = np.array([float(v) for v in params.prey_target()])
    report = ConvergenceReport(tuple(float(v) for v in params.p), k, mode)
    if mode == "exact_dp":
        laws = {n: np.array(r.law, dtype=float) for n, r in max_law_dp(params, k, n_grid).items()}
    elif mode == "walk_montecarlo":
        N = n_grid[-1]
        tally = np.zeros((len(n_grid), 3), dtype=np.int64)
        chunk = max(1, 4_000_000 // (N + 1))
        for a in range(0, samples, chunk):
            keys = derive_keys(seed, np.arange(a, min(samples, a + chunk)))
            runmax = np.maximum.accumulate(walk_values_from_labels(k, sample_labels(params, keys, N)), axis=1)
            for i, n in enumerate(n_grid):
                tally[i] += np.bincount(runmax[:, n] % 3, minlength=3)
        laws = {n: tally[i] / samples for i, n in enumerate(n_grid)}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    for n in n_grid:
        law = laws[n]
        report.entries.append({
            "n": n,
            "law": [float(v) for v in law],
            "target": [float(v) for v in target],
            "linf_error": float(np.abs(law - target).max()),
        })
    return report


# --- tails and embedded walks ------------------------------------------------------------------


def _tail_task(args):
    params, n, k, start, stop, seed, beta_n = args
    keys = derive_keys(seed, np.arange(start, stop))
    v = walk_values_from_labels(k, sample_labels(params, keys, n))
    tails = tail_lengths(v, 3)
    J = embedded_vertices(v).sum(axis=1)
    return Counter(tails.tolist()), Counter(J.tolist())


def tail_statistics(
    params,
    n: int,
    samples: int,
    seed: int = 0,
    k: int = 0,
    beta: Optional[float] = None,
    workers: int = 1,
) -> dict:
    """Empirical laws of the 3-tail length and of the embedded-walk length of W_{k,n}."""
    params = _as_params(params)
    if n < 1:
        raise ValueError("n must be >= 1")
    p0, p1, p2 = (float(v) for v in params.p)
    q = 2 * p0 * p0 * p1 * p2
    beta = q / 8 if beta is None else beta
    chunk = max(1, min(BLOCK, 4_000_000 // (n + 1)))
    tasks = [(params, n, k, a, min(samples, a + chunk), seed, beta * n) for a in range(0, samples, chunk)]
    tails, lengths = Counter(), Counter()
    for t, j in _map_blocks(_tail_task, tasks, workers):
        tails.update(t)
        lengths.update(j)
    tail_hist = {(None if m < 0 else int(m)): c for m, c in sorted(tails.items())}
    cutoff = n ** 0.25
    small = sum(c for m, c in tail_hist.items() if m is not None and m <= cutoff)
    short = sum(c for J, c in lengths.items() if J < beta * n)
    mean_J = sum(J * c for J, c in lengths.items()) / samples
    return {
        "n": n,
        "samples": samples,
        "k": k,
        "tail_hist": tail_hist,
        "embedded_hist": dict(sorted(lengths.items())),
        "cutoff": cutoff,
        "fraction_tail_small": small / samples,
        "beta": beta,
        "q": q,
        "fraction_embedded_short": short / samples,
        "mean_embedded_over_n": mean_J / n,
    }


def _sign_task(args):
    params, n, k, start, stop, seed = args
    keys = derive_keys(seed, np.arange(start, stop))
    _, signs, rows = embedded_steps(walk_values_from_labels(k, sample_labels(params, keys, n)))
    up = signs > 0
    same = rows[1:] == rows[:-1]
    pairs = np.bincount((2 * up[:-1] + up[1:])[same], minlength=4)
    return np.array([(~up).sum(), up.sum()]), pairs


def embedded_symmetry_test(params, n: int, samples: int, seed: int = 0, k: int = 0, workers: int = 1) -> dict:
    """Chi-squared tests that embedded steps are fair coin flips.

    ``balance`` tests the overall +3/-3 counts; ``pairs`` tests that consecutive
    steps within a walk are uniform over the four sign pairs.
    """
    params = _as_params(params)
    chunk = max(1, min(BLOCK, 4_000_000 // (n + 1)))
    tasks = [(params, n, k, a, min(samples, a + chunk), seed) for a in range(0, samples, chunk)]
    results = _map_blocks(_sign_task, tasks, workers)
    counts = sum(r[0] for r in results)
    pairs = sum(r[1] for r in results)
    return {
        "down_up": counts.tolist(),
        "pairs": pairs.tolist(),
        "balance_p": float(stats.chisquare(counts).pvalue),
        "pairs_p": float(stats.chisquare(pairs).pvalue),
    }


def tail_csv_rows(stats: dict) -> list:
    total = stats["samples"]
    rows = []
    for m, c in stats["tail_hist"].items():
        rows.append(("none" if m is None else m, c, c / total))
    return rows


# --- particle systems ---------------------------------------------------------------------------


def particle_density_curve(rule, params, times: Sequence[int], width: int, samples: int, seed: int = 0) -> np.ndarray:
    """Mean fraction of unequal adjacent pairs on a fixed central block of ``width`` cells."""
    rule = parse_rule(rule) if isinstance(rule, str) else rule
    params = _as_params(params)
    T = max(times)
    lo = -rule.left * T
    keys = derive_keys(seed, np.arange(samples))
    cur = sample_cells(params, keys, lo, width + rule.right * T)
    from .automata import LazyDraws, step_batch

    out = {}
    origin = lo
    for t in range(T + 1):
        if t in times:
            off = -origin
            block = cur[:, off : off + width]
            out[t] = float((block[:, 1:] != block[:, :-1]).mean())
        if t == T:
            break
        origin += rule.left
        u = LazyDraws(keys, t, origin) if rule.probabilistic else None
        cur = step_batch(rule, cur, u)
    return np.array([out[t] for t in times])


def state_change_curve(rule, params, t_max: int, samples: int, seed: int = 0) -> np.ndarray:
    """Mean cumulative number of state changes of site 0 up to each t = 0..t_max."""
    rule = parse_rule(rule) if isinstance(rule, str) else rule
    params = _as_params(params)
    total = np.zeros(t_max + 1)
    for a, b in _blocks(samples):
        traj = _column_states(rule, params, t_max, a, b, seed, "ca")
        changes = np.zeros((traj.shape[0], t_max + 1))
        changes[:, 1:] = np.cumsum(traj[:, 1:] != traj[:, :-1], axis=1)
        total += changes.sum(axis=0)
    return total / samples


def ci_coverage(params, t: int, samples: int, reps: int, seed: int = 0, state: int = 0) -> int:
    """How many of ``reps`` independent estimates of P(C_{3+}^t(x)_0 = state) cover the exact value."""
    params = _as_params(params)
    truth = sum(float(params.p[j]) * float(exact_max_law(params, j, t)[state]) for j in range(3))
    hits = 0
    for r in range(reps):
        rep = estimate_column_law(OneSidedCyclic3(), params, [t], samples, seed=seed + r)
        if abs(rep.estimates[0, state] - truth) <= rep.half_widths[0, state]:
            hits += 1
    return hits


# --- table reproduction and figures ---------------------------------------------------------------


def reproduce_tables(
    out_dir: str,
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    times: Sequence[int] = (0, 50, 100, 150),
    names: Optional[Sequence[str]] = None,
    figures: bool = True,
) -> dict:
    """Re-run each published configuration and write CSV/JSON with diffs against the published values."""
    plotting.ensure_dir(out_dir)
    results = {}
    summary_rows = []
    for name in names or list(PUBLISHED_TABLES):
        spec = PUBLISHED_TABLES[name]
        log.info("table %s: %d samples", name, samples)
        rep = estimate_column_law(spec["rule"], spec["params"], list(times), samples, seed, workers)
        rows = []
        for i, t in enumerate(rep.times):
            published = spec["values"].get(t)
            for s in range(len(spec["params"])):
                est = float(rep.estimates[i, s])
                row = {
                    "table": name,
                    "time": t,
                    "state": s,
                    "estimate": est,
                    "half_width": float(rep.half_widths[i, s]),
                    "count": int(rep.counts[i, s]),
                    "published": None if published is None else published[s],
                    "diff": None if published is None else est - published[s],
                }
                rows.append(row)
        with open(os.path.join(out_dir, f"{name}.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
            fh.write(rep.to_json())
        if figures:
            plotting.plot_table(name, [r for r in rows if r["published"] is not None], os.path.join(out_dir, f"{name}.png"))
        diffs = [abs(r["diff"]) for r in rows if r["diff"] is not None]
        results[name] = {"report": rep, "rows": rows, "max_abs_diff": max(diffs), "asserted": spec["asserted"]}
        summary_rows.extend(rows)
    with open(os.path.join(out_dir, "tables.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary_rows[0]))
        w.writeheader()
        w.writerows(summary_rows)
    return results


FIGURES = [
    ("cyclic3_uniform", "cyclic3", (1 / 3, 1 / 3, 1 / 3)),
    ("cyclic4_uniform", "cyclic4", (0.25, 0.25, 0.25, 0.25)),
    ("cyclic5_uniform", "cyclic5", (0.2, 0.2, 0.2, 0.2, 0.2)),
    ("cyclic3_nonuniform", "cyclic3", (0.1, 0.3, 0.6)),
    ("prob3_half", "prob3:0.5", (0.1, 0.3, 0.6)),
    ("g1", "tournament:g1", (0.05, 0.15, 0.3, 0.5)),
    ("g2", "tournament:g2", (0.025, 0.075, 0.15, 0.3, 0.45)),
]


def render_figure(rule, params, width: int, steps: int, seed: SeedSpec):
    """Exact space-time diagram (steps + 1 rows of ``width`` cells), time 0 first."""
    rule = parse_rule(rule) if isinstance(rule, str) else rule
    params = _as_params(params)
    lo = -rule.left * steps
    x = sample_configuration(params, width + (rule.left + rule.right) * steps, lo, seed)
    diag = space_time(rule, x, steps, seed)
    return np.stack([row.restrict(0, width - 1).cells for row in diag.rows])


def render_figures(
    out_dir: str,
    width: int = 1000,
    steps: int = 500,
    seed: int = 0,
    big_width: int = 4000,
    big_steps: int = 1000,
    png: bool = True,
) -> dict:
    """Write a PGM (and PNG) per figure; the non-uniform 3-state run uses the larger size."""
    plotting.ensure_dir(out_dir)
    info = {}
    for idx, (name, rule_text, p) in enumerate(FIGURES):
        rule = parse_rule(rule_text)
        w, s = (big_width, big_steps) if name == "cyclic3_nonuniform" else (width, steps)
        diag = render_figure(rule, p, w, s, SeedSpec(seed, idx))
        pgm = os.path.join(out_dir, f"{name}.pgm")
        plotting.write_pgm(pgm, diag)
        if png:
            plotting.plot_space_time(diag, os.path.join(out_dir, f"{name}.png"), rule.n, name)
        top = diag[-1]
        info[name] = {
            "pgm": pgm,
            "width": w,
            "steps": s,
            "top_row_frequencies": (np.bincount(top, minlength=rule.n) / w).tolist(),
            "particle_density_first": float((diag[0][1:] != diag[0][:-1]).mean()),
            "particle_density_last": float((top[1:] != top[:-1]).mean()),
        }
    with open(os.path.join(out_dir, "figures.json"), "w") as fh:
        json.dump({k: {kk: vv for kk, vv in v.items() if kk != "pgm"} for k, v in info.items()}, fh, indent=1, sort_keys=True)
    return info
