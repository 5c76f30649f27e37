"""Command-line entry point: ``cyclic-ca <subcommand> ...``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys

import numpy as np

from . import experiments, plotting
from .automata import parse_rule
from .core import BernoulliParams
from .exact import exact_max_law, km_table
from .seeding import SeedSpec
from .tournaments import enumerate_mpp
from .walks import check_walk_oracle


def _params(text: str | None, n: int, exact: bool = False) -> BernoulliParams:
    if text is None:
        return BernoulliParams.uniform(n, exact)
    return BernoulliParams.parse(text, exact)


def _ints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _dump(obj, path=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_simulate(args):
    rule = parse_rule(args.rule)
    params = _params(args.params, rule.n)
    diag = experiments.render_figure(rule, params, args.width, args.steps, SeedSpec(args.seed))
    if args.render:
        plotting.write_pgm(args.render, diag)
    if args.png:
        plotting.plot_space_time(diag, args.png, rule.n, rule.describe())
    top = diag[-1]
    _dump({
        "rule": rule.describe(),
        "params": [float(p) for p in params.p],
        "width": args.width,
        "steps": args.steps,
        "seed": args.seed,
        "top_row_frequencies": (np.bincount(top, minlength=rule.n) / args.width).tolist(),
        "particle_density_first": float((diag[0][1:] != diag[0][:-1]).mean()),
        "particle_density_last": float((top[1:] != top[:-1]).mean()),
    })


def cmd_walk_check(args):
    rep = check_walk_oracle(args.max_len, args.max_steps)
    print(f"checked {rep['checked']} passed {rep['checked'] - rep['failed']} failed {rep['failed']}")
    return 1 if rep["failed"] else 0


def cmd_tails(args):
    params = _params(args.params, 3)
    stats = experiments.tail_statistics(params, args.len, args.samples, args.seed, k=args.start, workers=args.workers)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "count", "fraction"])
        w.writerows(experiments.tail_csv_rows(stats))


def cmd_exact(args):
    params = _params(args.params, 3, exact=args.rational)
    law = exact_max_law(params, args.start, args.steps)
    target = params.prey_target()
    err = max(abs(a - b) for a, b in zip(law, target))
    _dump({
        "n": args.steps,
        "law": [float(v) for v in law],
        "target": [float(v) for v in target],
        "linf_error": float(err),
    })


def cmd_km(args):
    P, K, _ = km_table(_params(args.params, 3, exact=args.rational), args.max_m)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "P", "K"])
        for m in range(1, args.max_m + 1):
            w.writerow([m, repr(float(P[m])), repr(float(K[m - 1]))])


def cmd_enumerate(args):
    census = enumerate_mpp(args.n)
    census = {k: v for k, v in census.items() if k != "members_by_family"}
    census["members"] = [int(b) for b in census["members"]]
    _dump(census, args.out)


def cmd_estimate(args):
    rule = parse_rule(args.rule)
    rep = experiments.estimate_column_law(
        rule, _params(args.params, rule.n), _ints(args.times), args.samples, args.seed, args.workers, args.engine
    )
    if args.out in (None, "-"):
        sys.stdout.write(rep.to_json())
    else:
        with open(args.out, "w") as fh:
            fh.write(rep.to_json())


def cmd_reproduce(args):
    res = experiments.reproduce_tables(args.out, args.samples, args.seed, args.workers, figures=not args.no_png)
    for name, r in res.items():
        flag = "asserted" if r["asserted"] else "reported"
        print(f"{name}: max |diff| = {r['max_abs_diff']:.4f} ({flag})")


def cmd_render(args):
    info = experiments.render_figures(
        args.out, args.width, args.steps, args.seed, args.big_width, args.big_steps, png=not args.no_png
    )
    for name, d in info.items():
        freqs = ", ".join(f"{f:.3f}" for f in d["top_row_frequencies"])
        print(f"{name}: {d['width']}x{d['steps'] + 1} top row ({freqs})")


def cmd_convergence(args):
    params = _params(args.params, 3, exact=args.rational)
    rep = experiments.max_law_convergence(params, _ints(args.grid), args.mode, args.start, args.samples, args.seed)
    if args.png:
        plotting.plot_convergence(rep.entries, args.png)
    _dump(rep.to_dict(), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclic-ca", description="Cyclic cellular automata and their height walks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="space-time diagram of a rule on a random configuration")
    p.add_argument("--rule", default="cyclic3")
    p.add_argument("--params")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--width", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--render", help="PGM output path")
    p.add_argument("--png", help="colour PNG output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("walk-check", help="exhaustive walk-oracle agreement for the one-sided rule")
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_walk_check)

    p = sub.add_parser("tails", help="empirical 3-tail length law as CSV")
    p.add_argument("--params")
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("exact", help="exact law of the walk maximum mod 3")
    p.add_argument("--params")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--rational", action="store_true", help="exact rational arithmetic")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("km", help="barrier probabilities and K_m as CSV")
    p.add_argument("--params")
    p.add_argument("--max-m", type=int, required=True)
    p.add_argument("--rational", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("enumerate-tournaments", help="census of max-path-preserving tournaments")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("estimate", help="Monte Carlo law of the column at site 0")
    p.add_argument("--rule", default="cyclic3")
    p.add_argument("--params")
    p.add_argument("--times", default="0,50,100,150")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--engine", choices=["auto", "ca", "walk"], default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("reproduce-tables", help="re-run the published column-law tables")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-png", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("render-figures", help="space-time figures as PGM and PNG")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=1000)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--big-width", type=int, default=4000)
    p.add_argument("--big-steps", type=int, default=1000)
    p.add_argument("--no-png", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("convergence", help="distance of the max-mod-3 law to its limit along n")
    p.add_argument("--params")
    p.add_argument("--grid", default="100,1000,10000")
    p.add_argument("--mode", choices=["exact_dp", "walk_montecarlo"], default="exact_dp")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rational", action="store_true")
    p.add_argument("--png")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
