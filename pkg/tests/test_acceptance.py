"""One test (or a small group) per acceptance criterion, at the stated tolerances."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from cyclic_ca import experiments
from cyclic_ca.automata import Cyclic, parse_rule, verify_c3_decomposition
from cyclic_ca.cli import main
from cyclic_ca.core import BernoulliParams
from cyclic_ca.exact import (
    ExhaustiveWalks,
    barrier_survival,
    brute_force_path_counts,
    exact_max_law,
    first_embedded_step_mass,
    km_table,
    meanders,
    path_counts,
    tail_length_law,
)
from cyclic_ca.tournaments import all_conjectural, enumerate_mpp, is_max_path_preserving
from cyclic_ca.walks import check_walk_oracle

criterion = pytest.mark.criterion
EXACT = BernoulliParams.parse("1/10,3/10,6/10", exact=True)
FLOAT = BernoulliParams.parse("0.1,0.3,0.6")


@criterion(1)
def test_walk_oracle_exhaustive():
    start = time.perf_counter()
    rep = check_walk_oracle(10)
    assert rep["failed"] == 0
    assert rep["checked"] == sum((k + 1) * 3 ** (k + 1) for k in range(11))
    assert time.perf_counter() - start < 60


@criterion(2)
def test_c3_decomposition_on_all_factors():
    assert verify_c3_decomposition()


def _tail_enumerations():
    for n in range(1, 13):
        ew = ExhaustiveWalks(n, 0)
        yield n, ew, ew.tails(3)


@criterion("3a")
def test_conditional_law_exact():
    p2 = EXACT.p[2]
    _, K, _ = km_table(EXACT, 12)
    checked = 0
    for n, ew, tails in _tail_enumerations():
        top0 = ew.max_mod3() == 0
        for m in range(1, n + 1):
            den = ew.probability(tails == m, EXACT)
            if den == 0:
                continue
            lhs = ew.probability((tails == m) & top0, EXACT) / den
            assert isinstance(lhs, Fraction)
            assert abs(lhs - p2 * K[m - 1]) <= 1e-12
            checked += 1
    assert checked == sum(range(1, 13))


@criterion("3b")
def test_tail_marginal_as_stated():
    # compares P(3-tail = m) with p0 * P^{<0}_{-1,m} exactly as claimed
    P = barrier_survival(EXACT, -1, 0, 12)
    mismatches = []
    for n, ew, tails in _tail_enumerations():
        for m in range(1, n + 1):
            lhs = ew.probability(tails == m, EXACT)
            rhs = EXACT.p[0] * P[m]
            if abs(lhs - rhs) > 1e-12:
                mismatches.append((n, m, float(lhs), float(rhs)))
    assert not mismatches, f"{len(mismatches)} (n, m) pairs disagree, first: {mismatches[:3]}"


@criterion("3c")
def test_tail_marginal_with_record_mass():
    for n, ew, tails in _tail_enumerations():
        law = tail_length_law(EXACT, 0, n)
        for m in range(0, n + 1):
            assert law[m] == ew.probability(tails == m, EXACT)


@criterion(4)
def test_embedded_symmetry():
    for length in range(1, 11):
        up, down = first_embedded_step_mass(EXACT, length)
        assert up == down
    res = experiments.embedded_symmetry_test(FLOAT, 1000, 100_000, seed=4)
    assert res["balance_p"] > 0.001
    assert res["pairs_p"] > 0.001


@criterion(5)
def test_max_law_convergence():
    start = time.perf_counter()
    target = np.array([0.6, 0.1, 0.3])
    errs = [np.abs(exact_max_law(FLOAT, 0, n) - target).max() for n in (100, 1000, 10_000)]
    assert errs[2] <= 0.05
    assert errs[0] > errs[1] > errs[2]
    assert time.perf_counter() - start < 120


@criterion(6)
def test_cyclic3_table_row():
    start = time.perf_counter()
    rep = experiments.estimate_column_law(Cyclic(3), FLOAT, [150], 100_000, seed=0, engine="ca")
    est = rep.estimates[0]
    assert np.abs(est - np.array([0.572, 0.091, 0.336])).max() <= 0.01
    assert time.perf_counter() - start < 120


@criterion(7)
@pytest.mark.parametrize("name", list(experiments.PUBLISHED_TABLES))
def test_initial_rows_match_params(name):
    cfg = experiments.PUBLISHED_TABLES[name]
    rep = experiments.estimate_column_law(parse_rule(cfg["rule"]), cfg["params"], [0], 100_000, seed=7)
    p = np.array(cfg["params"], dtype=float)
    assert np.all(np.abs(rep.estimates[0] - p) <= rep.half_widths[0] + 1e-12)


KM_GRID = ["0.1,0.3,0.6", "1/3,1/3,1/3", "0.6,0.3,0.1", "0.2,0.6,0.2", "0.05,0.05,0.9"]


@criterion(8)
@pytest.mark.parametrize("params", KM_GRID)
def test_km_bounds(params):
    _, K, _ = km_table(BernoulliParams.parse(params), 10_000)
    assert np.all(K >= 1)
    m = np.arange(1, 10_001)
    g = (m * (K - 1))[99:]
    assert np.all(np.isfinite(g))
    slope = np.polyfit(np.log(m[99:]), np.log(g), 1)[0]
    assert abs(slope) < 0.05
    assert g.max() <= 2 * g[0]


@criterion(9)
def test_small_tails_decay():
    ns = (100, 1000, 10_000)
    fracs = [experiments.tail_statistics(FLOAT, n, 100_000, seed=9)["fraction_tail_small"] for n in ns]
    assert fracs[0] > fracs[1] > fracs[2] > 0
    c = max(f * n ** 0.25 for f, n in zip(fracs, ns))
    assert c <= 10


@criterion(10)
def test_path_counts():
    for n in range(19):
        assert brute_force_path_counts(n) == path_counts(n)
    for n in range(40):
        assert meanders(2 * n) == math.comb(2 * n, n)


@criterion(11)
def test_tournament_census():
    start = time.perf_counter()
    for n, e in zip(range(3, 7), (1, 4, 11, 26)):
        census = enumerate_mpp(n)
        assert census["family2"] == census["family3"] == e
    for n in range(3, 9):
        assert all(is_max_path_preserving(t) for t in all_conjectural(n))
    assert time.perf_counter() - start < 60


def _cli_bytes(tmp_path, argv, workers):
    out = tmp_path / f"w{workers}"
    assert main(argv + ["--workers", str(workers), "--out", str(out)]) == 0
    return out.read_bytes()


@criterion(12)
@pytest.mark.parametrize("argv", [
    ["estimate", "--rule", "prob3:0.5", "--params", "0.1,0.3,0.6", "--times", "0,25,50", "--samples", "40000"],
    ["estimate", "--rule", "cyclic3", "--params", "0.1,0.3,0.6", "--times", "0,30", "--samples", "40000",
     "--engine", "ca"],
    ["tails", "--params", "0.1,0.3,0.6", "--len", "200", "--samples", "40000"],
], ids=["prob3", "cyclic3", "tails"])
def test_reports_independent_of_workers(tmp_path, argv):
    outputs = {w: _cli_bytes(tmp_path, argv + ["--seed", "12"], w) for w in (1, 4, 16)}
    assert outputs[1] == outputs[4] == outputs[16]


@criterion(12)
def test_symmetry_report_independent_of_workers():
    res = [experiments.embedded_symmetry_test(FLOAT, 300, 40_000, seed=12, workers=w) for w in (1, 4, 16)]
    assert res[0] == res[1] == res[2]
