import csv
import json

import numpy as np
import pytest

from cyclic_ca import plotting
from cyclic_ca.automata import Cyclic, OneSidedCyclic3
from cyclic_ca.core import BernoulliParams
from cyclic_ca.experiments import (
    PUBLISHED_TABLES,
    ci_coverage,
    estimate_column_law,
    render_figure,
    render_figures,
    reproduce_tables,
    sample_column_trajectory,
    tail_csv_rows,
    tail_statistics,
    max_law_convergence,
)
from cyclic_ca.seeding import SeedSpec

P3 = (0.1, 0.3, 0.6)


# --- column-law estimates ---------------------------------------------------------------


def test_report_invariants():
    rep = estimate_column_law("cyclic3", P3, [0, 5, 20], 3000, seed=4)
    assert np.all(np.abs(rep.estimates.sum(axis=1) - 1) <= 1 / 3000)
    p = rep.estimates
    assert np.allclose(rep.half_widths, 1.96 * np.sqrt(p * (1 - p) / 3000))
    d = json.loads(rep.to_json())
    assert d["schema_version"] == 1 and d["times"] == [0, 5, 20] and d["samples"] == 3000
    assert d["counts"] == rep.counts.tolist()


@pytest.mark.parametrize("name", list(PUBLISHED_TABLES))
def test_time_zero_reproduces_parameters(name):
    spec = PUBLISHED_TABLES[name]
    rep = estimate_column_law(spec["rule"], spec["params"], [0], 20_000, seed=1)
    p = np.array(spec["params"])
    hw = 1.96 * np.sqrt(p * (1 - p) / 20_000)
    assert np.all(np.abs(rep.estimates[0] - p) <= 2 * hw)


@pytest.mark.parametrize("rule", [OneSidedCyclic3(), Cyclic(3)], ids=["cyclic3+", "cyclic3"])
def test_walk_and_ca_engines_agree_exactly(rule):
    a = estimate_column_law(rule, P3, [0, 7, 30], 5000, seed=2, engine="ca")
    b = estimate_column_law(rule, P3, [0, 7, 30], 5000, seed=2, engine="walk")
    assert np.array_equal(a.counts, b.counts)


def test_batched_path_matches_single_configuration_path():
    from cyclic_ca.experiments import _column_states
    from cyclic_ca.automata import parse_rule

    rule = parse_rule("prob3:0.5")
    batch = _column_states(rule, BernoulliParams(P3), 12, 0, 15, 3, "ca")
    ref = np.stack([sample_column_trajectory(rule, P3, 12, i, 3) for i in range(15)])
    assert np.array_equal(batch, ref)


def test_worker_count_does_not_change_report():
    one = estimate_column_law("prob3:0.5", P3, [0, 10], 5000, seed=8, workers=1)
    four = estimate_column_law("prob3:0.5", P3, [0, 10], 5000, seed=8, workers=4)
    assert one.to_json() == four.to_json()


def test_invasion_half_row_t50():
    rep = estimate_column_law("prob3:0.5", P3, [50], 100_000, seed=0)
    assert abs(rep.estimates[0, 0] - 0.760) <= 0.02


def test_estimate_errors():
    with pytest.raises(ValueError):
        estimate_column_law("cyclic4", P3, [0], 10)
    with pytest.raises(ValueError):
        estimate_column_law("cyclic3", P3, [0], 0)
    with pytest.raises(ValueError):
        estimate_column_law("cyclic3", P3, [5, 1], 10)
    with pytest.raises(ValueError):
        estimate_column_law("cyclic4", (0.25,) * 4, [1], 10, engine="walk")


def test_confidence_interval_calibration():
    hits = ci_coverage(P3, 40, 10_000, 100, seed=1000)
    assert 90 <= hits <= 99


# --- convergence ---------------------------------------------------------------------------


def test_convergence_exact_decreases_on_quadrupling_grid():
    grid = [16 * 4**i for i in range(6)]
    rep = max_law_convergence(P3, grid, "exact_dp")
    assert all(e >= 0 for e in rep.errors())
    assert rep.decreasing_steps() >= 4
    assert rep.entries[0]["target"] == pytest.approx([0.6, 0.1, 0.3])


def test_convergence_monte_carlo_tracks_exact():
    exact = max_law_convergence(P3, [50, 200], "exact_dp")
    mc = max_law_convergence(P3, [50, 200], "walk_montecarlo", samples=40_000, seed=5)
    for e, m in zip(exact.entries, mc.entries):
        assert np.max(np.abs(np.array(e["law"]) - np.array(m["law"]))) < 0.015


def test_convergence_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        max_law_convergence(P3, [100, 10])
    with pytest.raises(ValueError):
        max_law_convergence(P3, [10], "magic")


# --- tails -------------------------------------------------------------------------------------


def test_tail_statistics_length_one():
    s = tail_statistics(P3, 1, 5000, seed=1)
    assert set(s["tail_hist"]) <= {None, 0, 1}
    assert sum(s["tail_hist"].values()) == 5000
    rows = tail_csv_rows(s)
    assert abs(sum(r[2] for r in rows) - 1) < 1e-12


def test_tail_statistics_worker_independent():
    a = tail_statistics(P3, 300, 3000, seed=2, workers=1)
    b = tail_statistics(P3, 300, 3000, seed=2, workers=3)
    assert a == b
    with pytest.raises(ValueError):
        tail_statistics(P3, 0, 10)


def test_tail_small_fraction_at_ten_thousand():
    s = tail_statistics(P3, 10_000, 20_000, seed=3)
    assert s["cutoff"] == pytest.approx(10)
    assert s["fraction_tail_small"] <= 0.5


# --- tables and figures ---------------------------------------------------------------------------


def test_reproduce_tables_files(tmp_path):
    res = reproduce_tables(str(tmp_path), samples=500, seed=1, times=(0, 50), names=["cyclic3", "g2"])
    assert set(res) == {"cyclic3", "g2"}
    with open(tmp_path / "cyclic3.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and {"estimate", "published", "diff", "half_width"} <= set(rows[0])
    assert float(rows[0]["published"]) == 0.1
    assert (tmp_path / "g2.png").exists() and (tmp_path / "tables.csv").exists()
    d = json.loads((tmp_path / "g2.json").read_text())
    assert d["schema_version"] == 1 and d["rule"] == "tournament:g2"


def test_render_figures_small(tmp_path):
    info = render_figures(str(tmp_path), width=120, steps=40, big_width=200, big_steps=50, seed=3)
    assert len(info) == 7
    for name, d in info.items():
        arr = plotting.read_pgm(d["pgm"])
        assert arr.shape == (d["steps"] + 1, d["width"])
        assert (tmp_path / f"{name}.png").exists()
    again = tmp_path / "again"
    render_figures(str(again), width=120, steps=40, big_width=200, big_steps=50, seed=3, png=False)
    for name in info:
        assert (again / f"{name}.pgm").read_bytes() == (tmp_path / f"{name}.pgm").read_bytes()


def test_pgm_round_trip_and_orientation(tmp_path):
    diag = np.array([[0, 1, 2, 3, 4], [4, 4, 4, 4, 4]], dtype=np.int8)
    plotting.write_pgm(tmp_path / "d.pgm", diag)
    raw = (tmp_path / "d.pgm").read_bytes()
    assert raw.startswith(b"P5\n5 2\n255\n")
    assert raw[-5:] == bytes([255, 0, 76, 29, 226])  # time 0 is the bottom row
    assert np.array_equal(plotting.read_pgm(tmp_path / "d.pgm"), diag)
    with pytest.raises(ValueError):
        plotting.write_pgm(tmp_path / "e.pgm", np.array([[5]]))


def test_nonuniform_render_top_row_frequency():
    diag = render_figure("cyclic3", P3, 4000, 1000, SeedSpec(0, 3))
    assert abs(np.mean(diag[-1] == 0) - 0.6) <= 0.05


def test_uniform_render_clusters():
    diag = render_figure("cyclic3", BernoulliParams.uniform(3), 1000, 500, SeedSpec(0, 0))
    density = lambda row: np.mean(row[1:] != row[:-1])
    assert density(diag[500]) < 0.1 * density(diag[0])
