import itertools
import math

import numpy as np
import pytest

from bootrec import kernel
from bootrec.dynamics import Rule
from bootrec.grid import unpack_rows
from bootrec.montecarlo import (Cell, Estimate, Model, SweepRow, crossing_outcomes,
                                estimate_crossing, estimate_percolation, percolation_outcomes,
                                run_sweep, sample_board, sample_site_rows, sample_tile_rows,
                                search_critical_p, stream_key, trial_rng, wilson_interval)
from bootrec.tiles import TileConfig, project_flags, sample_flags

from conftest import naive_outcome


def exact_percolation_n2(p: float) -> float:
    """Sum over all 16 boards on [2]^2, using the naive orbit oracle."""
    sites = [(1, 1), (2, 1), (1, 2), (2, 2)]
    total = 0.0
    for bits in itertools.product((0, 1), repeat=4):
        x = frozenset(s for s, b in zip(sites, bits) if b)
        if naive_outcome(x, 2, 2)[0] == "percolated":
            k = sum(bits)
            total += p ** k * (1 - p) ** (4 - k)
    return total


# -- streams and sampling -------------------------------------------------------

def test_streams_are_distinct_and_reproducible():
    first = {}
    for cell, trial in itertools.product(range(4), range(50)):
        v = trial_rng(7, cell, trial).random(4).tobytes()
        assert v not in first.values()
        first[(cell, trial)] = v
    assert trial_rng(7, 2, 3).random(4).tobytes() == first[(2, 3)]
    assert trial_rng(8, 2, 3).random(4).tobytes() != first[(2, 3)]
    assert stream_key(7) != stream_key(8)
    with pytest.raises(ValueError):
        trial_rng(0, -1, 0)


def test_site_sampling_matches_direct_draws():
    rows = sample_site_rows(trial_rng(1, 0, 0), 70, 600, 0.3)
    direct = trial_rng(1, 0, 0).random((600, 70)) < 0.3
    assert np.array_equal(unpack_rows(rows, 70), direct)


def test_chunked_tile_sampling_matches_whole_board():
    w, h, p = 9, 600, 0.2
    rows = sample_tile_rows(trial_rng(3, 0, 5), w, h, p)
    flags = sample_flags(w, h, p, trial_rng(3, 0, 5).random(4 * w * h))
    assert np.array_equal(unpack_rows(rows, w), project_flags(flags))
    cfg = TileConfig.from_flags(flags)
    assert cfg.to_flags().sum() == flags.sum()


def test_coupling_gives_nested_boards():
    lo = sample_board(Model.SITES, trial_rng(0, 0, 0), 40, 40, 0.1)
    hi = sample_board(Model.SITES, trial_rng(0, 0, 0), 40, 40, 0.3)
    assert np.all(lo & ~hi == 0)
    lo = sample_board(Model.TILES, trial_rng(0, 0, 0), 40, 40, 0.1)
    hi = sample_board(Model.TILES, trial_rng(0, 0, 0), 40, 40, 0.3)
    assert np.all(lo & ~hi == 0)


@pytest.mark.parametrize("model", list(Model))
def test_coupled_percolation_is_monotone_trial_by_trial(model):
    ps = (0.1, 0.18, 0.26, 0.4)
    outs = [percolation_outcomes(24, p, model, trials=300, seed=5) == kernel.PERCOLATED
            for p in ps]
    for a, b in zip(outs, outs[1:]):
        assert not np.any(a & ~b)


# -- estimates ----------------------------------------------------------------

def test_wilson_interval_formula():
    k, n, z = 37, 120, 1.959963984540054
    ph = k / n
    centre = (ph + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    lo, hi = wilson_interval(k, n)
    assert lo == pytest.approx(centre - half, abs=1e-9)
    assert hi == pytest.approx(centre + half, abs=1e-9)


def test_estimate_invariants():
    e = Estimate.from_counts(30, 100, seed=1)
    assert e.ci_low <= e.point <= e.ci_high and e.point == 0.3
    assert Estimate.from_counts(0, 10, 0).point == 0.0
    assert Estimate.from_counts(10, 10, 0).ci_high == 1.0
    assert math.isnan(Estimate.from_counts(0, 0, 0).point)


def test_percolation_extremes():
    assert estimate_percolation(16, 1.0, trials=20).point == 1.0
    assert estimate_percolation(16, 0.0, trials=20).point == 0.0
    assert estimate_percolation(16, 1.0, Model.TILES, trials=5).point == 1.0
    with pytest.raises(ValueError):
        estimate_percolation(8, 1.1)
    with pytest.raises(ValueError):
        estimate_percolation(8, 0.5, trials=0)


def test_percolation_monotone_in_p_at_n64():
    a = estimate_percolation(64, 0.15, trials=200, seed=2)
    b = estimate_percolation(64, 0.25, trials=200, seed=2)
    assert b.point >= a.point - 3 * max(a.sigma, 1e-12)


def test_bootstrap_dominates_recovery():
    r = percolation_outcomes(20, 0.12, rule=Rule.RECOVERY, trials=200, seed=4)
    b = percolation_outcomes(20, 0.12, rule=Rule.BOOTSTRAP, trials=200, seed=4)
    assert not np.any((r == kernel.PERCOLATED) & (b != kernel.PERCOLATED))


def test_n2_estimate_matches_enumeration():
    for p in (0.3, 0.6):
        est = estimate_percolation(2, p, trials=4000, seed=11)
        exact = exact_percolation_n2(p)
        assert abs(est.point - exact) <= 3 * math.sqrt(exact * (1 - exact) / est.trials)


def test_budget_exceeded_trials_are_counted_separately():
    est = estimate_percolation(12, 0.3, trials=50, seed=0, max_steps=0)
    assert est.budget_exceeded + est.trials == 50
    assert est.budget_exceeded > 0


def test_results_do_not_depend_on_thread_count():
    a = percolation_outcomes(20, 0.2, trials=40, seed=9, threads=1)
    b = percolation_outcomes(20, 0.2, trials=40, seed=9, threads=3)
    assert np.array_equal(a, b)
    c1 = crossing_outcomes(6, 5, 0.3, trials=30, seed=2, threads=1)
    c2 = crossing_outcomes(6, 5, 0.3, trials=30, seed=2, threads=2)
    assert all(np.array_equal(x, y) for x, y in zip(c1, c2))


# -- crossings ----------------------------------------------------------------

def test_crossing_examples():
    assert estimate_crossing(1, 5, 0.2, trials=50).point == 1.0
    assert estimate_crossing(4, 5, 0.0, trials=50).point == 0.0
    assert estimate_crossing(4, 5, 0.0, Model.SITES, trials=50).point == 0.0
    with pytest.raises(ValueError):
        estimate_crossing(0, 3, 0.1)


def test_gap_free_frequency_tracks_column_model():
    trav, free = crossing_outcomes(10, 20, 0.1, trials=3000, seed=1)
    assert 0.35 < free.mean() < 0.5
    assert trav.sum() <= free.sum() + 50


# -- critical probability -------------------------------------------------------

def test_search_n2_brackets_exact_crossing():
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if exact_percolation_n2(mid) >= 0.5 else (mid, hi)
    exact = 0.5 * (lo + hi)
    res = search_critical_p(2, trials_per_probe=3000, seed=3, tol=0.01)
    assert res.bracket[1] - res.bracket[0] <= 0.01
    assert res.ci[0] <= exact <= res.ci[1]
    assert res.monotone and res.warning is None
    assert len(res.probes) >= 7


def test_search_validation_and_warnings():
    with pytest.raises(ValueError):
        search_critical_p(1)
    with pytest.raises(ValueError):
        search_critical_p(8, tol=0)
    with pytest.raises(ValueError):
        search_critical_p(8, bracket=(0.5, 0.4))
    with pytest.warns(RuntimeWarning):
        res = search_critical_p(8, 50, bracket=(0.9, 0.95), tol=0.05)
    assert res.warning


# -- sweeps ---------------------------------------------------------------------

def test_sweep_empty_and_order():
    assert run_sweep([]) == []
    cells = [Cell(8, 0.3), Cell(12, 0.2, Model.TILES), Cell(4, 0.5, rule=Rule.BOOTSTRAP)]
    rows = run_sweep(cells, seed=4)
    assert [(r.n, r.p, r.model, r.rule) for r in rows] == [
        (c.n, c.p, c.model, c.rule) for c in cells]


def test_sweep_equals_independent_runs():
    cells = [Cell(10, 0.25, trials=30), Cell(10, 0.35, trials=30)]
    rows = run_sweep(cells, seed=6)
    for i, (c, r) in enumerate(zip(cells, rows)):
        single = estimate_percolation(c.n, c.p, c.model, c.rule, c.trials, 6, cell=i)
        assert r.estimate == single


def test_sweep_isolates_failures():
    rows = run_sweep([Cell(8, 1.5), Cell(8, 0.3, trials=10)])
    assert rows[0].estimate is None and "outside" in rows[0].error
    assert rows[1].estimate is not None and rows[1].error is None


def test_sweep_rows_are_deterministic():
    cells = [Cell(12, 0.2, trials=25), Cell(16, 0.3, Model.TILES, trials=25)]
    a = [r.csv_fields() for r in run_sweep(cells, 1, threads=1)]
    b = [r.csv_fields() for r in run_sweep(cells, 1, threads=2)]
    assert a == b
    assert len(SweepRow.CSV_HEADER) == len(a[0])
    assert "wall_time" not in run_sweep(cells[:1], 1)[0].to_dict()["estimate"]


def test_search_interval_is_refined_around_the_bracket():
    res = search_critical_p(16, trials_per_probe=300, seed=8, tol=0.01, bracket=(0.05, 0.6))
    lo, hi = res.bracket
    assert res.ci[0] <= lo and hi <= res.ci[1]
    assert res.ci[1] - res.ci[0] <= (hi - lo) + 2 * 8 * 0.005 + 1e-12
    plain = search_critical_p(16, trials_per_probe=300, seed=8, tol=0.01, bracket=(0.05, 0.6),
                              refine=0)
    assert plain.p_hat == res.p_hat
    assert res.ci[1] - res.ci[0] <= plain.ci[1] - plain.ci[0]
