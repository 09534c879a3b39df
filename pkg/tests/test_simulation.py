import numpy as np
import pytest

from codedgrad.analysis import completion_cdf
from codedgrad.errors import ParameterError
from codedgrad.schedule import Delivery, build_cpgc, build_mcc
from codedgrad.simulation import (
    SWEEP_HEADER,
    SimConfig,
    mean_ci,
    run_experiment,
    simulate_iteration,
    simulate_trials,
    sweep_tolerance,
    threshold_from_tolerance,
    write_metric_csvs,
    write_sweep_csv,
    write_trace_csv,
)


def test_threshold_rounding():
    assert threshold_from_tolerance(20, 0.0) == 20
    assert threshold_from_tolerance(20, 0.05) == 19
    assert threshold_from_tolerance(20, 0.15) == 17
    assert threshold_from_tolerance(20, 0.3) == 14
    assert threshold_from_tolerance(8, 0.1) == 8
    with pytest.raises(ParameterError):
        threshold_from_tolerance(20, 1.5)


def test_mcc_ignores_tolerance():
    assert SimConfig(scheme="MCC", tolerance=0.2).threshold == 20
    assert SimConfig(scheme="CPGC", tolerance=0.2).threshold == 16


def test_thread_count_does_not_matter(params):
    s = build_cpgc(8, 8, 3)
    a = simulate_trials(s, Delivery.MMC, [6, 8], params, 1000, 5, chunk_size=128, threads=1)
    b = simulate_trials(s, Delivery.MMC, [6, 8], params, 1000, 5, chunk_size=128, threads=4)
    for name in ("T", "load", "recovered"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_seed_changes_draws(params):
    s = build_cpgc(8, 8, 2)
    a = simulate_trials(s, Delivery.MMC, [8], params, 200, 1)
    b = simulate_trials(s, Delivery.MMC, [8], params, 200, 2)
    assert not np.array_equal(a.T, b.T)


def test_prefix_stable_across_trial_count(params):
    # trials share chunk streams, so a longer run extends a shorter one
    s = build_cpgc(6, 6, 2)
    a = simulate_trials(s, Delivery.MMC, [6], params, 100, 9, chunk_size=64)
    b = simulate_trials(s, Delivery.MMC, [6], params, 300, 9, chunk_size=64)
    assert np.array_equal(a.T[:64], b.T[:64])


def test_mcc_load_and_volume_fixed(params):
    cfg = SimConfig(scheme="MCC", trials=300)
    agg, res = run_experiment(cfg, return_trials=True)
    assert np.all(res.load == 7)
    assert np.all(res.volume(20) == 21 / 20)
    assert agg.ci_volume == 0


def test_completion_time_monotone_in_threshold(params):
    s = build_cpgc(10, 10, 3)
    res = simulate_trials(s, Delivery.MMC, [5, 8, 10], params, 500, 0)
    assert np.all(np.diff(res.T, axis=1) >= 0)
    assert np.all(np.diff(res.load, axis=1) >= 0)
    assert np.all(res.recovered >= np.array([5, 8, 10]))


def test_matches_exact_cdf_small(params):
    s = build_cpgc(4, 4, 2)
    res = simulate_trials(s, Delivery.MMC, [4], params, 40_000, 1)
    for t in (0.05, 0.1, 0.2):
        exact = completion_cdf(s, Delivery.MMC, 4, t, params)
        emp = np.mean(res.T[:, 0] < t)
        se = np.sqrt(exact * (1 - exact) / 40_000)
        assert abs(emp - exact) < 4 * se + 1e-9


def test_iteration_outcome(params):
    s = build_mcc(6, 6, 2)
    out = simulate_iteration(s, Delivery.BUNDLED, 6, params, np.random.default_rng(0))
    assert out.load == 3
    assert out.volume == pytest.approx(3 * 2 / 6)
    assert out.recovered == 6


def test_sweep_equals_separate_runs():
    base = SimConfig(M=8, K=8, r=2, trials=400, seed=3, chunk_size=100)
    rows = sweep_tolerance(base, [0.0, 0.25], ["CPGC", "MCC"])
    from dataclasses import replace

    solo = run_experiment(replace(base, scheme="CPGC", tolerance=0.25))
    assert rows[1] == solo
    assert rows[2].mean_T == rows[3].mean_T


def test_sweep_needs_grid():
    with pytest.raises(ParameterError):
        sweep_tolerance(SimConfig(), [])


def test_bad_inputs(params):
    s = build_cpgc(4, 4, 2)
    with pytest.raises(ParameterError):
        simulate_trials(s, Delivery.MMC, [5], params, 10, 0)
    with pytest.raises(ParameterError):
        simulate_trials(s, Delivery.MMC, [4], params, 0, 0)


def test_mean_ci():
    m, ci = mean_ci(np.array([1.0, 3.0]))
    assert m == 2.0
    assert ci == pytest.approx(1.959963984540054 * np.sqrt(2) / np.sqrt(2))
    assert mean_ci(np.array([4.0])) == (4.0, 0.0)


def test_writers(tmp_path):
    base = SimConfig(M=4, K=4, r=2, trials=50)
    rows = sweep_tolerance(base, [0.0, 0.25], ["UC_MMC"])
    write_sweep_csv(tmp_path / "s.csv", rows)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == ",".join(SWEEP_HEADER)
    names = write_metric_csvs(tmp_path, rows)
    assert names == ["metric_T.csv", "metric_load.csv", "metric_volume.csv"]
    _, res = run_experiment(base, return_trials=True)
    write_trace_csv(tmp_path / "t.csv", res, 4)
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 51
