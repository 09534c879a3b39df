"""Acceptance checks, one verdict line per criterion."""

import json
import math
import time

import numpy as np
import pytest

from codedgrad import reference
from codedgrad.analysis import (
    CumulativeType,
    cdf_from_table,
    count_recoverable_by_type,
    nonzero_coefficients,
)
from codedgrad.cli import main
from codedgrad.gd import RegressionProblem, centralized_gd, default_learning_rate, finite_difference_gradient, run_gd
from codedgrad.schedule import Delivery, build_cpgc, build_mcc, build_uc_mmc
from codedgrad.simulation import SimConfig, simulate_trials, sweep_tolerance
from codedgrad.straggler import StragglerParams, p_exact_vector, sample_completion_times

PARAMS = StragglerParams(10.0, 0.01)
SCHEMES = {
    "MCC": lambda: (build_mcc(4, 4, 2, "powers_of_two"), Delivery.BUNDLED),
    "UC_MMC": lambda: (build_uc_mmc(4, 4, 2), Delivery.MMC),
    "CPGC": lambda: (build_cpgc(4, 4, 2), Delivery.MMC),
}


def _table_check(rows, m_prime):
    bad, cells = [], 0
    for idx, name in enumerate(reference.SCHEMES):
        s, mode = SCHEMES[name]()
        table = count_recoverable_by_type(s, mode, m_prime)
        listed = set()
        for label, counts, values in rows:
            n = CumulativeType(counts)
            listed.add(n)
            cells += 1
            if table[n] != values[idx]:
                bad.append(f"{label}/{name}: {table[n]} != {values[idx]}")
        bad += [f"unlisted {n.counts}/{name}: {c}" for n, c in table.items() if n not in listed and c]
    return bad, cells


def test_c1_full_gradient_table(verdict):
    start = time.perf_counter()
    bad, cells = _table_check(reference.FULL_GRADIENT, 4)
    elapsed = time.perf_counter() - start
    verdict("C1 full-gradient table", not bad and cells == 27 and elapsed < 1.0,
            f"{cells} cells, {len(bad)} mismatches {bad}, {elapsed:.2f}s; N9 matched as type (0,4,0)")


def test_c2_partial_gradient_table(verdict):
    bad, cells = _table_check(reference.PARTIAL_GRADIENT, 3)
    verdict("C2 partial-gradient table", not bad and cells == 33, f"{cells} cells, {len(bad)} mismatches {bad}")


def test_c3_cpgc_cdf_coefficients(verdict):
    s, mode = SCHEMES["CPGC"]()
    got = sorted(c for _, c in nonzero_coefficients(count_recoverable_by_type(s, mode, 4)))
    want = sorted(reference.CPGC_CDF_COEFFICIENTS)
    verdict("C3 CPGC CDF coefficients", got == want, f"{got}")


def test_c4_dominance_and_equivalence(verdict):
    grid = np.linspace(0.0, 0.6, 50)
    cdf = {}
    for name, make in SCHEMES.items():
        s, mode = make()
        for m in (4, 3):
            table = count_recoverable_by_type(s, mode, m)
            cdf[name, m] = np.array([cdf_from_table(table, float(t), PARAMS) for t in grid])
    dominated = all(np.all(cdf["CPGC", 4] >= cdf[o, 4]) for o in ("MCC", "UC_MMC"))
    gap = float(np.max(np.abs(cdf["CPGC", 3] - cdf["UC_MMC", 3])))
    verdict("C4 dominance at M'=4, equality at M'=3", dominated and gap <= 1e-12, f"max |CPGC-UC| at M'=3 = {gap:.1e}")


def test_c5_straggler_model(verdict):
    rng = np.random.default_rng(2024)
    r = 3
    counts_at = sample_completion_times(r, PARAMS, rng, size=100_000)
    worst = 0.0
    for t in (0.02, 0.05, 0.1, 0.2, 0.35):
        done = np.sum(counts_at <= t, axis=1)
        emp = np.cumsum(np.bincount(done, minlength=r + 1)) / len(done)
        exact = np.cumsum(p_exact_vector(t, r, PARAMS))
        worst = max(worst, float(np.max(np.abs(emp - exact))))
    rs = np.random.default_rng(5)
    worst_sum = 0.0
    for _ in range(100):
        p = StragglerParams(float(rs.uniform(0.5, 40)), float(rs.uniform(0, 0.2)))
        v = p_exact_vector(float(rs.uniform(0, 2)), int(rs.integers(1, 6)), p)
        worst_sum = max(worst_sum, abs(sum(v) - 1))
    verdict("C5 straggler law", worst <= 0.005 and worst_sum <= 1e-12,
            f"KS {worst:.4f}, max |sum-1| {worst_sum:.1e}")


@pytest.mark.slow
def test_c6_monte_carlo_vs_exact(verdict):
    trials = 1_000_000
    grid = np.linspace(0.03, 0.4, 10)
    start = time.perf_counter()
    worst = 0.0
    for name, make in SCHEMES.items():
        s, mode = make()
        res = simulate_trials(s, mode, [4], PARAMS, trials, seed=6, chunk_size=65536)
        table = count_recoverable_by_type(s, mode, 4)
        for t in grid:
            p = cdf_from_table(table, float(t), PARAMS)
            se = math.sqrt(p * (1 - p) / trials)
            emp = float(np.mean(res.T[:, 0] < t))
            worst = max(worst, abs(emp - p) / se if se else (0.0 if emp == p else math.inf))
    elapsed = time.perf_counter() - start
    verdict("C6 Monte Carlo vs exact CDF", worst <= 3.0 and elapsed < 120,
            f"worst deviation {worst:.2f} SE over 3 schemes x 10 points, {elapsed:.0f}s")


@pytest.fixture(scope="module")
def fig3_sweep():
    start = time.perf_counter()
    rows = sweep_tolerance(SimConfig(trials=10_000, seed=0), [0.0, 0.05, 0.10, 0.15], ["MCC", "UC_MMC", "CPGC"])
    return {(r.scheme, r.tolerance): r for r in rows}, time.perf_counter() - start


@pytest.mark.slow
def test_c7_prose_claims(verdict, fig3_sweep):
    rows, elapsed = fig3_sweep
    cpgc = rows["CPGC", 0.05].mean_T
    red_mcc = 1 - cpgc / rows["MCC", 0.05].mean_T
    red_uc = 1 - cpgc / rows["UC_MMC", 0.05].mean_T
    verdict("C7a CPGC time reduction at 5%", 0.15 <= red_mcc <= 0.35 and 0.15 <= red_uc <= 0.35,
            f"vs MCC {red_mcc:.1%}, vs UC-MMC {red_uc:.1%}")
    uc_vol = rows["UC_MMC", 0.0].mean_volume
    verdict("C7b UC-MMC volume at 0%", 1.65 <= uc_vol <= 1.95, f"{uc_vol:.3f}")
    cp_vol = rows["CPGC", 0.0].mean_volume
    verdict("C7c CPGC volume at 0%", 1.35 <= cp_vol <= 1.65, f"{cp_vol:.3f}")
    res = simulate_trials(build_mcc(20, 20, 3), Delivery.BUNDLED, [20], PARAMS, 10_000, 0)
    exact = bool(np.all(res.volume(20) == 21 / 20))
    verdict("C7d MCC volume 21/20 every trial", exact, f"min {res.volume(20).min()}, max {res.volume(20).max()}")
    mcc = [rows["MCC", t] for t in (0.0, 0.05, 0.10, 0.15)]
    same = all((a.mean_T, a.mean_load, a.mean_volume, a.ci_T) == (mcc[0].mean_T, mcc[0].mean_load, mcc[0].mean_volume, mcc[0].ci_T) for a in mcc)
    verdict("C7e MCC flat across tolerance", same and elapsed < 300, f"sweep took {elapsed:.0f}s")


def test_c8_decoder_properties(verdict):
    from test_decoder import test_monotone_under_codeword_addition, test_permutation_invariance, test_three_cycle_separation

    failures = []
    for prop in (test_monotone_under_codeword_addition, test_permutation_invariance, test_three_cycle_separation):
        assert prop.hypothesis.inner_test  # hypothesis-wrapped
        try:
            prop()
        except Exception as exc:  # noqa: BLE001
            failures.append(f"{prop.__name__}: {exc}")
    verdict("C8 decoder properties (1000 examples each)", not failures, "; ".join(failures))


def test_c9_gradient_descent(verdict):
    problem = RegressionProblem.synthetic(200, 40, 20, seed=3)
    partial = run_gd(problem, SimConfig(scheme="CPGC", tolerance=0.05, seed=3), 50)
    dec_err = max(partial.decode_errors)
    full = run_gd(problem, SimConfig(scheme="CPGC", tolerance=0.0, seed=3), 50)
    ref = centralized_gd(problem, 50, default_learning_rate(problem))
    traj_err = max(float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)) for a, b in zip(full.thetas[1:], ref[1:]))
    rng = np.random.default_rng(9)
    fd_err = 0.0
    for _ in range(3):
        theta = rng.standard_normal(40)
        g = problem.gradient(theta)
        fd_err = max(fd_err, float(np.linalg.norm(g - finite_difference_gradient(problem, theta)) / np.linalg.norm(g)))
    verdict("C9 gradient descent", dec_err <= 1e-9 and traj_err <= 1e-9 and fd_err <= 1e-5,
            f"decode {dec_err:.1e}, trajectory {traj_err:.1e}, finite differences {fd_err:.1e}")


def test_c10_determinism(verdict, tmp_path):
    files = {
        "simulate": ["sweep.csv", "metric_T.csv", "metric_load.csv", "metric_volume.csv"],
        "gd": ["gd_trajectory.csv", "gd_reference.csv"],
        "analyze": ["etimes.csv", "cdf_CPGC.csv"],
    }
    extra = {"simulate": ["--trials", "9000", "--set", "M=10", "--set", "K=10"], "gd": ["--set", "iterations=20"], "analyze": []}
    diffs = []
    for cmd, names in files.items():
        first = tmp_path / f"{cmd}1"
        assert main([cmd, "--out", str(first), *extra[cmd]]) == 0
        manifest = first / "manifest.json"
        again = tmp_path / f"{cmd}2"
        flags = ["--threads", "4"] if cmd == "simulate" else []
        assert main([cmd, "--config", str(manifest), "--out", str(again), *flags]) == 0
        assert json.loads((again / "manifest.json").read_text())["config"].get("threads", 4) == 4
        diffs += [f"{cmd}/{n}" for n in names if (first / n).read_bytes() != (again / n).read_bytes()]
    verdict("C10 byte-identical reruns, 1 vs 4 threads", not diffs, f"differing: {diffs}" if diffs else "3 subcommands")
