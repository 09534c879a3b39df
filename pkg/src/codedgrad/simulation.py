"""Monte Carlo iterations under the straggler model.

One iteration: every worker draws its speed, results arrive as messages in
time order, the master decodes incrementally and stops as soon as ``M'``
distinct blocks are decodable. Load and volume count the messages received up
to and including that moment.

Trials are grouped in fixed-size chunks; chunk ``c`` draws from the random
stream ``SeedSequence(seed, spawn_key=(c,))``. Results therefore depend only on
``(seed, chunk_size)`` and never on how many threads execute the chunks.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from . import kernel
from .errors import ParameterError
from .schedule import Delivery, ScheduleMatrix, Scheme, build_schedule, default_delivery
from .straggler import StragglerParams

Z95 = 1.959963984540054


def threshold_from_tolerance(m: int, tolerance: float) -> int:
    """``M' = ceil((1 - tolerance) * M)``, robust to binary rounding of ``tolerance``."""
    if not 0.0 <= tolerance <= 1.0:
        raise ParameterError(f"tolerance rate must lie in [0, 1], got {tolerance}")
    return m - math.floor(tolerance * m + 1e-9)


@dataclass(frozen=True)
class SimConfig:
    scheme: str = "CPGC"
    M: int = 20
    K: int = 20
    r: int = 3
    mu: float = 10.0
    alpha: float = 0.01
    tolerance: float = 0.0
    trials: int = 10_000
    seed: int = 0
    chunk_size: int = 4096
    threads: int = 1
    eval_points: str = "linear"

    @property
    def params(self) -> StragglerParams:
        return StragglerParams(self.mu, self.alpha)

    @property
    def scheme_enum(self) -> Scheme:
        return Scheme.parse(self.scheme)

    @property
    def delivery(self) -> Delivery:
        return default_delivery(self.scheme_enum)

    @property
    def threshold(self) -> int:
        if self.scheme_enum is Scheme.MCC:
            # MDS decoding is all-or-nothing; the tolerance knob does not apply
            return self.M
        return threshold_from_tolerance(self.M, self.tolerance)

    def schedule(self) -> ScheduleMatrix:
        kw = {"eval_points": self.eval_points} if self.scheme_enum is Scheme.MCC else {}
        return build_schedule(self.scheme_enum, self.M, self.K, self.r, **kw)


@dataclass(frozen=True)
class IterationOutcome:
    completion_time: float
    load: int
    volume: float
    recovered: int


@dataclass
class EventPlan:
    """Message structure of one schedule under one delivery mode."""

    coeffs: np.ndarray  # (cells, padded_blocks), cell index = task * K + worker
    worker: np.ndarray  # (events,)
    multiplier: np.ndarray  # (events,) arrival = multiplier * (alpha + X_worker)
    ptr: np.ndarray
    cells: np.ndarray
    message_volume: float
    num_blocks: int
    prime: int
    word_primes: tuple[int, ...]

    @classmethod
    def build(cls, s: ScheduleMatrix, mode: Delivery) -> "EventPlan":
        mode = Delivery(mode)
        k, r = s.cols, s.rows
        coeffs = np.array([cw.dense(s.padded_blocks) for cw in s.all_codewords()], dtype=np.int64)
        worker, mult, ptr, cells = [], [], [0], []
        for j in range(k):
            if mode is Delivery.MMC:
                for i in range(r):
                    worker.append(j)
                    mult.append(i + 1)
                    cells.append(i * k + j)
                    ptr.append(len(cells))
            else:
                worker.append(j)
                mult.append(r)
                cells.extend(i * k + j for i in range(r))
                ptr.append(len(cells))
        # MMC messages carry one block-sized result; a bundle carries r of them
        volume = (1 if mode is Delivery.MMC else r) / s.num_blocks
        return cls(
            coeffs=coeffs,
            worker=np.array(worker, dtype=np.int64),
            multiplier=np.array(mult, dtype=np.float64),
            ptr=np.array(ptr, dtype=np.int64),
            cells=np.array(cells, dtype=np.int64),
            message_volume=volume,
            num_blocks=s.num_blocks,
            prime=kernel.certified_prime(s),
            word_primes=kernel.certified_word_primes(s),
        )

    def arrival_times(self, x: np.ndarray, params: StragglerParams) -> np.ndarray:
        """(trials, events) arrival times from (trials, K) speed draws."""
        return self.multiplier[None, :] * (params.alpha + x[:, self.worker])

    def replay(self, times: np.ndarray, thresholds: Sequence[int], force_python: bool = False):
        # stable sort: simultaneous arrivals are handled in worker-index order
        order = np.argsort(times, axis=1, kind="stable")
        thr = np.asarray(sorted(thresholds), dtype=np.int64)
        return kernel.run_trials(
            self.coeffs, self.num_blocks, self.ptr, self.cells, order, times, thr, self.prime,
            self.word_primes, force_python=force_python,
        )


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def draw_speeds(rng: np.random.Generator, n: int, k: int, params: StragglerParams) -> np.ndarray:
    return rng.exponential(1.0 / params.mu, size=(n, k))


@dataclass
class TrialResults:
    """Per-trial raw results; columns follow ``thresholds`` (ascending)."""

    thresholds: list[int]
    T: np.ndarray
    load: np.ndarray
    recovered: np.ndarray
    message_volume: float

    def column(self, m_prime: int) -> int:
        return self.thresholds.index(m_prime)

    def volume(self, m_prime: int) -> np.ndarray:
        return self.load[:, self.column(m_prime)] * self.message_volume


def simulate_trials(
    s: ScheduleMatrix,
    mode: Delivery,
    thresholds: Sequence[int],
    params: StragglerParams,
    trials: int,
    seed: int,
    chunk_size: int = 4096,
    threads: int = 1,
    force_python: bool = False,
) -> TrialResults:
    if trials < 1:
        raise ParameterError(f"need at least one trial, got {trials}")
    if chunk_size < 1:
        raise ParameterError(f"chunk size must be positive, got {chunk_size}")
    thresholds = sorted(set(int(t) for t in thresholds))
    for t in thresholds:
        if not 0 <= t <= s.num_blocks:
            raise ParameterError(f"threshold M'={t} outside [0, {s.num_blocks}]")
    plan = EventPlan.build(s, mode)
    n_chunks = -(-trials // chunk_size)

    def work(c: int):
        n = min(chunk_size, trials - c * chunk_size)
        x = draw_speeds(chunk_rng(seed, c), n, s.cols, params)
        return plan.replay(plan.arrival_times(x, params), thresholds, force_python)

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    T, load, rec = (np.concatenate([p[i] for p in parts]) for i in range(3))
    return TrialResults(thresholds, T, load, rec, plan.message_volume)


def simulate_iteration(
    s: ScheduleMatrix,
    mode: Delivery,
    m_prime: int,
    params: StragglerParams,
    rng: np.random.Generator,
) -> IterationOutcome:
    """Single iteration driven by the caller's random stream."""
    plan = EventPlan.build(s, mode)
    x = draw_speeds(rng, 1, s.cols, params)
    T, load, rec = plan.replay(plan.arrival_times(x, params), [m_prime])
    return IterationOutcome(float(T[0, 0]), int(load[0, 0]), int(load[0, 0]) * plan.message_volume, int(rec[0, 0]))


@dataclass(frozen=True)
class Aggregate:
    scheme: str
    tolerance: float
    threshold: int
    trials: int
    mean_T: float
    ci_T: float
    mean_load: float
    ci_load: float
    mean_volume: float
    ci_volume: float

    def csv_row(self) -> list[str]:
        return [self.scheme, _fmt(self.tolerance)] + [
            _fmt(getattr(self, k)) for k in ("mean_T", "ci_T", "mean_load", "ci_load", "mean_volume", "ci_volume")
        ]


SWEEP_HEADER = ["scheme", "tolerance", "mean_T", "ci_T", "mean_load", "ci_load", "mean_volume", "ci_volume"]


def _fmt(x: float) -> str:
    return repr(float(x))


def mean_ci(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, 0.0
    return mean, float(Z95 * np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(res: TrialResults, scheme: str, tolerance: float, m_prime: int) -> Aggregate:
    j = res.column(m_prime)
    mt, ct = mean_ci(res.T[:, j])
    ml, cl = mean_ci(res.load[:, j])
    mv, cv = mean_ci(res.volume(m_prime))
    return Aggregate(scheme, tolerance, m_prime, len(res.T), mt, ct, ml, cl, mv, cv)


def run_experiment(config: SimConfig, return_trials: bool = False):
    """Mean and 95% half-width of completion time, load and volume."""
    s = config.schedule()
    res = simulate_trials(
        s, config.delivery, [config.threshold], config.params, config.trials,
        config.seed, config.chunk_size, config.threads,
    )
    agg = aggregate(res, config.scheme_enum.value, config.tolerance, config.threshold)
    return (agg, res) if return_trials else agg


def sweep_tolerance(
    base: SimConfig, grid: Sequence[float], schemes: Sequence[str] | None = None
) -> list[Aggregate]:
    """One aggregate per (scheme, tolerance).

    All grid points of a scheme share one pass over the same random draws,
    which yields exactly what separate :func:`run_experiment` calls with the
    same seed would return.
    """
    if not grid:
        raise ParameterError("tolerance grid must not be empty")
    schemes = [base.scheme] if schemes is None else list(schemes)
    rows = []
    for name in schemes:
        cfgs = [replace(base, scheme=Scheme.parse(name).value, tolerance=float(t)) for t in grid]
        s = cfgs[0].schedule()
        res = simulate_trials(
            s, cfgs[0].delivery, [c.threshold for c in cfgs], base.params, base.trials,
            base.seed, base.chunk_size, base.threads,
        )
        rows.extend(aggregate(res, c.scheme_enum.value, c.tolerance, c.threshold) for c in cfgs)
    return rows


def write_sweep_csv(path, rows: Sequence[Aggregate]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow(row.csv_row())


def write_metric_csvs(out_dir, rows: Sequence[Aggregate]) -> list[str]:
    """Long-format, plot-ready file per metric: ``scheme,tolerance,value,ci``."""
    names = []
    for metric in ("T", "load", "volume"):
        name = f"metric_{metric}.csv"
        with open(f"{out_dir}/{name}", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scheme", "tolerance", "value", "ci"])
            for row in rows:
                w.writerow([row.scheme, _fmt(row.tolerance), _fmt(getattr(row, f"mean_{metric}")), _fmt(getattr(row, f"ci_{metric}"))])
        names.append(name)
    return names


def write_trace_csv(path, res: TrialResults, m_prime: int) -> None:
    j = res.column(m_prime)
    vol = res.volume(m_prime)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "T", "load", "volume", "recovered"])
        for i in range(len(res.T)):
            w.writerow([i, _fmt(res.T[i, j]), int(res.load[i, j]), _fmt(vol[i]), int(res.recovered[i, j])])


def config_dict(config: SimConfig) -> dict:
    return asdict(config)
