"""Linear-regression gradient descent over the simulated cluster.

The Gram matrix ``W = X^T X`` is split into ``M`` row blocks. Each iteration,
workers multiply their coded blocks with ``theta``, the master decodes whatever
blocks it can from the messages that arrived before the iteration closed, and
takes a step using only those gradient blocks (the rest count as zero).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .decoder import decode
from .errors import DimensionError, ParameterError
from .schedule import ScheduleMatrix
from .simulation import EventPlan, SimConfig, draw_speeds


@dataclass
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    M: int

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n, l = self.X.shape
        if self.y.shape != (n,):
            raise DimensionError(f"labels have shape {self.y.shape}, expected ({n},)")
        if self.M < 1 or l % self.M:
            raise DimensionError(f"block count M={self.M} must divide the feature count L={l}")
        self.W = self.X.T @ self.X
        self.b = self.X.T @ self.y

    @classmethod
    def synthetic(cls, n: int, l: int, m: int, seed: int = 0, noise: float = 0.01) -> "RegressionProblem":
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, l))
        theta_star = rng.standard_normal(l)
        y = x @ theta_star + noise * rng.standard_normal(n)
        return cls(x, y, m)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def L(self) -> int:
        return self.X.shape[1]

    @property
    def block_height(self) -> int:
        return self.L // self.M

    def block(self, i: int) -> np.ndarray:
        h = self.block_height
        return self.W[i * h : (i + 1) * h]

    def block_slice(self, i: int) -> slice:
        h = self.block_height
        return slice(i * h, (i + 1) * h)

    def loss(self, theta: np.ndarray) -> float:
        resid = self.y - self.X @ theta
        return float(resid @ resid / (2 * self.N))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return (self.W @ theta - self.b) / self.N


def block_products(problem: RegressionProblem, theta: np.ndarray) -> list[np.ndarray]:
    """Direct ``W_i @ theta`` for every block; the reference for decoded values."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.L,):
        raise DimensionError(f"theta has shape {theta.shape}, expected ({problem.L},)")
    return [problem.block(i) @ theta for i in range(problem.M)]


def task_result(problem: RegressionProblem, schedule: ScheduleMatrix, i: int, j: int, theta: np.ndarray) -> np.ndarray:
    """What worker ``j`` sends for its ``i``-th task: the coded block times ``theta``."""
    coded = np.zeros((problem.block_height, problem.L))
    for b, c in schedule.cell(i, j).terms:
        if b < problem.M:  # padding blocks are zero
            coded += c * problem.block(b)
    return coded @ theta


def power_iteration(a: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix."""
    v = np.random.default_rng(seed).standard_normal(a.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        lam = float(v @ a @ v)
    return lam


def default_learning_rate(problem: RegressionProblem) -> float:
    return 1.0 / power_iteration(problem.W / problem.N)


@dataclass
class GDState:
    theta: np.ndarray
    learning_rate: float
    iteration: int = 0
    loss_history: list[float] = field(default_factory=list)


def gd_step(
    state: GDState,
    recovered: "Sequence[int] | Mapping[int, np.ndarray]",
    problem: RegressionProblem,
) -> GDState:
    """One step using only the recovered gradient blocks.

    ``recovered`` is either a collection of block indices (products computed
    directly) or a mapping from block index to the decoded ``W_i @ theta``.
    """
    theta = state.theta
    if isinstance(recovered, Mapping):
        products = recovered
    else:
        products = {i: problem.block(i) @ theta for i in recovered}
    grad = np.zeros_like(theta)
    for i, wtheta in products.items():
        if not 0 <= i < problem.M:
            raise DimensionError(f"block index {i} outside [0, {problem.M})")
        sl = problem.block_slice(i)
        grad[sl] = (wtheta - problem.b[sl]) / problem.N
    new_theta = theta - state.learning_rate * grad
    history = state.loss_history + [problem.loss(new_theta)]
    return GDState(new_theta, state.learning_rate, state.iteration + 1, history)


def centralized_gd(problem: RegressionProblem, iterations: int, eta: float, theta0=None) -> list[np.ndarray]:
    theta = np.zeros(problem.L) if theta0 is None else np.asarray(theta0, dtype=float)
    out = [theta]
    for _ in range(iterations):
        theta = theta - eta * problem.gradient(theta)
        out.append(theta)
    return out


@dataclass
class GDRun:
    losses: list[float]
    times: list[float]
    recovered: list[int]
    decode_errors: list[float]
    thetas: list[np.ndarray]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "loss", "T", "recovered_blocks"])
            for it, (loss, t, rec) in enumerate(zip(self.losses, self.times, self.recovered)):
                w.writerow([it, repr(float(loss)), repr(float(t)), rec])


def _relative_error(a: np.ndarray, ref: np.ndarray) -> float:
    scale = float(np.max(np.abs(ref)))
    diff = float(np.max(np.abs(a - ref)))
    return diff if scale == 0 else diff / scale


def run_gd(
    problem: RegressionProblem,
    config: SimConfig,
    iterations: int,
    eta: float | None = None,
    theta0=None,
) -> GDRun:
    """Distributed GD with fresh straggler draws every iteration.

    Iteration ``t`` draws worker speeds from ``SeedSequence(seed, spawn_key=(t,))``.
    """
    if iterations < 0:
        raise ParameterError("iterations must be non-negative")
    if config.M != problem.M:
        raise DimensionError(f"config has M={config.M} but the problem is split into {problem.M} blocks")
    eta = default_learning_rate(problem) if eta is None else float(eta)
    if not eta > 0:
        raise ParameterError(f"learning rate must be positive, got {eta}")
    schedule = config.schedule()
    plan = EventPlan.build(schedule, config.delivery)
    threshold = config.threshold
    params = config.params
    k, r = schedule.cols, schedule.rows

    theta = np.zeros(problem.L) if theta0 is None else np.asarray(theta0, dtype=float)
    state = GDState(theta, eta, 0, [problem.loss(theta)])
    times, recovered, errors, thetas = [0.0], [0], [0.0], [theta]
    for it in range(iterations):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(it,)))
        arrivals = plan.arrival_times(draw_speeds(rng, 1, k, params), params)
        T, load, rec = plan.replay(arrivals, [threshold])
        order = np.argsort(arrivals[0], kind="stable")[: int(load[0, 0])]
        cells = [int(c) for e in order for c in plan.cells[plan.ptr[e] : plan.ptr[e + 1]]]
        positions = [(c // k, c % k) for c in cells]
        report = decode([schedule.cell(i, j) for i, j in positions], schedule.num_blocks, schedule.padded_blocks)
        if report.count != int(rec[0, 0]):
            raise RuntimeError(f"decoder disagreement at iteration {it}: {report.count} vs {int(rec[0, 0])}")

        results = [task_result(problem, schedule, i, j, state.theta) for i, j in positions]
        direct = block_products(problem, state.theta)
        decoded = {}
        worst = 0.0
        for blk, comb in sorted(report.combinations.items()):
            value = np.zeros(problem.block_height)
            for idx, coeff in comb.items():
                value += float(coeff) * results[idx]
            decoded[blk] = value
            worst = max(worst, _relative_error(value, direct[blk]))
        state = gd_step(state, decoded, problem)
        times.append(float(T[0, 0]))
        recovered.append(report.count)
        errors.append(worst)
        thetas.append(state.theta)
    return GDRun(state.loss_history, times, recovered, errors, thetas)


def finite_difference_gradient(problem: RegressionProblem, theta: np.ndarray, h: float = 1e-6) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (problem.loss(theta + e) - problem.loss(theta - e)) / (2 * h)
    return out


def gershgorin_bound(a: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(a), axis=1)))

