"""Shifted-exponential computation-time model.

Each worker draws one ``X ~ Exp(mu)`` per iteration and finishes its ``s``-th
task at ``s * (alpha + X)``. The worker's speed is therefore persistent within
an iteration, which is what makes the number of finished tasks by time ``t``
follow the piecewise law implemented in :func:`p_exact`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class StragglerParams:
    mu: float = 10.0
    alpha: float = 0.01

    def __post_init__(self) -> None:
        if not self.mu > 0 or not math.isfinite(self.mu):
            raise ParameterError(f"mu must be positive and finite, got {self.mu}")
        if not self.alpha >= 0 or not math.isfinite(self.alpha):
            raise ParameterError(f"alpha must be non-negative and finite, got {self.alpha}")


def _survival(x: float, params: StragglerParams) -> float:
    """Pr(X > x - alpha) written in terms of the per-task time ``x``."""
    excess = x - params.alpha
    return 1.0 if excess <= 0 else math.exp(-params.mu * excess)


def p_exact(s: int, t: float, r: int, params: StragglerParams) -> float:
    """Probability that a worker with load ``r`` has finished exactly ``s`` tasks by ``t``.

    ``s`` tasks are done iff ``t/(s+1) - alpha < X <= t/s - alpha``. For ``s = 0``
    the upper bound is infinite; for ``s = r`` there is no further task, so the
    lower bound disappears.
    """
    if not 0 <= s <= r:
        raise ParameterError(f"task count s={s} outside [0, {r}]")
    if t < 0:
        raise ParameterError(f"time must be non-negative, got {t}")
    if s == 0:
        return _survival(t, params)
    if t < s * params.alpha:
        return 0.0
    lower = _survival(t / s, params)
    if s == r:
        return 1.0 - lower
    return _survival(t / (s + 1), params) - lower


def p_exact_vector(t: float, r: int, params: StragglerParams) -> list[float]:
    return [p_exact(s, t, r, params) for s in range(r + 1)]


def sample_completion_times(
    r: int, params: StragglerParams, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Task finish times ``s * (alpha + X)``, ``s = 1..r``.

    Returns shape ``(r,)`` for a single worker or ``(size, r)`` for ``size``
    independent workers.
    """
    if r < 1:
        raise ParameterError(f"computation load must be >= 1, got {r}")
    n = 1 if size is None else size
    x = rng.exponential(1.0 / params.mu, size=n)
    times = np.outer(params.alpha + x, np.arange(1, r + 1, dtype=float))
    return times[0] if size is None else times


def completed_counts(times: np.ndarray, t: float) -> np.ndarray:
    """Number of tasks finished by ``t`` for each row of a ``(n, r)`` time array."""
    return np.sum(np.asarray(times) <= t, axis=-1)
