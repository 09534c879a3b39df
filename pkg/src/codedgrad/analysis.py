"""Exhaustive score-vector enumeration and the analytic completion-time law.

For small clusters every score vector in ``{0..r}^K`` can be decoded exactly.
Grouping the passing vectors by cumulative type ``N = (N_0..N_r)`` gives the
recoverability tables, and

    Pr(T < t) = sum_N count(N) * prod_s P_s(t) ** N_s

gives the completion-time CDF, from which ``E[T]`` follows by quadrature.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy import integrate

from .decoder import recover_from_schedule
from .errors import DimensionError, EnumerationBudgetExceeded, ParameterError
from .schedule import Delivery, ScheduleMatrix
from .straggler import StragglerParams, p_exact_vector

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True, order=True)
class CumulativeType:
    """``counts[s]`` workers have finished exactly ``s`` tasks."""

    counts: tuple[int, ...]

    @classmethod
    def of_scores(cls, scores: Sequence[int], r: int) -> "CumulativeType":
        hist = [0] * (r + 1)
        for c in scores:
            hist[c] += 1
        return cls(tuple(hist))

    @property
    def workers(self) -> int:
        return sum(self.counts)

    @property
    def r(self) -> int:
        return len(self.counts) - 1

    def multiplicity(self) -> int:
        """Number of score vectors sharing this type."""
        out = math.factorial(self.workers)
        for n in self.counts:
            out //= math.factorial(n)
        return out

    def label(self) -> str:
        return ",".join(f"N{s}={n}" for s, n in reversed(list(enumerate(self.counts))))


def all_types(k: int, r: int) -> list[CumulativeType]:
    """Every histogram of ``k`` workers over ``0..r`` completed tasks."""
    out = []
    for cut in itertools.combinations(range(k + r), r):
        bounds = (-1,) + cut + (k + r,)
        out.append(CumulativeType(tuple(b - a - 1 for a, b in zip(bounds, bounds[1:]))))
    return sorted(out)


def count_recoverable_by_type(
    s: ScheduleMatrix,
    mode: Delivery,
    m_prime: int,
    budget: int = DEFAULT_BUDGET,
) -> dict[CumulativeType, int]:
    """Number of score vectors of each type from which ``m_prime`` blocks decode.

    Every type appears in the result, with count 0 where nothing passes.
    """
    if not 0 <= m_prime <= s.num_blocks:
        raise ParameterError(f"threshold M'={m_prime} outside [0, {s.num_blocks}]")
    total = (s.rows + 1) ** s.cols
    if total > budget:
        raise EnumerationBudgetExceeded(
            f"{total} score vectors exceed the enumeration budget of {budget}; "
            "use the Monte Carlo engine (codedgrad.simulation) for this size"
        )
    table: Counter = Counter({t: 0 for t in all_types(s.cols, s.rows)})
    for scores in itertools.product(range(s.rows + 1), repeat=s.cols):
        if recover_from_schedule(s, scores, mode).count >= m_prime:
            table[CumulativeType.of_scores(scores, s.rows)] += 1
    return dict(table)


def type_probability(
    n: CumulativeType, t: float, params: StragglerParams, r: int | None = None
) -> float:
    """Probability of one particular score vector of type ``n`` at time ``t``."""
    r = n.r if r is None else r
    if n.r != r or any(c < 0 for c in n.counts):
        raise DimensionError(f"type {n.counts} is not a valid type for r={r}")
    probs = p_exact_vector(t, r, params)
    out = 1.0
    for p, c in zip(probs, n.counts):
        if c:
            out *= p**c
    return out


def cdf_from_table(table: dict[CumulativeType, int], t: float, params: StragglerParams) -> float:
    total = 0.0
    for n, c in sorted(table.items()):
        if c:
            total += c * type_probability(n, t, params)
    return min(max(total, 0.0), 1.0)


def completion_cdf(
    s: ScheduleMatrix, mode: Delivery, m_prime: int, t: float, params: StragglerParams
) -> float:
    """``Pr(T < t)``: probability that ``m_prime`` blocks are decodable at time ``t``."""
    return cdf_from_table(count_recoverable_by_type(s, mode, m_prime), t, params)


def _breakpoints(r: int, params: StragglerParams) -> list[float]:
    return [s * params.alpha for s in range(1, r + 1)]


def expected_from_table(
    table: dict[CumulativeType, int], r: int, params: StragglerParams, tail: float = 1e-9
) -> float:
    if not table:
        return 0.0
    k = next(iter(table)).workers
    if cdf_from_table(table, 0.0, params) >= 1.0:
        return 0.0
    # 1 - CDF <= Pr(some worker unfinished) <= K * exp(-mu (t/r - alpha))
    t_max = r * (params.alpha + math.log(max(k, 1) / tail) / params.mu)
    pts = [p for p in _breakpoints(r, params) if 0 < p < t_max]
    value, _ = integrate.quad(
        lambda t: 1.0 - cdf_from_table(table, t, params),
        0.0,
        t_max,
        points=pts or None,
        limit=500,
        epsabs=1e-10,
        epsrel=1e-10,
    )
    return value


def expected_completion_time(
    s: ScheduleMatrix, mode: Delivery, m_prime: int, params: StragglerParams
) -> float:
    """``E[T] = integral of (1 - CDF)`` over ``[0, inf)``, truncated where the tail is below 1e-9."""
    table = count_recoverable_by_type(s, mode, m_prime)
    return expected_from_table(table, s.rows, params)


def nonzero_coefficients(table: dict[CumulativeType, int]) -> list[tuple[CumulativeType, int]]:
    """Types that contribute to the CDF, most-finished first."""
    return sorted(((n, c) for n, c in table.items() if c), key=lambda nc: tuple(reversed(nc[0].counts)), reverse=True)


def check_table_total(table: dict[CumulativeType, int]) -> None:
    for n, c in table.items():
        if not 0 <= c <= n.multiplicity():
            raise ValueError(f"count {c} for type {n.counts} exceeds multiplicity {n.multiplicity()}")


def write_count_table(path, table: dict[CumulativeType, int]) -> None:
    r = next(iter(table)).r
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"type_N{s}" for s in range(r + 1)] + ["count"])
        for n in sorted(table):
            w.writerow(list(n.counts) + [table[n]])


def write_cdf(path, ts: Iterable[float], values: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "cdf"])
        for t, v in zip(ts, values):
            w.writerow([repr(float(t)), repr(float(v))])

