"""Exact recoverability decisions over the rationals.

Everything here is integer/``Fraction`` arithmetic; no floating point is used to
decide ranks. Besides the yes/no answer, :func:`decode` returns for every
recovered block the rational combination of received results that produces it,
which is what the gradient-descent pipeline applies to real task outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DimensionError, ParameterError
from .schedule import Codeword, Delivery, ScheduleMatrix


def check_score_vector(s: ScheduleMatrix, counts: Sequence[int]) -> tuple[int, ...]:
    counts = tuple(int(c) for c in counts)
    if len(counts) != s.cols:
        raise DimensionError(f"score vector has {len(counts)} entries, schedule has {s.cols} workers")
    bad = [c for c in counts if not 0 <= c <= s.rows]
    if bad:
        raise DimensionError(f"score entries must lie in [0, {s.rows}], got {bad}")
    return counts


def received_cells(
    s: ScheduleMatrix, counts: Sequence[int], mode: Delivery = Delivery.MMC
) -> list[tuple[int, int]]:
    """``(task, worker)`` positions whose results have reached the master."""
    counts = check_score_vector(s, counts)
    mode = Delivery(mode)
    out = []
    for j, c in enumerate(counts):
        if mode is Delivery.MMC:
            out.extend((i, j) for i in range(c))
        elif c == s.rows:
            out.extend((i, j) for i in range(s.rows))
    return out


def received_codewords(
    s: ScheduleMatrix, counts: Sequence[int], mode: Delivery = Delivery.MMC
) -> list[Codeword]:
    return [s.cell(i, j) for i, j in received_cells(s, counts, mode)]


@dataclass
class RecoveryReport:
    recoverable_blocks: frozenset[int]
    rank: int
    num_blocks: int
    # block -> {index into the received list: coefficient}
    combinations: dict[int, dict[int, Fraction]] = field(default_factory=dict, repr=False)

    @property
    def full(self) -> bool:
        return len(self.recoverable_blocks) == self.num_blocks

    @property
    def count(self) -> int:
        return len(self.recoverable_blocks)


def decode(
    codewords: Sequence[Codeword], num_blocks: int, padded_blocks: int | None = None
) -> RecoveryReport:
    """Reduced row-echelon form of the received system, with provenance.

    Padding blocks (indices ``num_blocks .. padded_blocks-1``) are known to be
    zero and enter the system as free unit rows; they never count as recovered.
    Block ``i`` is recoverable iff ``e_i`` lies in the row space, which in RREF
    means some pivot row is exactly ``e_i``.
    """
    width = num_blocks if padded_blocks is None else padded_blocks
    if width < num_blocks:
        raise DimensionError("padded block count below true block count")
    # each row: (coefficients over blocks, combination over inputs); padding rows carry no inputs
    rows: list[tuple[list[Fraction], dict[int, Fraction]]] = []
    for idx, cw in enumerate(codewords):
        if any(not 0 <= b < width for b in cw.blocks):
            raise DimensionError(f"codeword {cw} references a block outside [0, {width})")
        rows.append(([Fraction(x) for x in cw.dense(width)], {idx: Fraction(1)}))
    for b in range(num_blocks, width):
        unit = [Fraction(0)] * width
        unit[b] = Fraction(1)
        rows.append((unit, {}))

    pivots: list[int] = []
    rank_rows: list[tuple[list[Fraction], dict[int, Fraction]]] = []
    pending = rows
    for col in range(width):
        pick = next((k for k, (v, _) in enumerate(pending) if v[col] != 0), None)
        if pick is None:
            continue
        v, comb = pending.pop(pick)
        inv = 1 / v[col]
        v = [x * inv for x in v]
        comb = {k: c * inv for k, c in comb.items()}
        pending = [_eliminate(row, (v, comb), col) for row in pending]
        rank_rows = [_eliminate(row, (v, comb), col) for row in rank_rows]
        rank_rows.append((v, comb))
        pivots.append(col)

    recovered: dict[int, dict[int, Fraction]] = {}
    for (v, comb), p in zip(rank_rows, pivots):
        if p < num_blocks and all(x == 0 for c, x in enumerate(v) if c != p):
            recovered[p] = {k: c for k, c in comb.items() if c != 0}
    real_rank = len(pivots) - (width - num_blocks)
    return RecoveryReport(frozenset(recovered), max(real_rank, 0), num_blocks, recovered)


def _eliminate(row, pivot_row, col):
    v, comb = row
    f = v[col]
    if f == 0:
        return row
    pv, pcomb = pivot_row
    v = [a - f * b for a, b in zip(v, pv)]
    comb = dict(comb)
    for k, c in pcomb.items():
        comb[k] = comb.get(k, Fraction(0)) - f * c
    return v, comb


def recoverable_blocks(
    codewords: Sequence[Codeword], num_blocks: int, padded_blocks: int | None = None
) -> RecoveryReport:
    return decode(codewords, num_blocks, padded_blocks)


def recover_from_schedule(
    s: ScheduleMatrix, counts: Sequence[int], mode: Delivery = Delivery.MMC
) -> RecoveryReport:
    return decode(received_codewords(s, counts, mode), s.num_blocks, s.padded_blocks)


def meets_threshold(report: RecoveryReport, m_prime: int) -> bool:
    if not 0 <= m_prime <= report.num_blocks:
        raise ParameterError(f"threshold M'={m_prime} outside [0, {report.num_blocks}]")
    return report.count >= m_prime


def peel(codewords: Sequence[Codeword], num_blocks: int) -> frozenset[int]:
    """Iterative peeling: resolve degree-one codewords and substitute them away.

    Weaker than elimination: cycles of degree-two codewords never resolve.
    """
    pending = [dict(cw.terms) for cw in codewords]
    known: set[int] = set()
    progress = True
    while progress:
        progress = False
        for terms in pending:
            for b in [b for b in terms if b in known]:
                del terms[b]
            if len(terms) == 1:
                (b,) = terms
                if b not in known:
                    known.add(b)
                    progress = True
                terms.clear()
        pending = [t for t in pending if t]
    return frozenset(b for b in known if b < num_blocks)
