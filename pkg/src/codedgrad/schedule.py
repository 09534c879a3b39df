"""Computation scheduling matrices for MCC, UC-MMC and CPGC.

A schedule is an ``r x K`` grid: cell ``(i, j)`` is the ``i``-th task executed
by worker ``j``. Every task is a :class:`Codeword`, a small integer combination
of the data blocks ``W_0 .. W_{M~-1}``. Block indices are 0-based throughout the
API; the text rendering uses 1-based ``W1, W2, ...`` names.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DimensionError, InfeasibleError, UnsupportedConfiguration


class Scheme(str, enum.Enum):
    MCC = "MCC"
    UC_MMC = "UC_MMC"
    CPGC = "CPGC"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; expected one of MCC, UC_MMC, CPGC") from None


class Delivery(str, enum.Enum):
    """How a worker reports results to the master."""

    MMC = "MMC"  # one message per finished task, sent immediately
    BUNDLED = "BUNDLED"  # one message once every assigned task is done


def default_delivery(scheme: Scheme) -> Delivery:
    return Delivery.BUNDLED if Scheme.parse(scheme) is Scheme.MCC else Delivery.MMC


@dataclass(frozen=True)
class Codeword:
    """Integer combination ``sum(coeff * W_block)`` of data blocks.

    ``terms`` is kept exactly as given so that malformed codewords can be
    represented and reported by :func:`validate_schedule`; use
    :meth:`from_terms` to build a canonical one.
    """

    terms: tuple[tuple[int, int], ...]

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, int]]) -> "Codeword":
        acc: dict[int, int] = {}
        for block, coeff in terms:
            acc[int(block)] = acc.get(int(block), 0) + int(coeff)
        return cls(tuple(sorted((b, c) for b, c in acc.items() if c != 0)))

    @classmethod
    def of(cls, *blocks: int) -> "Codeword":
        """Unit-coefficient sum of the given blocks."""
        return cls.from_terms((b, 1) for b in blocks)

    @property
    def degree(self) -> int:
        return len(self.terms)

    @property
    def blocks(self) -> tuple[int, ...]:
        return tuple(b for b, _ in self.terms)

    def is_canonical(self) -> bool:
        idx = self.blocks
        return (
            len(idx) >= 1
            and all(c != 0 for _, c in self.terms)
            and all(a < b for a, b in zip(idx, idx[1:]))
        )

    def dense(self, width: int) -> list[int]:
        row = [0] * width
        for b, c in self.terms:
            row[b] += c
        return row

    def __str__(self) -> str:
        parts = []
        for b, c in self.terms:
            name = f"W{b + 1}"
            parts.append(name if c == 1 else f"{c}{name}")
        return "+".join(parts) if parts else "0"


@dataclass(frozen=True)
class Partition:
    """Disjoint pairing of the block indices ``0 .. M-1``."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = [b for pair in self.pairs for b in pair]
        if len(seen) != len(set(seen)):
            raise ValueError(f"partition pairs overlap: {self.pairs}")

    def covers(self, m: int) -> bool:
        return sorted(b for pair in self.pairs for b in pair) == list(range(m))

    def codewords(self) -> list[Codeword]:
        return [Codeword.of(a, b) for a, b in self.pairs]


@dataclass(frozen=True)
class ScheduleMatrix:
    scheme: Scheme
    cells: tuple[tuple[Codeword, ...], ...]
    num_blocks: int
    padded_blocks: int
    # Evaluation points of the MDS code, only meaningful for MCC.
    eval_points: tuple[int, ...] = field(default=(), compare=False)

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    def cell(self, i: int, j: int) -> Codeword:
        return self.cells[i][j]

    def column(self, j: int) -> list[Codeword]:
        return [row[j] for row in self.cells]

    def all_codewords(self) -> list[Codeword]:
        return [cw for row in self.cells for cw in row]

    @property
    def padding(self) -> range:
        """Indices of the all-zero padding blocks."""
        return range(self.num_blocks, self.padded_blocks)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "rows": self.rows,
            "cols": self.cols,
            "num_blocks": self.num_blocks,
            "padded_blocks": self.padded_blocks,
            "eval_points": list(self.eval_points),
            "cells": [[[list(t) for t in cw.terms] for cw in row] for row in self.cells],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScheduleMatrix":
        cells = tuple(
            tuple(Codeword(tuple((int(b), int(c)) for b, c in cw)) for cw in row)
            for row in data["cells"]
        )
        sched = cls(
            scheme=Scheme.parse(data["scheme"]),
            cells=cells,
            num_blocks=int(data["num_blocks"]),
            padded_blocks=int(data["padded_blocks"]),
            eval_points=tuple(int(x) for x in data.get("eval_points", ())),
        )
        if sched.rows != int(data["rows"]) or sched.cols != int(data["cols"]):
            raise DimensionError("cell grid does not match declared rows/cols")
        return sched

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_text(self) -> str:
        width = max(len(str(cw)) for cw in self.all_codewords())
        lines = [
            f"# scheme={self.scheme.value} r={self.rows} K={self.cols} "
            f"M={self.num_blocks} padded={self.padded_blocks}"
        ]
        for row in self.cells:
            lines.append("  ".join(str(cw).ljust(width) for cw in row).rstrip())
        return "\n".join(lines) + "\n"


def circshift(v: Sequence, d: int) -> list:
    """Rotate ``v`` right by ``d`` places (left for negative ``d``)."""
    v = list(v)
    if not v:
        return v
    d %= len(v)
    return v[-d:] + v[:-d] if d else v


def _check_dims(m: int, k: int, r: int) -> None:
    for name, val in (("M", m), ("K", k), ("r", r)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise DimensionError(f"{name} must be a positive integer, got {val!r}")


def build_uc_mmc(m: int, k: int, r: int) -> ScheduleMatrix:
    """Uncoded cyclic-shift schedule: worker ``j`` runs blocks ``j, j+1, ...``."""
    _check_dims(m, k, r)
    if r > m:
        raise DimensionError(f"computation load r={r} exceeds block count M={m}")
    cells = tuple(tuple(Codeword.of((j + i) % m) for j in range(k)) for i in range(r))
    return ScheduleMatrix(Scheme.UC_MMC, cells, m, m)


def mds_eval_points(k: int, kind: "str | Sequence[int]" = "linear") -> tuple[int, ...]:
    if not isinstance(kind, str):
        pts = tuple(int(x) for x in kind)
        if len(pts) != k or len(set(pts)) != k:
            raise DimensionError(f"need {k} distinct evaluation points, got {pts}")
        return pts
    if kind == "linear":
        return tuple(range(1, k + 1))
    if kind == "powers_of_two":
        return tuple(2**j for j in range(k))
    raise ValueError(f"unknown evaluation point family {kind!r}")


def build_mcc(
    m: int, k: int, r: int, eval_points: "str | Sequence[int]" = "linear"
) -> ScheduleMatrix:
    """Vandermonde (polynomial) MDS schedule.

    Blocks are zero-padded to ``r * ceil(M / r)``; row ``i`` encodes the group
    ``{i, i+r, i+2r, ...}`` and worker ``k`` evaluates that group's polynomial at
    its own point ``x_k``. Any ``ceil(M / r)`` finished workers decode everything.
    """
    _check_dims(m, k, r)
    g = math.ceil(m / r)
    if k < g:
        raise InfeasibleError(f"K={k} workers cannot decode groups of {g} blocks (need K >= ceil(M/r))")
    xs = mds_eval_points(k, eval_points)
    padded = r * g
    cells = []
    for i in range(r):
        group = [i + r * j for j in range(g)]
        cells.append(
            tuple(Codeword.from_terms((b, x**p) for p, b in enumerate(group)) for x in xs)
        )
    return ScheduleMatrix(Scheme.MCC, tuple(cells), m, padded, eval_points=xs)


# --- CPGC --------------------------------------------------------------------


def adjacent_partition(n: int) -> Partition:
    """(1,2), (3,4), ... in 1-based terms."""
    return Partition(tuple((a, a + 1) for a in range(0, n, 2)))


def stride_partition(n: int, s: int) -> Partition:
    """Pairs ``(b+i, b+s+i)`` inside consecutive runs of ``2s`` blocks.

    ``s=1`` is :func:`adjacent_partition`; ``s=2`` gives (1,3),(2,4),(5,7),(6,8),...
    A tail shorter than ``2s`` is paired adjacently.
    """
    pairs = []
    full = n - n % (2 * s)
    for base in range(0, full, 2 * s):
        pairs.extend((base + i, base + s + i) for i in range(s))
    pairs.extend((a, a + 1) for a in range(full, n, 2))
    return Partition(tuple(pairs))


def mirror_partition(n: int) -> Partition:
    """(1,N), (2,N-1), ..., (N/2, N/2+1)."""
    return Partition(tuple((a, n - 1 - a) for a in range(n // 2)))


def half_offset_partition(n: int) -> Partition:
    """(1, N/2+1), (2, N/2+2), ..., (N/2, N)."""
    return Partition(tuple((a, n // 2 + a) for a in range(n // 2)))


# The published placement: (partition, circular shift) for the left and right half of rows 2 and 3.
_CPGC_ROW_PLAN = (
    ((adjacent_partition, -1), (lambda n: stride_partition(n, 2), -1)),
    ((mirror_partition, 1), (half_offset_partition, -2)),
)

# The K=4 matrix interleaves partitions across columns, so it is written out directly.
_CPGC_K4_ROW2 = (Codeword.of(2, 3), Codeword.of(0, 2), Codeword.of(1, 3), Codeword.of(0, 1))


def _shift_order(default: int, half: int) -> list[int]:
    rng = range(-half, half + 1)
    return [default] + sorted((d for d in rng if d != default), key=lambda d: (abs(d), d))


def _fits(columns: list[set[int]], offset: int, placed: Sequence[Codeword]) -> bool:
    return all(not (columns[offset + j] & set(cw.blocks)) for j, cw in enumerate(placed))


def _repair_by_swaps(columns: list[set[int]], offset: int, placed: list[Codeword]) -> list[Codeword] | None:
    """Resolve column clashes by exchanging cells within the half-row, nearest cell first."""
    placed = list(placed)

    def clash(j: int, cw: Codeword) -> bool:
        return bool(columns[offset + j] & set(cw.blocks))

    for j in range(len(placed)):
        if not clash(j, placed[j]):
            continue
        for jj in sorted(range(len(placed)), key=lambda x: (abs(x - j), x)):
            if jj != j and not clash(j, placed[jj]) and not clash(jj, placed[j]):
                placed[j], placed[jj] = placed[jj], placed[j]
                break
        else:
            return None
    return placed


def _place_half(
    columns: list[set[int]], offset: int, part: Partition, default_shift: int
) -> list[Codeword] | None:
    words = part.codewords()
    placed = circshift(words, default_shift)
    if _fits(columns, offset, placed):
        return placed
    repaired = _repair_by_swaps(columns, offset, placed)
    if repaired is not None:
        return repaired
    for d in _shift_order(default_shift, len(words) // 2 + 1)[1:]:
        placed = circshift(words, d)
        if _fits(columns, offset, placed):
            return placed
    return None


def _extra_partitions(n: int) -> Iterable[Partition]:
    """Candidate partitions for rows beyond the third."""
    for s in itertools.count(3):
        if s > n // 2:
            return
        yield stride_partition(n, s)


def _candidate_partitions(n: int) -> list[Partition]:
    out = [adjacent_partition(n), mirror_partition(n), half_offset_partition(n)]
    out += [stride_partition(n, s) for s in range(2, n // 2 + 1)]
    if n <= 10:
        # small clusters: fall back to every perfect pairing (at most 945)
        out += [Partition(tuple(p)) for p in _all_pairings(list(range(n)))]
    unique = {frozenset(p.pairs): p for p in out}
    return list(unique.values())


def _all_pairings(items: list[int]) -> Iterable[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    a, rest = items[0], items[1:]
    for k, b in enumerate(rest):
        for tail in _all_pairings(rest[:k] + rest[k + 1 :]):
            yield [(a, b)] + tail


def _match_columns(columns: list[set[int]], words: Sequence[Codeword]) -> list[Codeword] | None:
    """Assign one codeword per column without repeating a block in any column."""
    n = len(columns)
    adj = np.array([[not (columns[j] & set(cw.blocks)) for j in range(n)] for cw in words], dtype=np.int8)
    match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
    if np.any(match < 0):
        return None
    row: list[Codeword | None] = [None] * n
    for w, j in enumerate(match):
        row[j] = words[w]
    return row  # type: ignore[return-value]


def build_cpgc(m: int, k: int, r: int) -> ScheduleMatrix:
    """Coded partial-gradient schedule.

    Row 1 is uncoded (worker ``j`` gets ``W_j``); every later task is the sum of
    two blocks drawn from a disjoint pairing, placed so that no block appears
    twice in any worker's column.
    """
    _check_dims(m, k, r)
    if m != k:
        raise UnsupportedConfiguration(f"CPGC needs M == K, got M={m}, K={k}")
    if m % 2:
        raise UnsupportedConfiguration(f"CPGC needs an even block count, got M={m}")
    n = m
    rows: list[tuple[Codeword, ...]] = [tuple(Codeword.of(j) for j in range(n))]
    if r == 1:
        return ScheduleMatrix(Scheme.CPGC, tuple(rows), m, m)
    if r > n:
        raise UnsupportedConfiguration(f"CPGC load r={r} exceeds block count {n}")
    if n == 4 and r == 2:
        rows.append(_CPGC_K4_ROW2)
        return ScheduleMatrix(Scheme.CPGC, tuple(rows), m, m)
    if n == 2:
        # the only pairing is {W1, W2}; a column repeat cannot be avoided
        rows.append((Codeword.of(0, 1), Codeword.of(0, 1)))
        return ScheduleMatrix(Scheme.CPGC, tuple(rows), m, m)

    columns = [{j} for j in range(n)]
    used: set[frozenset] = set()
    half = n // 2

    def place_row(plan) -> bool:
        row: list[Codeword] = []
        for (make, shift), offset in zip(plan, (0, half)):
            part = make(n)
            placed = _place_half(columns, offset, part, shift)
            if placed is None:
                return False
            row.extend(placed)
        # a pair may straddle the half boundary when n/2 is odd; placement above is per half only
        for j, cw in enumerate(row):
            columns[j].update(cw.blocks)
        rows.append(tuple(row))
        used.update(frozenset(p.pairs) for p in (make(n) for make, _ in plan))
        return True

    def place_matched() -> bool:
        pool = [p for p in _candidate_partitions(n) if frozenset(p.pairs) not in used]
        for a, b in itertools.combinations(pool, 2):
            words = a.codewords() + b.codewords()
            row = _match_columns(columns, words)
            if row is not None:
                for j, cw in enumerate(row):
                    columns[j].update(cw.blocks)
                rows.append(tuple(row))
                used.update((frozenset(a.pairs), frozenset(b.pairs)))
                return True
        return False

    if 2 * r - 1 > n:
        raise UnsupportedConfiguration(
            f"column-distinct CPGC needs 2r-1 <= M blocks per worker, got M=K={n}, r={r}"
        )
    for plan in _CPGC_ROW_PLAN[: r - 1]:
        if not place_row(plan) and not place_matched():
            raise UnsupportedConfiguration(f"no column-distinct placement for CPGC (M=K={n}, r={r})")

    extra = (p for p in _extra_partitions(n) if frozenset(p.pairs) not in used)
    while len(rows) < r:
        pair = list(itertools.islice(extra, 2))
        ok = len(pair) == 2 and place_row(tuple((lambda _n, p=p: p, 0) for p in pair))
        if not ok and not place_matched():
            raise UnsupportedConfiguration(f"no column-distinct placement for CPGC (M=K={n}, r={r})")
    return ScheduleMatrix(Scheme.CPGC, tuple(rows), m, m)


def build_schedule(scheme: "Scheme | str", m: int, k: int, r: int, **kwargs) -> ScheduleMatrix:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.MCC:
        return build_mcc(m, k, r, **kwargs)
    if scheme is Scheme.UC_MMC:
        return build_uc_mmc(m, k, r)
    return build_cpgc(m, k, r)


# --- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schedule(s: ScheduleMatrix) -> ValidationReport:
    """Check structural constraints; never raises."""
    rep = ValidationReport()
    for i, row in enumerate(s.cells):
        if len(row) != s.cols:
            rep.violations.append(f"row {i + 1} has {len(row)} cells, expected {s.cols}")
    for i, row in enumerate(s.cells):
        for j, cw in enumerate(row):
            where = f"cell ({i + 1},{j + 1}) {cw}"
            if not cw.is_canonical():
                idx = cw.blocks
                if len(idx) != len(set(idx)):
                    rep.violations.append(f"{where}: duplicate block index")
                else:
                    rep.violations.append(f"{where}: not in canonical form")
            if any(not 0 <= b < s.padded_blocks for b in cw.blocks):
                rep.violations.append(f"{where}: block index out of range [0, {s.padded_blocks})")

    if s.scheme is Scheme.CPGC:
        for j, cw in enumerate(s.cells[0] if s.cells else ()):
            if cw.degree != 1 or cw.terms[0][1] != 1:
                rep.violations.append(f"cell (1,{j + 1}) {cw}: first task must be uncoded")
        for i, row in enumerate(s.cells):
            for j, cw in enumerate(row):
                if cw.degree > 2:
                    rep.violations.append(f"cell ({i + 1},{j + 1}) {cw}: degree {cw.degree} > 2")
                if any(c != 1 for _, c in cw.terms):
                    rep.violations.append(f"cell ({i + 1},{j + 1}) {cw}: coefficients must be 1")
        for j in range(s.cols):
            col = s.column(j)
            seen = [b for cw in col for b in cw.blocks]
            dup = sorted({b for b in seen if seen.count(b) > 1})
            if dup:
                names = ", ".join(f"W{b + 1}" for b in dup)
                msg = f"column {j + 1}: {names} appear more than once"
                # unavoidable when a single task already touches every block
                if any(cw.degree >= s.num_blocks for cw in col[1:]):
                    rep.warnings.append(msg)
                else:
                    rep.violations.append(msg)
        # coded rows should be disjoint covers (two partitions per row, one per half)
        for i, row in enumerate(s.cells[1:], start=2):
            counts: dict[int, int] = {}
            for cw in row:
                for b in cw.blocks:
                    counts[b] = counts.get(b, 0) + 1
            if sorted(counts) != list(range(s.num_blocks)) or set(counts.values()) != {2}:
                rep.violations.append(f"row {i}: not built from two disjoint pairings of all blocks")
        words = [cw for row in s.cells[1:] for cw in row]
        repeated = sorted({str(cw) for cw in words if words.count(cw) > 1})
        if repeated:
            rep.warnings.append("redundant coded tasks: " + ", ".join(repeated))
    return rep
