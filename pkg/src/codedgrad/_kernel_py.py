"""Pure-Python trial kernel (fallback for the compiled ``_kernel`` module).

Works for any prime, including the large Mersenne primes the dispatcher picks
for schedules whose minors could exceed 2**31 - 1.
"""

from __future__ import annotations

import math

import numpy as np


class IncrementalDecoder:
    """Reduced row-echelon form mod ``prime``, grown one codeword at a time."""

    def __init__(self, width: int, num_true: int, prime: int):
        self.width = width
        self.num_true = num_true
        self.prime = prime
        self.pivots: dict[int, dict[int, int]] = {}
        self.recovered = 0
        for b in range(num_true, width):
            self.pivots[b] = {b: 1}

    def add(self, row: dict[int, int]) -> bool:
        """Insert a codeword ``{block: coeff}``; return True if it raised the rank."""
        p = self.prime
        v = {c: x % p for c, x in row.items() if x % p}
        for c in [c for c in v if c in self.pivots]:
            f = v.get(c, 0)
            if not f:
                continue
            for cc, x in self.pivots[c].items():
                y = (v.get(cc, 0) - f * x) % p
                if y:
                    v[cc] = y
                else:
                    v.pop(cc, None)
        if not v:
            return False
        piv = min(v)
        inv = pow(v[piv], p - 2, p)
        v = {c: x * inv % p for c, x in v.items()}
        for prow in self.pivots.values():
            f = prow.get(piv, 0)
            if not f:
                continue
            for cc, x in v.items():
                y = (prow.get(cc, 0) - f * x) % p
                if y:
                    prow[cc] = y
                else:
                    prow.pop(cc, None)
        self.pivots[piv] = v
        self.recovered = sum(
            1 for c, prow in self.pivots.items() if c < self.num_true and len(prow) == 1
        )
        return True

    def recovered_blocks(self) -> list[int]:
        return sorted(c for c, prow in self.pivots.items() if c < self.num_true and len(prow) == 1)


def run_trials(coeffs, num_true, event_ptr, event_cells, order, times, thresholds, prime):
    """Replay message arrivals trial by trial and record when each threshold is met.

    ``coeffs``: (cells, width) integer matrix; ``event_ptr``/``event_cells``:
    CSR list of cells delivered by each message; ``order``: (trials, events)
    arrival order; ``times``: (trials, events) arrival times by event index;
    ``thresholds``: ascending block counts. Returns ``(T, load, recovered)``,
    each shaped (trials, len(thresholds)).
    """
    coeffs = np.asarray(coeffs)
    n_trials, n_events = order.shape
    n_thr = len(thresholds)
    width = coeffs.shape[1]
    rows = [{c: int(x) for c, x in enumerate(coeffs[i]) if x} for i in range(coeffs.shape[0])]
    cells = [list(map(int, event_cells[event_ptr[e]:event_ptr[e + 1]])) for e in range(n_events)]
    thr = [int(x) for x in thresholds]
    out_t = np.full((n_trials, n_thr), math.inf)
    out_load = np.zeros((n_trials, n_thr), dtype=np.int64)
    out_rec = np.zeros((n_trials, n_thr), dtype=np.int64)
    for trial in range(n_trials):
        dec = IncrementalDecoder(width, num_true, prime)
        nxt = 0
        while nxt < n_thr and thr[nxt] <= 0:
            out_t[trial, nxt] = 0.0
            nxt += 1
        step = 0
        while nxt < n_thr and step < n_events:
            e = int(order[trial, step])
            for cell in cells[e]:
                dec.add(rows[cell])
            step += 1
            while nxt < n_thr and thr[nxt] <= dec.recovered:
                out_t[trial, nxt] = times[trial, e]
                out_load[trial, nxt] = step
                out_rec[trial, nxt] = dec.recovered
                nxt += 1
        for j in range(nxt, n_thr):
            out_load[trial, j] = step
            out_rec[trial, j] = dec.recovered
    return out_t, out_load, out_rec
