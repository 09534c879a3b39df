"""Backend selection for the Monte Carlo trial kernel.

The kernels decode by elimination modulo primes. Hadamard's inequality bounds
every minor of the received system by the product of the largest row norms.
Modulo a single prime above that bound, every row subset keeps its rational
rank; :func:`certified_prime` picks the smallest such Mersenne prime for the
pure-Python kernel, which works with arbitrary-size integers. The compiled
kernel instead runs several word-size primes side by side
(:func:`certified_word_primes`) whose product exceeds the bound, which is
equally exact.

Set ``CODEDGRAD_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py
from .schedule import ScheduleMatrix

try:
    if os.environ.get("CODEDGRAD_PURE_PYTHON"):
        raise ImportError("pure-Python kernel forced by environment")
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

COMPILED = _compiled is not None
COMPILED_MAX_PRIME = 2**31 - 1
_MERSENNE_EXPONENTS = (31, 61, 89, 107, 127, 521, 607, 1279, 2203, 2281, 3217, 4253, 4423)


def hadamard_bound_squared(s: ScheduleMatrix) -> int:
    """Square of an upper bound on every minor of ``[codewords; unit rows]``."""
    norms = sorted((sum(c * c for _, c in cw.terms) for cw in s.all_codewords()), reverse=True)
    out = 1
    for n2 in norms[: s.padded_blocks]:
        out *= max(n2, 1)
    return out


def certified_prime(s: ScheduleMatrix) -> int:
    bound2 = hadamard_bound_squared(s)
    for e in _MERSENNE_EXPONENTS:
        p = 2**e - 1
        if p * p > bound2:
            return p
    raise ValueError("schedule coefficients too large for the built-in prime list")


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _word_primes(count: int) -> list[int]:
    out, n = [], COMPILED_MAX_PRIME
    while len(out) < count:
        if _is_prime(n):
            out.append(n)
        n -= 2
    return out


def certified_word_primes(s: ScheduleMatrix) -> tuple[int, ...]:
    """Fewest primes below ``2**31`` whose product exceeds every minor."""
    bound2 = hadamard_bound_squared(s)
    count = 1
    while True:
        primes = _word_primes(count)
        prod = 1
        for p in primes:
            prod *= p
        if prod * prod > bound2:
            return tuple(primes)
        count += 1


def backend_name(force_python: bool = False) -> str:
    return "compiled" if COMPILED and not force_python else "python"


def run_trials(coeffs, num_true, event_ptr, event_cells, order, times, thresholds,
               prime, word_primes, force_python=False):
    """Dispatch to the compiled or pure-Python kernel; both are exact, so results agree."""
    if backend_name(force_python) == "compiled":
        return _compiled.run_trials(
            np.ascontiguousarray(coeffs, dtype=np.int64), int(num_true), event_ptr, event_cells,
            order, times, thresholds, np.asarray(word_primes, dtype=np.int64),
        )
    return _kernel_py.run_trials(coeffs, num_true, event_ptr, event_cells, order, times, thresholds, prime)


IncrementalDecoder = _kernel_py.IncrementalDecoder
