# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel: incremental RREF modulo several primes below 2**31.

Same contract as ``codedgrad._kernel_py.run_trials`` except that it takes a list
of word-size primes instead of one large prime. When the product of the primes
exceeds every nonzero minor, no minor vanishes modulo all of them, so the
rational rank of any row set is the largest of the modular ranks; a block is
decodable iff every prime attaining that rank has it as a singleton pivot row.
"""

import numpy as np
from libc.stdlib cimport calloc, free

ctypedef long long i64

MAX_PRIME = 2147483647


cdef inline i64 _powmod(i64 a, i64 e, i64 p) noexcept nogil:
    cdef i64 result = 1
    a %= p
    while e > 0:
        if e & 1:
            result = result * a % p
        a = a * a % p
        e >>= 1
    return result


cdef int _insert(i64* rows, int* piv_of_col, int* row_piv, int* nrows,
                 const i64* src, i64* v, int width, i64 p) noexcept nogil:
    """Reduce ``src`` against one basis; append it if independent."""
    cdef int c, k, pc
    cdef i64 f, inv
    cdef i64* prow
    for c in range(width):
        v[c] = src[c] % p
        if v[c] < 0:
            v[c] += p
    for k in range(nrows[0]):
        pc = row_piv[k]
        f = v[pc]
        if f == 0:
            continue
        prow = rows + k * width
        for c in range(width):
            if prow[c] != 0:
                v[c] = (v[c] - f * prow[c]) % p
                if v[c] < 0:
                    v[c] += p
    pc = -1
    for c in range(width):
        if v[c] != 0:
            pc = c
            break
    if pc < 0:
        return 0
    inv = _powmod(v[pc], p - 2, p)
    for c in range(width):
        if v[c] != 0:
            v[c] = v[c] * inv % p
    for k in range(nrows[0]):
        prow = rows + k * width
        f = prow[pc]
        if f == 0:
            continue
        for c in range(width):
            if v[c] != 0:
                prow[c] = (prow[c] - f * v[c]) % p
                if prow[c] < 0:
                    prow[c] += p
    prow = rows + nrows[0] * width
    for c in range(width):
        prow[c] = v[c]
    row_piv[nrows[0]] = pc
    piv_of_col[pc] = nrows[0]
    nrows[0] += 1
    return 1


cdef inline bint _singleton(const i64* rows, const int* piv_of_col, int col, int width) noexcept nogil:
    cdef int k = piv_of_col[col]
    cdef int c
    if k < 0:
        return 0
    for c in range(width):
        if c != col and rows[k * width + c] != 0:
            return 0
    return 1


cdef int _count_recovered(const i64* rows, const int* piv_of_col, const int* nrows,
                          int n_primes, int width, int num_true) noexcept nogil:
    cdef int q, i, best = 0, total = 0
    cdef bint ok
    for q in range(n_primes):
        if nrows[q] > best:
            best = nrows[q]
    for i in range(num_true):
        ok = 1
        for q in range(n_primes):
            if nrows[q] == best and not _singleton(rows + q * width * width, piv_of_col + q * width, i, width):
                ok = 0
                break
        if ok:
            total += 1
    return total


def run_trials(coeffs, int num_true, event_ptr, event_cells, order, times, thresholds, primes):
    primes_arr = np.atleast_1d(np.asarray(primes, dtype=np.int64))
    if primes_arr.size == 0 or primes_arr.max() > MAX_PRIME or primes_arr.min() < 2:
        raise ValueError("compiled kernel needs primes in [2, 2**31)")
    cdef i64[:, ::1] cf = np.ascontiguousarray(coeffs, dtype=np.int64)
    cdef i64[::1] eptr = np.ascontiguousarray(event_ptr, dtype=np.int64)
    cdef i64[::1] ecells = np.ascontiguousarray(event_cells, dtype=np.int64)
    cdef i64[:, ::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef double[:, ::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef i64[::1] thr = np.ascontiguousarray(thresholds, dtype=np.int64)
    cdef i64[::1] pv = primes_arr
    cdef int n_primes = pv.shape[0]
    cdef int n_trials = ordv.shape[0]
    cdef int n_events = ordv.shape[1]
    cdef int n_thr = thr.shape[0]
    cdef int width = cf.shape[1]

    out_t_arr = np.full((n_trials, n_thr), np.inf)
    out_load_arr = np.zeros((n_trials, n_thr), dtype=np.int64)
    out_rec_arr = np.zeros((n_trials, n_thr), dtype=np.int64)
    cdef double[:, ::1] out_t = out_t_arr
    cdef i64[:, ::1] out_load = out_load_arr
    cdef i64[:, ::1] out_rec = out_rec_arr

    cdef i64* rows = <i64*> calloc(n_primes * width * width, sizeof(i64))
    cdef i64* v = <i64*> calloc(width, sizeof(i64))
    cdef i64* unit = <i64*> calloc(width, sizeof(i64))
    cdef int* piv_of_col = <int*> calloc(n_primes * width, sizeof(int))
    cdef int* row_piv = <int*> calloc(n_primes * width, sizeof(int))
    cdef int* nrows = <int*> calloc(n_primes, sizeof(int))
    cdef int trial, nxt, step, e, q, b, rec, j, c
    cdef bint grew
    if not (rows and v and unit and piv_of_col and row_piv and nrows):
        free(rows); free(v); free(unit); free(piv_of_col); free(row_piv); free(nrows)
        raise MemoryError()
    try:
        with nogil:
            for trial in range(n_trials):
                for q in range(n_primes):
                    nrows[q] = 0
                    for c in range(width):
                        piv_of_col[q * width + c] = -1
                    # padding blocks are known zeros
                    for b in range(num_true, width):
                        for c in range(width):
                            unit[c] = 0
                        unit[b] = 1
                        _insert(rows + q * width * width, piv_of_col + q * width, row_piv + q * width,
                                &nrows[q], unit, v, width, pv[q])
                rec = 0
                nxt = 0
                while nxt < n_thr and thr[nxt] <= 0:
                    out_t[trial, nxt] = 0.0
                    nxt += 1
                step = 0
                while nxt < n_thr and step < n_events:
                    e = <int> ordv[trial, step]
                    grew = 0
                    for j in range(<int> eptr[e], <int> eptr[e + 1]):
                        for q in range(n_primes):
                            if _insert(rows + q * width * width, piv_of_col + q * width, row_piv + q * width,
                                       &nrows[q], &cf[ecells[j], 0], v, width, pv[q]):
                                grew = 1
                    if grew:
                        rec = _count_recovered(rows, piv_of_col, nrows, n_primes, width, num_true)
                    step += 1
                    while nxt < n_thr and thr[nxt] <= rec:
                        out_t[trial, nxt] = tv[trial, e]
                        out_load[trial, nxt] = step
                        out_rec[trial, nxt] = rec
                        nxt += 1
                for j in range(nxt, n_thr):
                    out_load[trial, j] = step
                    out_rec[trial, j] = rec
    finally:
        free(rows); free(v); free(unit); free(piv_of_col); free(row_piv); free(nrows)
    return out_t_arr, out_load_arr, out_rec_arr
