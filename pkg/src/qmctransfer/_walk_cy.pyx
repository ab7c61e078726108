# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the self-balancing walk.

Both entry points share the exact floating-point evaluation order and the
splitmix64 draw discipline of the pure-Python fallback in ``_walk_py``, so a
given (vectors, lambda, seed) triple yields bit-identical colorings on either
backend.  A uniform variate is consumed only when a sign is actually sampled;
the greedy override consumes nothing.

The accumulator ``wacc`` is caller-owned scratch.  Kernels zero every
coordinate they touched before returning (also on failure), so the same
buffer can be reused across walks without re-allocation.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t, int8_t


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _next_uniform(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    return <double>(_mix64(state[0]) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int _choose_sign(double dot, double lam, bint greedy,
                             uint64_t* state) nogil:
    cdef double p
    if greedy and (dot > lam or dot < -lam):
        return -1 if dot > 0 else 1
    p = 0.5 - dot / (2.0 * lam)
    if p < 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    return 1 if _next_uniform(state) < p else -1


def walk_pairs_uniform(int64_t[:, ::1] ids, double[::1] colw, int64_t[::1] order,
                       double[::1] wacc, double lam, bint greedy, bint strict,
                       uint64_t seed, int8_t[::1] signs):
    """Walk over difference vectors of consecutive row pairs of ``ids``.

    ids[r] holds the coordinate indices of vector r; every row shares the
    column weights ``colw``.  Pair i is row order[2i] minus row order[2i+1].
    Returns -1 on success, else the failing pair index (strict mode only).
    """
    cdef Py_ssize_t npairs = order.shape[0] // 2
    cdef Py_ssize_t P = ids.shape[1]
    cdef Py_ssize_t i, p, r, q
    cdef int64_t a, b
    cdef double dot, w, wmax_seen = 0.0, cur
    cdef int c
    cdef int fail = -1
    cdef uint64_t state = seed

    for i in range(npairs):
        a = order[2 * i]
        b = order[2 * i + 1]
        dot = 0.0
        for p in range(P):
            dot += colw[p] * wacc[ids[a, p]]
        for p in range(P):
            dot -= colw[p] * wacc[ids[b, p]]
        if strict:
            if dot > lam or dot < -lam:
                fail = <int>i
                break
            if wmax_seen > lam:
                # the running bound is monotone; recompute the true max
                # over touched coordinates before declaring failure
                cur = 0.0
                for r in range(2 * i):
                    q = order[r]
                    for p in range(P):
                        w = wacc[ids[q, p]]
                        if w < 0.0:
                            w = -w
                        if w > cur:
                            cur = w
                wmax_seen = cur
                if cur > lam:
                    fail = <int>i
                    break
        c = _choose_sign(dot, lam, greedy, &state)
        signs[i] = <int8_t>c
        for p in range(P):
            wacc[ids[a, p]] += c * colw[p]
            w = wacc[ids[a, p]]
            if w < 0.0:
                w = -w
            if w > wmax_seen:
                wmax_seen = w
        for p in range(P):
            wacc[ids[b, p]] -= c * colw[p]
            w = wacc[ids[b, p]]
            if w < 0.0:
                w = -w
            if w > wmax_seen:
                wmax_seen = w

    # zero everything we touched so the buffer is clean for the next node
    for r in range(order.shape[0]):
        q = order[r]
        for p in range(P):
            wacc[ids[q, p]] = 0.0
    return fail


def walk_stream_csr(int64_t[::1] indptr, int64_t[::1] idx, double[::1] vals,
                    double[::1] wacc, double lam, bint greedy, bint strict,
                    uint64_t seed, int8_t[::1] signs):
    """Walk over an explicit CSR stream of vectors (one sign per vector).

    Returns -1 on success, else the failing step index (strict mode only).
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t j, p
    cdef double dot, w, wmax_seen = 0.0, cur
    cdef int c
    cdef int fail = -1
    cdef uint64_t state = seed

    for j in range(n):
        dot = 0.0
        for p in range(indptr[j], indptr[j + 1]):
            dot += vals[p] * wacc[idx[p]]
        if strict:
            if dot > lam or dot < -lam:
                fail = <int>j
                break
            if wmax_seen > lam:
                cur = 0.0
                for p in range(indptr[j]):
                    w = wacc[idx[p]]
                    if w < 0.0:
                        w = -w
                    if w > cur:
                        cur = w
                wmax_seen = cur
                if cur > lam:
                    fail = <int>j
                    break
        c = _choose_sign(dot, lam, greedy, &state)
        signs[j] = <int8_t>c
        for p in range(indptr[j], indptr[j + 1]):
            wacc[idx[p]] += c * vals[p]
            w = wacc[idx[p]]
            if w < 0.0:
                w = -w
            if w > wmax_seen:
                wmax_seen = w

    for p in range(indptr[n]):
        wacc[idx[p]] = 0.0
    return fail
