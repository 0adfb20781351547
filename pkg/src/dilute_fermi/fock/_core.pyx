# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled monomial application on occupation masks."""

from libc.stdint cimport uint64_t, int64_t, int32_t
from libcpp.vector cimport vector

import numpy as np


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int64_t _find(const uint64_t[::1] states, uint64_t s) noexcept nogil:
    cdef int64_t lo = 0
    cdef int64_t hi = states.shape[0]
    cdef int64_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if states[mid] < s:
            lo = mid + 1
        else:
            hi = mid
    if lo < states.shape[0] and states[lo] == s:
        return lo
    return -1


def apply_grouped(const uint64_t[::1] states_in, const uint64_t[::1] states_out,
                  const uint64_t[::1] group_mask, const int64_t[::1] group_start,
                  const int32_t[:, ::1] cre, const int32_t[:, ::1] ann,
                  const double complex[::1] coef):
    """COO triplets of the operator sum_t coef[t] cre[t]* ann[t] between two bases.

    Monomials are pre-sorted by annihilation mask; ``group_start`` has one
    more entry than ``group_mask``.  Returns (rows, cols, vals, dropped).
    """
    cdef vector[int64_t] rows
    cdef vector[int64_t] cols
    cdef vector[double complex] vals
    cdef int64_t n_in = states_in.shape[0]
    cdef int64_t n_groups = group_mask.shape[0]
    cdef int W = cre.shape[1]
    cdef int64_t j, g, t, pos, dropped = 0
    cdef uint64_t s0, s, A, bit
    cdef int q, m, ok
    cdef double sign
    with nogil:
        for j in range(n_in):
            s0 = states_in[j]
            for g in range(n_groups):
                A = group_mask[g]
                if (s0 & A) != A:
                    continue
                for t in range(group_start[g], group_start[g + 1]):
                    s = s0
                    sign = 1.0
                    ok = 1
                    for q in range(W - 1, -1, -1):
                        m = ann[t, q]
                        if m < 0:
                            continue
                        bit = (<uint64_t>1) << m
                        # repeated index: a_m a_m = 0
                        if not (s & bit):
                            ok = 0
                            break
                        if __builtin_popcountll(s & (bit - 1)) & 1:
                            sign = -sign
                        s ^= bit
                    for q in range(W - 1, -1, -1):
                        if not ok:
                            break
                        m = cre[t, q]
                        if m < 0:
                            continue
                        bit = (<uint64_t>1) << m
                        if s & bit:
                            ok = 0
                            break
                        if __builtin_popcountll(s & (bit - 1)) & 1:
                            sign = -sign
                        s |= bit
                    if not ok:
                        continue
                    pos = _find(states_out, s)
                    if pos < 0:
                        dropped += 1
                        continue
                    rows.push_back(pos)
                    cols.push_back(j)
                    vals.push_back(sign * coef[t])
    n = rows.size()
    r = np.empty(n, dtype=np.int64)
    c = np.empty(n, dtype=np.int64)
    v = np.empty(n, dtype=np.complex128)
    cdef int64_t[::1] rv = r
    cdef int64_t[::1] cv = c
    cdef double complex[::1] vv = v
    cdef int64_t i
    for i in range(n):
        rv[i] = rows[i]
        cv[i] = cols[i]
        vv[i] = vals[i]
    return r, c, v, dropped
