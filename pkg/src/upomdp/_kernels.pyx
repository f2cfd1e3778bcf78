# cython: language_level=3
"""Compiled sweep kernel for robust value iteration over interval rows.

Rows are stored CSR-style: state s owns entries [indptr[s], indptr[s+1]) of
``indices``/``lo``/``hi``.  Each sweep resolves every row's inner optimization
greedily: start at the lower bounds and spend the remaining mass on successors
in value order (ascending when nature minimizes, descending when it
maximizes), ties broken by ascending successor id.

Accumulation order is fixed (lower-bound terms in index order, then the
greedy top-ups in sorted order) so results match the pure-Python fallback
bit for bit.
"""

import numpy as np


cdef double _row_opt(
    const long[::1] indices,
    const double[::1] lo,
    const double[::1] hi,
    const double[::1] v,
    long start,
    long end,
    bint minimize,
    long[::1] order,
) nogil:
    cdef long m = end - start
    cdef long i, j, k, idx
    cdef double val = 0.0
    cdef double slack = 1.0
    cdef double take, key

    for i in range(m):
        idx = indices[start + i]
        val += lo[start + i] * v[idx]
        slack -= lo[start + i]
        order[i] = i

    # Stable insertion sort by successor value; stability keeps the
    # ascending-id tie-break because indices within a row are ascending.
    for i in range(1, m):
        j = order[i]
        key = v[indices[start + j]]
        k = i
        if minimize:
            while k > 0 and v[indices[start + order[k - 1]]] > key:
                order[k] = order[k - 1]
                k -= 1
        else:
            while k > 0 and v[indices[start + order[k - 1]]] < key:
                order[k] = order[k - 1]
                k -= 1
        order[k] = j

    for i in range(m):
        if slack <= 0.0:
            break
        j = order[i]
        take = hi[start + j] - lo[start + j]
        if take > slack:
            take = slack
        val += take * v[indices[start + j]]
        slack -= take
    return val


def vi_sweep(
    const long[::1] indptr,
    const long[::1] indices,
    const double[::1] lo,
    const double[::1] hi,
    const double[::1] reward,
    const unsigned char[::1] goal,
    const double[::1] v_in,
    double[::1] v_out,
    bint minimize,
    long[::1] scratch,
):
    """One Jacobi sweep; returns the sup-norm residual."""
    cdef long n = indptr.shape[0] - 1
    cdef long s
    cdef double residual = 0.0
    cdef double nv, d

    with nogil:
        for s in range(n):
            if goal[s]:
                nv = 0.0
            else:
                nv = reward[s] + _row_opt(
                    indices, lo, hi, v_in, indptr[s], indptr[s + 1], minimize, scratch
                )
            d = nv - v_in[s]
            if d < 0.0:
                d = -d
            if d > residual:
                residual = d
            v_out[s] = nv
    return residual


def extremal_rows(
    const long[::1] indptr,
    const long[::1] indices,
    const double[::1] lo,
    const double[::1] hi,
    const double[::1] v,
    bint minimize,
    long[::1] scratch,
    double[::1] probs_out,
):
    """Fill ``probs_out`` (nnz-length) with nature's greedy choice per row."""
    cdef long n = indptr.shape[0] - 1
    cdef long s, start, end, m, i, j, k, idx
    cdef double slack, take, key

    with nogil:
        for s in range(n):
            start = indptr[s]
            end = indptr[s + 1]
            m = end - start
            slack = 1.0
            for i in range(m):
                probs_out[start + i] = lo[start + i]
                slack -= lo[start + i]
                scratch[i] = i
            for i in range(1, m):
                j = scratch[i]
                key = v[indices[start + j]]
                k = i
                if minimize:
                    while k > 0 and v[indices[start + scratch[k - 1]]] > key:
                        scratch[k] = scratch[k - 1]
                        k -= 1
                else:
                    while k > 0 and v[indices[start + scratch[k - 1]]] < key:
                        scratch[k] = scratch[k - 1]
                        k -= 1
                scratch[k] = j
            for i in range(m):
                if slack <= 0.0:
                    break
                j = scratch[i]
                take = hi[start + j] - lo[start + j]
                if take > slack:
                    take = slack
                probs_out[start + j] = lo[start + j] + take
                slack -= take
