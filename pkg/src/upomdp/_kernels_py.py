"""Pure-Python fallback for the compiled sweep kernel.

Mirrors ``_kernels.pyx`` operation for operation, including accumulation
order, so the two implementations agree bit for bit.  Used when the extension
is unavailable; correctness over speed.
"""

from __future__ import annotations


def _row_opt(indices, lo, hi, v, start, end, minimize, order):
    m = end - start
    val = 0.0
    slack = 1.0
    for i in range(m):
        val += lo[start + i] * v[indices[start + i]]
        slack -= lo[start + i]
        order[i] = i

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


def vi_sweep(indptr, indices, lo, hi, reward, goal, v_in, v_out, minimize, scratch):
    """One Jacobi sweep; returns the sup-norm residual."""
    n = len(indptr) - 1
    residual = 0.0
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


def extremal_rows(indptr, indices, lo, hi, v, minimize, scratch, probs_out):
    """Fill ``probs_out`` (nnz-length) with nature's greedy choice per row."""
    n = len(indptr) - 1
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
