"""Compiled inner loops over CSC arrays and triangle/edge incidence."""
import numpy as np
from numba import njit


@njit(cache=True)
def forward_leading(indptr, indices, data, b):
    """Solve ``C[:n, :n] y = b[:n]`` for lower-trapezoidal CSC ``C`` with n columns.

    The first stored entry of column j must be the diagonal ``C[j, j]``.
    """
    n = indptr.shape[0] - 1
    y = b[:n].copy()
    for j in range(n):
        p0 = indptr[j]
        yj = y[j] / data[p0]
        y[j] = yj
        for p in range(p0 + 1, indptr[j + 1]):
            i = indices[p]
            if i >= n:
                break
            y[i] -= data[p] * yj
    return y


@njit(cache=True)
def backward_leading_transpose(indptr, indices, data, z):
    """Solve ``C[:n, :n]^T x = z`` (n = number of columns of ``C``)."""
    n = indptr.shape[0] - 1
    x = z.copy()
    for j in range(n - 1, -1, -1):
        p0 = indptr[j]
        acc = x[j]
        for p in range(p0 + 1, indptr[j + 1]):
            i = indices[p]
            if i >= n:
                break
            acc -= data[p] * x[i]
        x[j] = acc / data[p0]
    return x


@njit(cache=True)
def heavy_scan(tri_edges, order, m1):
    """Greedy heaviest-first selection of a weakly collapsible triangle set.

    ``cnt``/``xr`` hold, per edge, the number and the XOR of the accepted
    triangles containing it, so a free edge names its triangle directly.
    A candidate with an edge not yet covered is accepted outright (that edge
    is free in the extension and collapses the candidate first).  Otherwise
    the extension is peeled on scratch copies and accepted iff it empties.
    """
    m2 = tri_edges.shape[0]
    cnt = np.zeros(m1, np.int64)
    xr = np.zeros(m1, np.int64)
    c2 = np.empty(m1, np.int64)
    x2 = np.empty(m1, np.int64)
    stack = np.empty(m1 + 3, np.int64)
    accepted = np.zeros(m2, np.bool_)
    n_acc = 0
    n_peeled_checks = 0
    for k in range(order.shape[0]):
        t = order[k]
        a = tri_edges[t, 0]
        b = tri_edges[t, 1]
        c = tri_edges[t, 2]
        ok = cnt[a] == 0 or cnt[b] == 0 or cnt[c] == 0
        if not ok:
            n_peeled_checks += 1
            c2[:] = cnt
            x2[:] = xr
            for q in range(3):
                e = tri_edges[t, q]
                c2[e] += 1
                x2[e] ^= t
            top = 0
            for e in range(m1):
                if c2[e] == 1:
                    stack[top] = e
                    top += 1
            removed = 0
            while top > 0:
                top -= 1
                e = stack[top]
                if c2[e] != 1:
                    continue
                tau = x2[e]
                removed += 1
                for q in range(3):
                    f = tri_edges[tau, q]
                    c2[f] -= 1
                    x2[f] ^= tau
                    if c2[f] == 1:
                        stack[top] = f
                        top += 1
            ok = removed == n_acc + 1
        if ok:
            accepted[t] = True
            n_acc += 1
            for q in range(3):
                e = tri_edges[t, q]
                cnt[e] += 1
                xr[e] ^= t
    return accepted, n_peeled_checks


@njit(cache=True)
def ichol0(indptr, indices, data):
    """In-place-style IC(0) on the lower triangle of an SPD matrix in CSC.

    Returns ``(values, ok, column)``; ``ok`` is False at the first pivot that
    is not strictly positive, reported in ``column``.
    """
    n = indptr.shape[0] - 1
    val = data.copy()
    for k in range(n):
        p0 = indptr[k]
        d = val[p0]
        if not d > 0.0:
            return val, False, k
        d = np.sqrt(d)
        val[p0] = d
        end = indptr[k + 1]
        for p in range(p0 + 1, end):
            val[p] /= d
        for p in range(p0 + 1, end):
            j = indices[p]
            ljk = val[p]
            s = indptr[j]
            e = indptr[j + 1]
            for q in range(p, end):
                i = indices[q]
                while s < e and indices[s] < i:
                    s += 1
                if s < e and indices[s] == i:
                    val[s] -= val[q] * ljk
    return val, True, -1

