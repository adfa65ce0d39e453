# cython: language_level=3
"""Compiled grid search over quantization-noise grids.

Must stay in lockstep with ``_kernels_py.grid_search``: same operation
order per point so both backends return bit-identical results.
"""
from libc.math cimport INFINITY


def grid_search(double[:, ::1] gain, double[:, ::1] qcost, double[::1] direct,
                double[::1] mu, long[::1] order, double log2_lambda_s):
    """Maximise the weighted sum rate over the product grid.

    ``gain[k, i]`` is ``I_k - direct_k`` and ``qcost[k, i]`` is
    ``C(d_rk^alpha / (N Q_i))`` at grid value ``i``. Returns
    ``(best_value, best_flat_index, n_feasible)``; the flat index is in
    C order over ``K`` axes and ties keep the first point.
    """
    cdef Py_ssize_t K = gain.shape[0]
    cdef Py_ssize_t G = gain.shape[1]
    cdef Py_ssize_t total = 1
    cdef Py_ssize_t k, j, flat
    cdef Py_ssize_t best_flat = -1
    cdef long n_feasible = 0
    cdef double base = 0.0
    cdef double best = -INFINITY
    cdef double xi, budget, acc, x, value
    cdef bint feasible
    cdef Py_ssize_t[64] idx

    if K > 64:
        raise ValueError("at most 64 UEs")
    for k in range(K):
        base += mu[k] * direct[k]
        idx[k] = 0
        total *= G

    for flat in range(total):
        xi = log2_lambda_s
        for k in range(K):
            xi = xi - qcost[k, idx[k]]
        if xi >= 0.0:
            budget = xi
            acc = 0.0
            for j in range(K):
                k = order[j]
                x = budget if budget > 0.0 else 0.0
                if gain[k, idx[k]] < x:
                    x = gain[k, idx[k]]
                acc = acc + mu[k] * x
                budget = budget - x
            feasible = True
        else:
            feasible = True
            acc = 0.0
            for k in range(K):
                if direct[k] + xi < 0.0:
                    feasible = False
                acc = acc + mu[k] * xi
        if feasible:
            n_feasible += 1
            value = base + acc
            if value > best:
                best = value
                best_flat = flat
        # mixed-radix increment, last axis fastest
        k = K - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < G:
                break
            idx[k] = 0
            k -= 1
    return best, best_flat, n_feasible
