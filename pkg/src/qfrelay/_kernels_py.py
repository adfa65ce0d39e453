"""Numpy fallback for the compiled grid search in ``_kernels.pyx``."""
import itertools

import numpy as np


def grid_search(gain, qcost, direct, mu, order, log2_lambda_s):
    """Same contract as the compiled kernel: returns
    ``(best_value, best_flat_index, n_feasible)``.

    The last two axes are vectorised; leading axes are looped in C order.
    """
    gain = np.ascontiguousarray(gain, dtype=float)
    qcost = np.ascontiguousarray(qcost, dtype=float)
    K, G = gain.shape
    direct = [float(v) for v in direct]
    mu = [float(v) for v in mu]
    order = [int(v) for v in order]
    base = 0.0
    for k in range(K):
        base += mu[k] * direct[k]

    n_vec = min(K, 2)
    lead = K - n_vec
    shape = (G,) * n_vec
    best, best_flat, n_feasible = -np.inf, -1, 0
    for chunk, prefix in enumerate(itertools.product(range(G), repeat=lead)):
        g = [None] * K
        q = [None] * K
        for k in range(K):
            if k < lead:
                g[k] = gain[k, prefix[k]]
                q[k] = qcost[k, prefix[k]]
            else:
                view = [1] * n_vec
                view[k - lead] = G
                g[k] = gain[k].reshape(view)
                q[k] = qcost[k].reshape(view)
        xi = np.full(shape, float(log2_lambda_s))
        for k in range(K):
            xi = xi - q[k]
        budget = xi
        acc_pos = np.zeros(shape)
        for k in order:
            x = np.minimum(g[k], np.maximum(budget, 0.0))
            acc_pos = acc_pos + mu[k] * x
            budget = budget - x
        acc_neg = np.zeros(shape)
        ok_neg = np.ones(shape, dtype=bool)
        for k in range(K):
            ok_neg &= ~(direct[k] + xi < 0.0)
            acc_neg = acc_neg + mu[k] * xi
        pos = xi >= 0.0
        value = base + np.where(pos, acc_pos, acc_neg)
        feasible = pos | ok_neg
        n_feasible += int(feasible.sum())
        value = np.where(feasible, value, -np.inf)
        i = int(np.argmax(value))
        if value.flat[i] > best:
            best = float(value.flat[i])
            best_flat = chunk * G**n_vec + i
    return best, best_flat, n_feasible
