"""Small dense linear programs in dictionary form.

Solves ``max c @ x  s.t.  A @ x <= b, x >= 0`` for ``b >= 0`` (the origin
is feasible, so no phase one is needed). The dictionary holds one row per
constraint and one column per nonbasic variable, which keeps the
``2^K``-row rate-region programs cheap when ``K`` is small.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "LPResult", "simplex_max"]


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    pivots: int


def simplex_max(c, A, b, tol: float = 1e-12, max_pivots: int = 100_000) -> LPResult:
    """Maximise ``c @ x`` over ``{x >= 0 : A x <= b}`` with ``b >= 0``.

    Bland's rule picks both the entering and the leaving variable (lowest
    index among candidates), so the pivot sequence is deterministic and
    cycling cannot occur on degenerate vertices.

    Raises
    ------
    LPError
        If ``b`` has a negative entry, the program is unbounded, or the
        pivot cap is hit.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if np.any(b < -tol):
        raise LPError("origin infeasible: negative right-hand side")

    # rows: x_basic[i] = D[i, 0] - D[i, 1:] @ x_nonbasic
    D = np.empty((m, n + 1))
    D[:, 0] = np.maximum(b, 0.0)
    D[:, 1:] = A
    z = np.concatenate([[0.0], c])  # objective: z0 + z[1:] @ x_nonbasic
    nonbasic = list(range(n))
    basic = list(range(n, n + m))

    for pivots in range(max_pivots):
        candidates = [j for j in range(n) if z[j + 1] > tol]
        if not candidates:
            break
        e = min(candidates, key=lambda j: nonbasic[j])
        col = D[:, e + 1]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            raise LPError("unbounded")
        ratios = D[rows, 0] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = int(min(tied, key=lambda i: basic[i]))

        piv = D[r, e + 1]
        row = D[r] / piv
        row[e + 1] = 1.0 / piv
        # eliminate entering variable from other rows and the objective
        factor = D[:, e + 1].copy()
        factor[r] = 0.0
        D -= np.outer(factor, row)
        D[:, e + 1] = -factor / piv
        D[r] = row
        ze = z[e + 1]
        z0 = z[0] + ze * row[0]
        z -= ze * row
        z[0] = z0
        z[e + 1] = -ze / piv
        basic[r], nonbasic[e] = nonbasic[e], basic[r]
        D[:, 0] = np.maximum(D[:, 0], 0.0)
    else:
        raise LPError("pivot limit reached")

    x = np.zeros(n + m)
    for i, var in enumerate(basic):
        x[var] = D[i, 0]
    x = x[:n]
    return LPResult(x=x, value=float(c @ x), pivots=pivots)
