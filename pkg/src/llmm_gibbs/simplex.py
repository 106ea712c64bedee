"""Dense Phase-I simplex for linear feasibility problems.

Finds ``x >= 0`` with ``A x = b`` by minimising the sum of artificial
variables from the all-artificial basis. Pivoting follows Bland's rule
(lowest-index entering and leaving variables), which cannot cycle.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class PhaseOneResult:
    x: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray


def phase_one(A, b, tol=1e-9, max_iter=None):
    """Solve the Phase-I problem min 1'a s.t. A x + a = b, x, a >= 0.

    Parameters
    ----------
    A : (m, n) array
    b : (m,) array
    tol : float
        Pivot and reduced-cost tolerance, relative to the data scale.

    Returns
    -------
    PhaseOneResult
        ``objective`` is the optimal sum of artificials; the system is
        feasible iff it is zero (up to ``tol``).
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    # reduced costs of the Phase-I objective in the artificial basis
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    scale = max(1.0, np.abs(A).max(initial=0.0), np.abs(b).max(initial=0.0))
    eps = tol * scale
    if max_iter is None:
        max_iter = 50 * (n + m) + 100

    it = 0
    while it < max_iter:
        neg = np.flatnonzero(T[m, :-1] < -eps)
        if neg.size == 0:
            break
        j = neg[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > eps)
        if rows.size == 0:
            # unbounded direction cannot occur: the objective is bounded below by 0
            break
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + eps * max(1.0, abs(best))]
        i = tied[np.argmin(basis[tied])]
        T[i] /= T[i, j]
        for r in range(m + 1):
            if r != i and T[r, j] != 0.0:
                T[r] -= T[r, j] * T[i]
        basis[i] = j
        it += 1

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    objective = max(0.0, float(-T[m, -1]))
    return PhaseOneResult(x=x[:n], objective=objective, iterations=it, basis=basis.copy())
