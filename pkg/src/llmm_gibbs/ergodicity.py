"""Checker for the sufficient conditions for geometric ergodicity of the
block Gibbs chain under the flat prior on beta.

With ``pi(beta) ∝ 1`` the block Gibbs chain is geometrically ergodic (and the
posterior is proper) if

1. ``a_j < b_j = 0`` or ``b_j > 0`` for every j,
2. ``a_j + q_j / 2 > 0`` for every j,
3. ``M = [X Z]`` has full column rank,
4. some ``e > 0`` satisfies ``e' M* = 0``, where row i of ``M*`` is
   ``(1 - 2 y_i) m_i'``.

Condition 4 is a linear feasibility problem. By scaling, ``e > 0`` can be
replaced with ``e >= 1``; substituting ``e = 1 + f`` gives
``M*' f = -M*' 1, f >= 0``, solved with a Phase-I simplex.

The conditions are sufficient only: a failing report does not show that
the chain is not geometrically ergodic.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .simplex import phase_one

DEFAULT_TOL = 1e-9

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INDETERMINATE = "indeterminate"


def build_mstar(M, y):
    """Rows ``(1 - 2 y_i) m_i'``: ``m_i`` for y_i = 0 and ``-m_i`` for y_i = 1."""
    M = np.asarray(M, dtype=float)
    c = 1.0 - 2.0 * np.asarray(y, dtype=float)
    if c.shape != (M.shape[0],):
        raise ValueError(f"y has {c.size} entries but M has {M.shape[0]} rows")
    return c[:, None] * M


def check_rank(M, tol=DEFAULT_TOL):
    """Numerical column rank of ``M``: singular values above ``tol * s_max``.

    Returns ``(rank, full)`` where ``full`` is ``rank == M.shape[1]``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0, M.shape[1] == 0
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return rank, rank == M.shape[1]


@dataclass
class NullVectorResult:
    """Outcome of the search for ``e >= 1`` with ``M*' e = 0``.

    ``witness`` is scaled so that ``min(e) = 1``; ``objective`` is the
    Phase-I optimum, a certificate of infeasibility when positive.
    """

    status: str
    witness: np.ndarray | None
    objective: float

    @property
    def feasible(self):
        return self.status == FEASIBLE


def check_positive_null_vector(Mstar, tol=DEFAULT_TOL):
    """Decide whether a strictly positive ``e`` with ``e' M* = 0`` exists.

    Rows are solved in a canonical (lexicographic) order and the witness is
    averaged over identical rows, so permuting the rows of ``M*`` permutes
    the witness in the same way.
    """
    Mstar = np.atleast_2d(np.asarray(Mstar, dtype=float))
    n = Mstar.shape[0]
    scale = np.abs(Mstar).max(initial=0.0)
    if scale == 0.0:
        return NullVectorResult(FEASIBLE, np.ones(n), 0.0)
    A = Mstar / scale
    order = np.lexsort(A.T[::-1])
    As = A[order]

    res = phase_one(As.T, -As.sum(axis=0), tol=tol)
    b_norm = np.abs(As.sum(axis=0)).sum()
    if res.objective > tol * (1.0 + b_norm):
        return NullVectorResult(INFEASIBLE, None, res.objective)

    if res.x.min(initial=0.0) < -tol:
        return NullVectorResult(INDETERMINATE, None, res.objective)
    e_sorted = 1.0 + res.x
    # identical rows are interchangeable: share their weight equally
    _, group = np.unique(As, axis=0, return_inverse=True)
    group = np.ravel(group)
    sums = np.bincount(group, weights=e_sorted)
    counts = np.bincount(group)
    e_sorted = (sums / counts)[group]

    e = np.empty(n)
    e[order] = e_sorted
    e /= e.min()
    resid = np.abs(Mstar.T @ e).max(initial=0.0)
    if resid > tol * (1.0 + np.abs(Mstar).sum(axis=1).max()):
        return NullVectorResult(INDETERMINATE, e, res.objective)
    return NullVectorResult(FEASIBLE, e, res.objective)


@dataclass
class GEReport:
    """Per-condition outcome of the geometric ergodicity check.

    ``overall`` is ``None`` when the check does not apply (proper normal
    prior on beta).
    """

    applicable: bool
    cond1_priors: list
    cond2_shape: list
    cond3_rank: dict
    cond4_null_vector: dict
    overall: bool | None
    verdict: str

    def to_dict(self):
        return asdict(self)


def check_ge(spec, tol=DEFAULT_TOL):
    """Evaluate the four sufficient conditions for ``spec``."""
    a = spec.prior.a
    b = spec.prior.b_rate
    q = np.asarray(spec.blocks)
    cond1 = [bool((bj == 0 and aj < 0) or bj > 0) for aj, bj in zip(a, b)]
    cond2 = [bool(aj + qj / 2 > 0) for aj, qj in zip(a, q)]
    rank, full = check_rank(spec.M, tol)
    nv = check_positive_null_vector(build_mstar(spec.M, spec.y), tol)
    cond3 = {"rank": rank, "required": spec.p + spec.q, "pass": bool(full)}
    cond4 = {
        "status": nv.status,
        "pass": nv.feasible,
        "phase_one_objective": nv.objective,
        "witness": None if nv.witness is None else nv.witness.tolist(),
    }

    if not spec.is_flat:
        return GEReport(False, cond1, cond2, cond3, cond4, None,
                        "not applicable (proper β prior)")
    overall = all(cond1) and all(cond2) and full and nv.feasible
    if overall:
        verdict = ("all four sufficient conditions hold: the block Gibbs chain is "
                   "geometrically ergodic and the posterior under the flat β prior is proper")
    elif nv.status == INDETERMINATE:
        verdict = ("indeterminate: the positive null vector search was numerically "
                   "ambiguous; the sufficient conditions could not be confirmed")
    else:
        failed = [name for name, ok in (
            ("1 (prior rates)", all(cond1)),
            ("2 (gamma shapes)", all(cond2)),
            ("3 (full rank of M)", full),
            ("4 (positive null vector of M*)", nv.feasible),
        ) if not ok]
        verdict = ("sufficient conditions not met: " + ", ".join(failed) + " failed; "
                   "this does not show that the chain is not geometrically ergodic")
    return GEReport(True, cond1, cond2, cond3, cond4, overall, verdict)
