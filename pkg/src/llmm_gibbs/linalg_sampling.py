"""Gaussian draws in precision form and assembly of the eta precision.

All Gaussian conditionals of the samplers have the form N(S^{-1} t, S^{-1}).
They are drawn by factoring S = L L^T, solving L w = t, drawing
z ~ N(0, I) and solving L^T x = w + z, so S^{-1} is never formed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import DimensionError, SingularityError

SYMMETRY_RTOL = 1e-10


def cholesky_lower(S):
    """Lower Cholesky factor of ``S``.

    Raises
    ------
    SingularityError
        If ``S`` is not numerically positive definite; ``pivot`` is the
        0-based index of the first non-positive leading minor.
    """
    L, info = lapack.dpotrf(S, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SingularityError("precision matrix is not positive definite", pivot=info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return L


def _trsv(L, v, trans):
    x, info = lapack.dtrtrs(L, v, lower=1, trans=trans)
    if info != 0:
        raise SingularityError("triangular solve failed", pivot=info - 1)
    return x


def _check_system(S, t):
    S = np.asarray(S, dtype=float)
    t = np.asarray(t, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"precision must be square, got shape {S.shape}")
    if t.shape != (S.shape[0],):
        raise DimensionError(f"shift has shape {t.shape}, expected ({S.shape[0]},)")
    scale = max(np.abs(S).max(), np.finfo(float).tiny)
    if np.abs(S - S.T).max() > SYMMETRY_RTOL * scale:
        raise DimensionError("precision matrix is not symmetric")
    return S, t


def chol_solve_mean(S, t, check=True):
    """The mean S^{-1} t, computed from the Cholesky factor."""
    if check:
        S, t = _check_system(S, t)
    L = cholesky_lower(S)
    return _trsv(L, _trsv(L, t, 0), 1)


def chol_solve_sample(S, t, rng, check=True):
    """Draw x ~ N(S^{-1} t, S^{-1}) without inverting S.

    Parameters
    ----------
    S : (k, k) array
        Symmetric positive-definite precision.
    t : (k,) array
    rng : numpy.random.Generator
    check : bool
        Validate shapes and symmetry. The samplers build S symmetric by
        construction and pass ``False``.
    """
    if check:
        S, t = _check_system(S, t)
    L = cholesky_lower(S)
    w = _trsv(L, t, 0)
    z = rng.standard_normal(t.shape[0])
    return _trsv(L, w + z, 1)


@dataclass(frozen=True)
class PrecisionDraw:
    """A Gaussian N(S^{-1} t, S^{-1}) held in precision form."""

    precision: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        S, t = _check_system(self.precision, self.shift)
        object.__setattr__(self, "precision", S)
        object.__setattr__(self, "shift", t)
        cholesky_lower(S)

    @property
    def mean(self):
        return chol_solve_mean(self.precision, self.shift, check=False)

    def sample(self, rng):
        return chol_solve_sample(self.precision, self.shift, rng, check=False)


def weighted_gram(A, weights, B=None):
    """A^T diag(weights) A (or A^T diag(weights) B) without a dense diagonal.

    For the symmetric case the product is averaged with its transpose, which
    makes the result exactly symmetric (floating-point addition commutes).
    """
    if B is None:
        G = (A * weights[:, None]).T @ A
        return 0.5 * (G + G.T)
    return (A * weights[:, None]).T @ B


def build_eta_precision(M, omega, tau, prior, blocks, kappa):
    """Precision and shift of eta | omega, tau, y.

    Returns ``(S, t)`` with ``S = M^T Omega M + blockdiag(Q, D(tau))`` and
    ``t = M^T kappa + (Q mu0, 0)``, where ``D(tau)`` repeats ``tau_j`` on the
    ``q_j`` diagonal entries of block j. ``prior`` supplies ``Q`` and ``mu0``;
    ``kappa = y - 1/2``.
    """
    Q, mu0 = prior.Q, prior.mu0
    M = np.asarray(M, dtype=float)
    omega = np.asarray(omega, dtype=float)
    n, k = M.shape
    p = np.shape(Q)[0]
    blocks = np.asarray(blocks, dtype=int)
    if omega.shape != (n,) or np.shape(kappa) != (n,):
        raise DimensionError("omega and kappa must have one entry per observation")
    if p + blocks.sum() != k or len(tau) != blocks.size:
        raise DimensionError("prior and block sizes do not match the design")
    S = weighted_gram(M, omega)
    S[:p, :p] += Q
    S[np.arange(p, k), np.arange(p, k)] += np.repeat(tau, blocks)
    t = M.T @ kappa
    t[:p] += Q @ mu0
    return S, t
