"""Polya-Gamma random variables: exact sampling, densities and moments.

PG(1, b) draws use Devroye's alternating-series rejection sampler for the
tilted Jacobi variable J*(1, b/2), with the left (inverse-Gaussian type) and
right (exponential) proposals joined at ``TRUNC = 0.64``; PG(1, b) is
J*(1, b/2) / 4. The public samplers accept an array of tilts so one call
draws the whole omega block of a Gibbs step.

Densities are evaluated from the alternating series

    p(x) = sum_l (-1)^l (2l+1) / sqrt(2 pi x^3) exp(-(2l+1)^2 / (8x))

for small x, and from the equivalent Jacobi-theta form

    p(x) = 2 pi sum_l (-1)^l (2l+1) exp(-(2l+1)^2 pi^2 x / 2)

for large x. Both are ``lead(x) * S(c)`` with
``S(c) = sum_l (-1)^l (2l+1) exp(-((2l+1)^2 - 1) c)`` so they share one
summation routine.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError

TRUNC = 0.64
TRUNC_RECIP = 1.0 / TRUNC
# both series forms have c = 1/(8x) = pi^2 x / 2 here
SERIES_SWITCH = 1.0 / (2.0 * math.pi)

_PI2_8 = math.pi**2 / 8.0
_LOG_HALF_PI = math.log(0.5 * math.pi)


@dataclass(frozen=True)
class PGParams:
    """Parameters of PG(a, b): shape ``a > 0`` and tilt ``b >= 0``."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"PG shape must be positive, got a={self.a}")
        if not self.b >= 0:
            raise DomainError(f"PG tilt must be non-negative, got b={self.b}")

    @property
    def mean(self):
        return pg_mean(self.a, self.b)


# ---------------------------------------------------------------------------
# density


def _series(c, trunc_tol, max_terms):
    """Sum S(c) term by term until the next term is below trunc_tol * |S|."""
    c = np.asarray(c, dtype=float)
    shape = c.shape
    c = c.ravel()
    total = np.ones_like(c)
    active = np.ones(c.shape, dtype=bool)
    for ell in range(1, max_terms):
        k = 2 * ell + 1
        term = k * np.exp(-(k * k - 1) * c[active])
        total[active] += term if ell % 2 == 0 else -term
        active_idx = np.flatnonzero(active)
        k_next = k + 2
        nxt = k_next * np.exp(-(k_next * k_next - 1) * c[active])
        done = nxt < trunc_tol * np.abs(total[active])
        active[active_idx[done]] = False
        if not active.any():
            break
    return total.reshape(shape)


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Polya-Gamma density requires x > 0")
    return x


def pg1_logpdf(x, trunc_tol=1e-12, max_terms=200):
    """Log density of PG(1, 0) at ``x > 0``."""
    x = _check_positive(x)
    small = x <= SERIES_SWITCH
    c = np.where(small, 1.0 / (8.0 * x), 0.5 * np.pi**2 * x)
    log_lead = np.where(
        small,
        -0.5 * np.log(2.0 * np.pi * x**3) - 1.0 / (8.0 * x),
        np.log(2.0 * np.pi) - 0.5 * np.pi**2 * x,
    )
    out = log_lead + np.log(_series(c, trunc_tol, max_terms))
    return out if out.ndim else float(out)


def pg1_density(x, trunc_tol=1e-12, max_terms=200):
    """Density of PG(1, 0).

    The alternating series is summed until the next term falls below
    ``trunc_tol`` times the partial sum, with at most ``max_terms`` terms.
    Terms are decreasing in the regime where each series form is used, so
    the result is within one term of the limit.

    Raises
    ------
    DomainError
        If any ``x <= 0``.
    """
    return np.exp(pg1_logpdf(x, trunc_tol, max_terms))


def pg_logpdf(x, b=0.0, trunc_tol=1e-12, max_terms=200):
    """Log density of PG(1, b): log cosh(b/2) - b^2 x / 2 + log p(x)."""
    b = np.abs(np.asarray(b, dtype=float))
    half = 0.5 * b
    log_cosh = half + np.log1p(np.exp(-2.0 * half)) - np.log(2.0)
    return log_cosh - 0.5 * b * b * np.asarray(x, dtype=float) + pg1_logpdf(x, trunc_tol, max_terms)


def pg_density(x, b=0.0, trunc_tol=1e-12, max_terms=200):
    """Density of the tilted variable PG(1, b)."""
    return np.exp(pg_logpdf(x, b, trunc_tol, max_terms))


def pg1_partial_sums(x, n_terms):
    """Partial sums of the small-x series for the PG(1, 0) density.

    Returns an array whose entry ``k`` is the sum of the first ``k + 1``
    terms. Used to check the bracketing property of the alternating series.
    """
    x = float(_check_positive(x))
    ell = np.arange(n_terms)
    k = 2 * ell + 1
    terms = (-1.0) ** ell * k * np.exp(-(k * k) / (8.0 * x)) / np.sqrt(2.0 * np.pi * x**3)
    return np.cumsum(terms)


def pg_mean(a, b):
    """Mean of PG(a, b): ``a/4`` at b = 0, else ``a tanh(b/2) / (2b)``."""
    a = np.asarray(a, dtype=float)
    b = np.abs(np.asarray(b, dtype=float))
    if np.any(a <= 0):
        raise DomainError("PG shape must be positive")
    safe = np.where(b > 0, b, 1.0)
    out = np.where(b > 0, a * np.tanh(0.5 * safe) / (2.0 * safe), 0.25 * a)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# sampling
#
# The rejection sampler runs one variate at a time inside numba; the
# generator passed in is the caller's numpy Generator, whose bit stream the
# compiled code advances directly.


@njit(cache=True)
def _a_coef(n, x):
    """n-th term of the piecewise series for the J*(1, 0) density at x."""
    k = (n + 0.5) * math.pi
    if x > TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    return math.exp(-1.5 * (_LOG_HALF_PI + math.log(x)) + math.log(k) - 2.0 * (n + 0.5) ** 2 / x)


@njit(cache=True)
def _log_ndtr(x):
    return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))


@njit(cache=True)
def _right_mass(z):
    """Probability of proposing from the exponential (x > TRUNC) piece."""
    fz = _PI2_8 + 0.5 * z * z
    rt = math.sqrt(1.0 / TRUNC)
    x0 = math.log(fz) + fz * TRUNC
    q_over_p = math.exp(x0 - z + _log_ndtr(rt * (TRUNC * z - 1.0)))
    phi_a = 0.5 * math.erfc(rt * (TRUNC * z + 1.0) / math.sqrt(2.0))
    if phi_a > 0.0:
        q_over_p += math.exp(x0 + z + math.log(phi_a))
    q_over_p *= 4.0 / math.pi
    return 1.0 / (1.0 + q_over_p)


@njit(cache=True)
def _truncated_inverse_gauss(z, rng):
    """IG(1/z, 1) truncated to (0, TRUNC); z = 0 gives the Levy limit."""
    if z < TRUNC_RECIP:
        # mean 1/z exceeds TRUNC: truncated 1/chi^2_1 proposal, tilt by rejection
        while True:
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            while e1 * e1 > 2.0 * e2 / TRUNC:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
            x = TRUNC / (1.0 + TRUNC * e1) ** 2
            if rng.random() <= math.exp(-0.5 * z * z * x):
                return x
    mu = 1.0 / z
    while True:
        y = rng.standard_normal()
        mu_y = mu * y * y
        x = mu + 0.5 * mu * mu_y - 0.5 * mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
        if rng.random() > mu / (mu + x):
            x = mu * mu / x
        if x <= TRUNC:
            return x


@njit(cache=True)
def _jstar_one(z, rng):
    """One exact draw of J*(1, z), z >= 0."""
    fz = _PI2_8 + 0.5 * z * z
    p_right = _right_mass(z)
    while True:
        if rng.random() < p_right:
            x = TRUNC + rng.standard_exponential() / fz
        else:
            x = _truncated_inverse_gauss(z, rng)
        s = _a_coef(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _a_coef(n, x)
                if y <= s:
                    return x
            else:
                s += _a_coef(n, x)
                if y > s:
                    break


@njit(cache=True)
def _jstar_fill(z, rng, out):
    for i in range(z.size):
        out[i] = _jstar_one(z[i], rng)


def _sample_jstar(z, rng):
    out = np.empty_like(z)
    _jstar_fill(z, rng, out)
    return out


def sample_pg1(b, rng, size=None):
    """Exact draws from PG(1, b).

    Parameters
    ----------
    b : float or array_like
        Tilt(s); the sign is irrelevant (PG(1, b) = PG(1, -b)) and the
        absolute value is used.
    rng : numpy.random.Generator
    size : int or tuple, optional
        Output shape; ``b`` is broadcast against it.

    Returns
    -------
    float or ndarray
    """
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise DomainError("PG tilt must be finite")
    shape = b.shape if size is None else tuple(np.atleast_1d(size))
    z = np.ascontiguousarray(np.broadcast_to(0.5 * np.abs(b), shape), dtype=float).ravel()
    draws = 0.25 * _sample_jstar(z, rng)
    if size is None and b.ndim == 0:
        return float(draws[0])
    return draws.reshape(shape)


def sample_pg_int(n, b, rng, size=None):
    """Draws from PG(n, b) for integer ``n >= 1`` as sums of n PG(1, b) draws."""
    if int(n) != n or n < 1:
        raise DomainError(f"PG shape must be a positive integer here, got {n}")
    n = int(n)
    b = np.asarray(b, dtype=float)
    shape = b.shape if size is None else tuple(np.atleast_1d(size))
    draws = sample_pg1(np.broadcast_to(b, (n,) + shape), rng).sum(axis=0)
    if size is None and b.ndim == 0:
        return float(draws)
    return draws
