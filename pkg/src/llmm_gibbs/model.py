"""Logistic linear mixed model: data, priors, chain state and validation.

The model is

    y_i | beta, u ~ Bernoulli(F(x_i' beta + z_i' u)),  F the logistic cdf,
    u_j | tau_j   ~ N(0, I_{q_j} / tau_j),              j = 1..r,

with prior ``exp(-(beta - mu0)' Q (beta - mu0) / 2)`` on beta (Q = 0 is the
flat prior) and ``tau_j^(a_j - 1) exp(-b_j tau_j)`` on each tau_j.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InputError, NumericalError, UnsupportedDimensionError
from .pg_random import pg1_logpdf

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-10


def _frozen(a, ndim=None, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        if ndim == 1 and arr.ndim == 0:
            arr = arr.reshape(1)
        elif ndim == 2 and arr.ndim == 1:
            arr = arr.reshape(-1, 1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Prior hyperparameters.

    ``mu0`` and ``Q`` define the normal (or, with ``Q = 0``, flat) prior on
    beta; ``a`` and ``b_rate`` the gamma-type priors on the precisions tau.
    """

    mu0: np.ndarray
    Q: np.ndarray
    a: np.ndarray
    b_rate: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float, copy=True)
        if Q.ndim == 0:
            Q = Q.reshape(1, 1)
        if Q.ndim == 2 and Q.shape[0] == Q.shape[1]:
            scale = max(np.abs(Q).max(initial=0.0), np.finfo(float).tiny)
            if np.abs(Q - Q.T).max(initial=0.0) <= SYMMETRY_RTOL * scale:
                Q = 0.5 * (Q + Q.T)
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "mu0", _frozen(self.mu0, 1))
        object.__setattr__(self, "a", _frozen(self.a, 1))
        object.__setattr__(self, "b_rate", _frozen(self.b_rate, 1))

    @classmethod
    def normal(cls, mu0, Q, a, b_rate):
        return cls(mu0=mu0, Q=Q, a=a, b_rate=b_rate)

    @classmethod
    def flat(cls, p, a, b_rate):
        """Flat prior on beta (Q = 0, mu0 = 0)."""
        return cls(mu0=np.zeros(p), Q=np.zeros((p, p)), a=a, b_rate=b_rate)

    @property
    def is_flat(self):
        return not np.any(self.Q)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Designs, responses, random-effect blocks and prior of an LLMM.

    Arrays are copied and made read-only on construction. Invariants are
    not enforced here; use :func:`validate` (report) or
    :func:`require_valid` (raise).
    """

    X: np.ndarray
    Z: np.ndarray
    y: np.ndarray
    blocks: tuple
    prior: PriorSpec
    x_names: tuple = None
    z_names: tuple = None
    block_names: tuple = None
    M: np.ndarray = field(init=False, repr=False, compare=False)
    kappa: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = _frozen(self.X, 2)
        Z = _frozen(self.Z, 2)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "y", _frozen(self.y, 1))
        object.__setattr__(self, "blocks", tuple(int(b) for b in np.atleast_1d(self.blocks)))
        if self.x_names is None:
            object.__setattr__(self, "x_names", tuple(f"beta{i}" for i in range(X.shape[1])))
        if self.z_names is None:
            object.__setattr__(self, "z_names", tuple(f"u{i}" for i in range(Z.shape[1])))
        if self.block_names is None:
            object.__setattr__(self, "block_names", tuple(f"tau{j + 1}" for j in range(len(self.blocks))))
        M = np.hstack([X, Z]) if X.shape[0] == Z.shape[0] else np.empty((0, 0))
        M.flags.writeable = False
        kappa = self.y - 0.5
        kappa.flags.writeable = False
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "kappa", kappa)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Z.shape[1]

    @property
    def r(self):
        return len(self.blocks)

    @property
    def block_slices(self):
        ends = np.cumsum(self.blocks)
        return [slice(e - b, e) for b, e in zip(self.blocks, ends)]

    @property
    def is_flat(self):
        return self.prior.is_flat

    @property
    def param_names(self):
        """Column names for stored draws: beta, then u, then tau."""
        return (
            [f"beta[{s}]" for s in self.x_names]
            + [f"u[{s}]" for s in self.z_names]
            + [f"tau[{s}]" for s in self.block_names]
        )


@dataclass(frozen=True, eq=False)
class ChainState:
    """Full state (beta, u, omega, tau) of either Gibbs sampler."""

    beta: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        for name in ("beta", "u", "omega", "tau"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        if np.any(~(self.omega > 0)):
            raise DomainError("omega must be positive")
        if np.any(~(self.tau > 0)):
            raise DomainError("tau must be positive")

    @property
    def eta(self):
        return np.concatenate([self.beta, self.u])

    @classmethod
    def default(cls, spec):
        """beta = 0, u = 0, tau = 1 (omega = 1 is a placeholder; both
        samplers draw omega before reading it)."""
        return cls(np.zeros(spec.p), np.zeros(spec.q), np.ones(spec.n), np.ones(spec.r))


@dataclass(frozen=True, eq=False)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate(spec):
    """Check a :class:`ModelSpec` and return a list of :class:`Violation`.

    An empty list means the model is valid. Under the flat beta prior, X must
    have full column rank so that the beta and eta precisions are positive
    definite. Full rank of M = [X Z] is a condition of the ergodicity check,
    not of validity, and is reported by :func:`~llmm_gibbs.ergodicity.check_ge`.
    """
    from .ergodicity import check_rank

    out = []

    def bad(code, message):
        out.append(Violation(code, message))

    X, Z, y, prior = spec.X, spec.Z, spec.y, spec.prior
    if X.ndim != 2 or Z.ndim != 2:
        bad("shape", "X and Z must be matrices")
        return out
    n, p, q = X.shape[0], X.shape[1], Z.shape[1]
    if Z.shape[0] != n:
        bad("shape", f"X has {n} rows but Z has {Z.shape[0]}")
    if n < 1 or p < 1 or q < 1:
        bad("shape", f"need n, p, q >= 1 (got n={n}, p={p}, q={q})")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Z))):
        bad("finite", "design matrices contain non-finite entries")
    if y.shape != (n,):
        bad("shape", f"y has shape {y.shape}, expected ({n},)")
    elif not np.all((y == 0) | (y == 1)):
        bad("response", "responses must be 0 or 1")

    blocks = np.asarray(spec.blocks)
    r = blocks.size
    if r < 1 or np.any(blocks < 1):
        bad("blocks", "need r >= 1 blocks, each of positive size")
    if blocks.sum() != q:
        bad("blocks", f"block sizes inconsistent: sum(q_j) = {blocks.sum()} but q = {q}")

    if prior.mu0.shape != (p,):
        bad("prior", f"mu0 has shape {prior.mu0.shape}, expected ({p},)")
    Q = prior.Q
    if Q.shape != (p, p):
        bad("prior", f"Q has shape {Q.shape}, expected ({p}, {p})")
    elif not np.all(np.isfinite(Q)):
        bad("prior", "Q contains non-finite entries")
    else:
        scale = max(np.abs(Q).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(Q - Q.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            bad("prior", "Q is not symmetric")
        elif np.linalg.eigvalsh(Q).min() < -PSD_RTOL * scale:
            bad("prior", "Q is not positive semi-definite")
    if prior.a.shape != (r,) or prior.b_rate.shape != (r,):
        bad("prior", f"a and b_rate must have one entry per block (r = {r})")
    else:
        if np.any(prior.b_rate < 0) or not np.all(np.isfinite(prior.b_rate)):
            bad("prior", "b_j must be finite and non-negative")
        if np.all(blocks >= 0):
            for j in np.flatnonzero(~(prior.a + blocks / 2 > 0)):
                bad("shape_param", f"a_j + q_j/2 > 0 fails for block {j + 1} "
                    f"(a = {prior.a[j]}, q_j = {blocks[j]})")

    if out:
        return out
    if prior.is_flat:
        rank_x, ok_x = check_rank(X)
        if not ok_x:
            bad("rank", f"X must have full column rank under the flat prior (rank {rank_x} < p = {p})")
    return out


def require_valid(spec):
    """Raise :class:`InputError` listing every violation, if any."""
    violations = validate(spec)
    if violations:
        raise InputError("invalid model: " + "; ".join(str(v) for v in violations))


def log_joint_unnorm(state, spec):
    """Unnormalised log density of (beta, u, omega, tau) given y.

    Sum of ``kappa_i m_i'eta - omega_i (m_i'eta)^2 / 2 + log p(omega_i)``,
    ``log phi_q(u; 0, D(tau)^{-1})`` and both log priors.
    """
    eta = state.eta
    omega = state.omega
    # overflow is detected below and reported by term name
    with np.errstate(over="ignore", invalid="ignore"):
        lin = spec.M @ eta
        terms = {
            "augmented likelihood": float(np.sum(spec.kappa * lin - 0.5 * omega * lin * lin)),
            "log p(omega)": float(np.sum(pg1_logpdf(omega))),
        }
        log_phi = -0.5 * spec.q * np.log(2.0 * np.pi)
        for tau_j, q_j, sl in zip(state.tau, spec.blocks, spec.block_slices):
            uj = state.u[sl]
            log_phi += 0.5 * q_j * np.log(tau_j) - 0.5 * tau_j * (uj @ uj)
        terms["log phi(u)"] = float(log_phi)
        d = state.beta - spec.prior.mu0
        terms["log prior(beta)"] = float(-0.5 * d @ spec.prior.Q @ d)
        terms["log prior(tau)"] = float(
            np.sum((spec.prior.a - 1.0) * np.log(state.tau) - spec.prior.b_rate * state.tau)
        )
    for name, value in terms.items():
        if not np.isfinite(value):
            raise NumericalError(f"non-finite term in log joint density: {name} = {value}")
    return sum(terms.values())


def log_marginal_like_quad(spec, beta, tau, quad_order=40):
    """log L(beta, tau | y) with u integrated out by Gauss-Hermite quadrature.

    Tensor-product rule with ``quad_order`` nodes per coordinate; the cost is
    ``quad_order ** q`` likelihood evaluations, so only q <= 2 is accepted.
    Intended as a test oracle.
    """
    if spec.q > 2:
        raise UnsupportedDimensionError(f"quadrature over u supports q <= 2, got q = {spec.q}")
    if quad_order < 20:
        raise DomainError("quad_order must be at least 20")
    nodes, weights = np.polynomial.hermite.hermgauss(quad_order)
    sd = np.repeat(1.0 / np.sqrt(np.asarray(tau, dtype=float)), spec.blocks)
    grids = np.meshgrid(*([nodes] * spec.q), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=1) * np.sqrt(2.0) * sd
    log_w = sum(np.log(w.ravel()) for w in np.meshgrid(*([weights] * spec.q), indexing="ij"))
    log_w = log_w - 0.5 * spec.q * np.log(np.pi)
    lin = (spec.X @ np.asarray(beta, dtype=float))[:, None] + spec.Z @ U.T
    loglik = (spec.y[:, None] * lin - np.logaddexp(0.0, lin)).sum(axis=0)
    return float(logsumexp(loglik + log_w))
