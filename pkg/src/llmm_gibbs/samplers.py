"""Full Gibbs and two-block Gibbs samplers for the LLMM.

Full Gibbs (one iteration, in this order)::

    tau   ~ Gamma(a_j + q_j/2, b_j + u_j'u_j/2)      from the current u
    omega ~ PG(1, |m_i' eta|)                        from the current eta
    u     | beta, omega, tau                         with the old beta
    beta  | u, omega                                 with the new u

Block Gibbs::

    (tau, omega) | eta                               independently
    eta = (beta, u) | omega, tau                     one joint draw

If some block j with ``b_j = 0`` has ``u_j = 0`` exactly (the null set where
the gamma rate vanishes), every tau_j is drawn from Gamma(1, 1) instead.
"""

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ChainError, DomainError, InputError, NumericalError
from .linalg_sampling import build_eta_precision, chol_solve_sample, weighted_gram
from .model import ChainState, require_valid
from .pg_random import _sample_jstar
from .rng import make_rng


class SamplerKind(str, Enum):
    FULL = "fg"
    BLOCK = "bg"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {"fg": cls.FULL, "full": cls.FULL, "fullgibbs": cls.FULL,
                   "bg": cls.BLOCK, "block": cls.BLOCK, "blockgibbs": cls.BLOCK}
        try:
            return aliases[key]
        except KeyError:
            raise InputError(f"unknown sampler {value!r}; expected 'fg' or 'bg'") from None

    @property
    def chain_id(self):
        """Stream index, fixed per sampler so runs are reproducible in isolation."""
        return 0 if self is SamplerKind.FULL else 1


@dataclass(frozen=True)
class RunConfig:
    sampler_kind: SamplerKind
    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    init: ChainState | None = None
    store_omega: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sampler_kind", SamplerKind.parse(self.sampler_kind))
        if self.iterations < 1:
            raise InputError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise InputError(f"need 0 <= burn_in < iterations (got {self.burn_in}, {self.iterations})")
        if self.thin < 1:
            raise InputError("thin must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be an unsigned 64-bit integer")

    @property
    def n_stored(self):
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True, eq=False)
class ChainOutput:
    """Stored draws after burn-in and thinning.

    ``draws_eta`` has columns (beta, u); ``draws_tau`` one column per block.
    ``meta`` records the configuration, stream and wall-clock seconds.
    """

    draws_eta: np.ndarray
    draws_tau: np.ndarray
    names: tuple
    p: int
    meta: dict = field(default_factory=dict)
    draws_omega: np.ndarray | None = None

    @property
    def draws(self):
        """All stored draws as one matrix, columns ordered as ``names``."""
        return np.hstack([self.draws_eta, self.draws_tau])

    @property
    def beta(self):
        return self.draws_eta[:, :self.p]

    @property
    def u(self):
        return self.draws_eta[:, self.p:]

    @property
    def tau(self):
        return self.draws_tau

    @property
    def seconds(self):
        return self.meta.get("seconds")


# ---------------------------------------------------------------------------
# conditionals


def tau_conditional(u, prior, blocks):
    """Shape and rate of tau | eta, and whether eta lies in the null set."""
    blocks = np.asarray(blocks)
    starts = np.concatenate(([0], np.cumsum(blocks)[:-1]))
    uu = np.add.reduceat(u * u, starts)
    null = bool(((prior.b_rate == 0) & (uu == 0.0)).any())
    if null:
        return np.ones(blocks.size), np.ones(blocks.size), True
    return prior.a + 0.5 * blocks, prior.b_rate + 0.5 * uu, False


def draw_tau(u, prior, blocks, rng):
    shape, rate, _ = tau_conditional(u, prior, blocks)
    return rng.gamma(shape, 1.0 / rate)


def draw_omega(eta, M, rng):
    """omega_i ~ PG(1, |m_i' eta|), independently."""
    tilt = np.abs(M @ eta)
    return 0.25 * _sample_jstar(0.5 * tilt, rng)


def beta_conditional(u, omega, spec):
    """Precision and shift of beta | u, omega, y."""
    X, Z, prior = spec.X, spec.Z, spec.prior
    S = weighted_gram(X, omega) + prior.Q
    t = X.T @ spec.kappa + prior.Q @ prior.mu0 - X.T @ (omega * (Z @ u))
    return S, t


def draw_beta(u, omega, spec, rng):
    S, t = beta_conditional(u, omega, spec)
    return chol_solve_sample(S, t, rng, check=False)


def u_conditional(beta, omega, tau, spec):
    """Precision and shift of u | beta, omega, tau, y."""
    X, Z = spec.X, spec.Z
    S = weighted_gram(Z, omega)
    S[np.diag_indices_from(S)] += np.repeat(tau, spec.blocks)
    t = Z.T @ spec.kappa - Z.T @ (omega * (X @ beta))
    return S, t


def draw_u(beta, omega, tau, spec, rng):
    S, t = u_conditional(beta, omega, tau, spec)
    return chol_solve_sample(S, t, rng, check=False)


def eta_conditional(omega, tau, spec):
    """Precision and shift of eta = (beta, u) | omega, tau, y."""
    return build_eta_precision(spec.M, omega, tau, spec.prior, spec.blocks, spec.kappa)


def draw_eta(omega, tau, spec, rng):
    S, t = eta_conditional(omega, tau, spec)
    return chol_solve_sample(S, t, rng, check=False)


# ---------------------------------------------------------------------------
# transitions


def _fg_update(beta, u, spec, rng):
    tau = draw_tau(u, spec.prior, spec.blocks, rng)
    omega = draw_omega(np.concatenate([beta, u]), spec.M, rng)
    u = draw_u(beta, omega, tau, spec, rng)
    beta = draw_beta(u, omega, spec, rng)
    return beta, u, omega, tau


def _bg_update(beta, u, spec, rng):
    tau = draw_tau(u, spec.prior, spec.blocks, rng)
    omega = draw_omega(np.concatenate([beta, u]), spec.M, rng)
    eta = draw_eta(omega, tau, spec, rng)
    return eta[:spec.p], eta[spec.p:], omega, tau


def fg_step(state, spec, rng):
    """One full Gibbs transition from ``state``."""
    return ChainState(*_fg_update(state.beta, state.u, spec, rng))


def bg_step(state, spec, rng):
    """One block Gibbs transition from ``state``."""
    return ChainState(*_bg_update(state.beta, state.u, spec, rng))


_UPDATES = {SamplerKind.FULL: _fg_update, SamplerKind.BLOCK: _bg_update}


def run_chain(spec, config, chain_id=None):
    """Run one chain and return its stored draws.

    The stream is ``make_rng(config.seed, chain_id)`` with ``chain_id``
    defaulting to the sampler's fixed index. Rows are kept for iterations
    ``burn_in + thin, burn_in + 2 thin, ...``.
    """
    require_valid(spec)
    kind = config.sampler_kind
    if chain_id is None:
        chain_id = kind.chain_id
    rng = make_rng(config.seed, chain_id)
    init = config.init if config.init is not None else ChainState.default(spec)
    if init.beta.shape != (spec.p,) or init.u.shape != (spec.q,) or init.tau.shape != (spec.r,):
        raise InputError("initial state dimensions do not match the model")
    update = _UPDATES[kind]

    n_keep = config.n_stored
    eta_out = np.empty((n_keep, spec.p + spec.q))
    tau_out = np.empty((n_keep, spec.r))
    omega_out = np.empty((n_keep, spec.n)) if config.store_omega else None
    beta, u = np.array(init.beta), np.array(init.u)

    row = 0
    start = time.perf_counter()
    for it in range(1, config.iterations + 1):
        try:
            beta, u, omega, tau = update(beta, u, spec, rng)
        except (NumericalError, DomainError, FloatingPointError) as exc:
            raise ChainError(str(exc), it) from exc
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            eta_out[row, :spec.p] = beta
            eta_out[row, spec.p:] = u
            tau_out[row] = tau
            if omega_out is not None:
                omega_out[row] = omega
            row += 1
    seconds = time.perf_counter() - start

    if not np.all(tau_out > 0):
        raise ChainError("non-positive tau draw stored", config.iterations)
    meta = {
        "sampler": kind.value,
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "seed": config.seed,
        "chain_id": int(chain_id),
        "seconds": seconds,
    }
    return ChainOutput(eta_out, tau_out, tuple(spec.param_names), spec.p, meta, omega_out)
