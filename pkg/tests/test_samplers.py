import numpy as np
import pytest
from scipy import stats

from llmm_gibbs import samplers
from llmm_gibbs.errors import ChainError, InputError, SingularityError
from llmm_gibbs.linalg_sampling import chol_solve_mean
from llmm_gibbs.model import ChainState, ModelSpec, PriorSpec
from llmm_gibbs.rng import make_rng
from llmm_gibbs.samplers import (
    RunConfig,
    SamplerKind,
    beta_conditional,
    bg_step,
    draw_beta,
    draw_eta,
    draw_omega,
    draw_tau,
    draw_u,
    eta_conditional,
    fg_step,
    run_chain,
    tau_conditional,
    u_conditional,
)

from models import random_spec, tiny_spec
from oracles import batch_means_se, gaussian_moments, partitioned_eta_mean, tiny_posterior_beta_mean_2d


def test_rng_streams():
    a = make_rng(1, 0).standard_normal(4)
    np.testing.assert_array_equal(a, make_rng(1, 0).standard_normal(4))
    assert not np.array_equal(a, make_rng(1, 1).standard_normal(4))
    assert not np.array_equal(a, make_rng(1, 0, "init").standard_normal(4))
    with pytest.raises(ValueError):
        make_rng(-1)
    with pytest.raises(ValueError):
        make_rng(0, purpose="other")


# ---------------------------------------------------------------- omega, tau


def test_omega_at_zero_eta_has_mean_quarter():
    rng = make_rng(3, purpose="test")
    M = np.ones((1000, 2))
    pooled = np.concatenate([draw_omega(np.zeros(2), M, rng) for _ in range(1000)])
    se = np.sqrt(1 / 24 / pooled.size)
    assert np.all(pooled > 0)
    assert abs(pooled.mean() - 0.25) < 4 * se


def test_omega_sign_invariance_and_exchangeability():
    M = np.array([[1.0, 2.0], [2.0, 1.0], [-1.0, -2.0], [0.5, 0.5]])
    eta = np.array([0.4, -1.1])
    a = draw_omega(eta, M, make_rng(8, purpose="test"))
    b = draw_omega(-eta, M, make_rng(8, purpose="test"))
    np.testing.assert_array_equal(a, b)
    # rows 0 and 2 have the same |m' eta|
    rng = make_rng(9, purpose="test")
    draws = np.array([draw_omega(eta, M, rng) for _ in range(5000)])
    assert stats.ks_2samp(draws[:, 0], draws[:, 2]).pvalue > 1e-3


def _tau_prior(a, b):
    return PriorSpec.normal([0.0], [[1.0]], a, b)


def test_tau_conditional_parameters():
    shape, rate, null = tau_conditional(np.array([1.0, 1.0]), _tau_prior([1.0], [2.0]), (2,))
    assert (shape[0], rate[0], null) == (2.0, 3.0, False)


@pytest.mark.parametrize(
    "u, a, b, blocks, expected",
    [
        (np.zeros(2), [1.0], [2.0], (2,), [2.0 / 2.0]),             # Gamma(a+q/2, b)
        (np.zeros(3), [0.5, 2.0], [0.0, 1.0], (2, 1), [1.0, 1.0]),  # null set -> Gamma(1, 1)
        (np.array([1.0, 1.0]), [1.0], [2.0], (2,), [2.0 / 3.0]),    # Gamma(2, 3)
    ],
)
def test_tau_draw_means(u, a, b, blocks, expected):
    rng = make_rng(4, purpose="test")
    prior = _tau_prior(a, b)
    shape, rate, _ = tau_conditional(u, prior, blocks)
    draws = np.array([draw_tau(u, prior, blocks, rng) for _ in range(40_000)])
    se = np.sqrt(shape / rate**2 / draws.shape[0])
    assert np.all(draws > 0)
    np.testing.assert_array_less(np.abs(draws.mean(axis=0) - expected), 4 * se)


def test_null_set_uses_exact_zero():
    prior = _tau_prior([0.5], [0.0])
    _, _, null = tau_conditional(np.array([1e-150, 0.0]), prior, (2,))
    assert not null
    _, _, null = tau_conditional(np.zeros(2), prior, (2,))
    assert null
    # b_j > 0 never triggers the fallback
    _, _, null = tau_conditional(np.zeros(2), _tau_prior([0.5], [1.0]), (2,))
    assert not null


# ---------------------------------------------------------------- Gaussian blocks


def _mc(draw, n):
    return np.array([draw() for _ in range(n)])


def _check_gaussian(x, mean, cov, frob=0.05):
    se = np.sqrt(np.diag(cov) / x.shape[0])
    np.testing.assert_array_less(np.abs(x.mean(axis=0) - mean), 4 * se)
    emp = np.atleast_2d(np.cov(x, rowvar=False))
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < frob


def test_beta_least_squares_limit():
    rng = np.random.default_rng(0)
    n, p = 12, 2
    X = np.column_stack([np.ones(n), rng.standard_normal(n)])
    spec = ModelSpec(X, np.ones((n, 1)), (np.arange(n) % 3 == 0).astype(float), (1,),
                     PriorSpec.flat(p, [1.0], [1.0]))
    omega = np.ones(n)
    draw_rng = make_rng(1, purpose="test")
    x = _mc(lambda: draw_beta(np.zeros(1), omega, spec, draw_rng), 40_000)
    ls = np.linalg.lstsq(X, spec.kappa, rcond=None)[0]
    _check_gaussian(x, ls, np.linalg.inv(X.T @ X))


def test_beta_conditional_matches_direct_solve():
    rng = np.random.default_rng(5)
    spec = random_spec(15, 3, (2, 2), rng)
    u, omega = rng.standard_normal(4), rng.random(15) + 0.1
    S, t = beta_conditional(u, omega, spec)
    X, Z, Q, mu0 = spec.X, spec.Z, spec.prior.Q, spec.prior.mu0
    Om = np.diag(omega)
    S_ref = X.T @ Om @ X + Q
    t_ref = X.T @ spec.kappa + Q @ mu0 - X.T @ Om @ Z @ u
    np.testing.assert_allclose(S, S_ref, atol=1e-12)
    np.testing.assert_allclose(t, t_ref, atol=1e-12)
    draw_rng = make_rng(2, purpose="test")
    x = _mc(lambda: draw_beta(u, omega, spec, draw_rng), 60_000)
    _check_gaussian(x, *gaussian_moments(S_ref, t_ref))


def test_beta_prior_dominance():
    rng = np.random.default_rng(6)
    spec = random_spec(10, 2, (2,), rng)
    mu0 = np.array([0.7, -1.4])
    big = PriorSpec.normal(mu0, 1e8 * np.eye(2), [1.0], [1.0])
    spec = ModelSpec(spec.X, spec.Z, spec.y, spec.blocks, big)
    draw_rng = make_rng(3, purpose="test")
    x = _mc(lambda: draw_beta(np.zeros(2), np.ones(10), spec, draw_rng), 5000)
    se = np.sqrt(1e-8 / x.shape[0])
    np.testing.assert_array_less(np.abs(x.mean(axis=0) - mu0), 4 * se + 1e-7)


def test_u_identity_design():
    q = 3
    y = np.array([1.0, 0.0, 1.0])
    spec = ModelSpec(np.ones((q, 1)), np.eye(q), y, (q,), PriorSpec.flat(1, [1.0], [1.0]))
    draw_rng = make_rng(4, purpose="test")
    x = _mc(lambda: draw_u(np.zeros(1), np.ones(q), np.ones(1), spec, draw_rng), 40_000)
    _check_gaussian(x, spec.kappa / 2, np.eye(q) / 2)


def test_u_prior_dominance():
    rng = np.random.default_rng(7)
    spec = random_spec(10, 2, (3,), rng)
    draw_rng = make_rng(5, purpose="test")
    x = _mc(lambda: draw_u(np.ones(2), np.ones(10), np.array([1e8]), spec, draw_rng), 5000)
    np.testing.assert_array_less(np.abs(x.mean(axis=0)), 4 * np.sqrt(1e-8 / 5000) + 1e-7)


def test_u_conditional_matches_direct_solve():
    rng = np.random.default_rng(8)
    spec = random_spec(14, 2, (2, 1), rng)
    beta, omega, tau = rng.standard_normal(2), rng.random(14) + 0.1, np.array([0.5, 2.0])
    S, t = u_conditional(beta, omega, tau, spec)
    Om = np.diag(omega)
    S_ref = spec.Z.T @ Om @ spec.Z + np.diag([0.5, 0.5, 2.0])
    t_ref = spec.Z.T @ spec.kappa - spec.Z.T @ Om @ spec.X @ beta
    np.testing.assert_allclose(S, S_ref, atol=1e-12)
    np.testing.assert_allclose(t, t_ref, atol=1e-12)
    draw_rng = make_rng(6, purpose="test")
    x = _mc(lambda: draw_u(beta, omega, tau, spec, draw_rng), 60_000)
    _check_gaussian(x, *gaussian_moments(S_ref, t_ref))


def test_eta_partitioned_inverse_identity():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        spec = random_spec(20, 2, (2, 2), rng, flat=True)
        omega, tau = rng.random(20) + 0.05, rng.random(2) + 0.2
        S, t = eta_conditional(omega, tau, spec)
        mean = chol_solve_mean(S, t)
        ref = partitioned_eta_mean(spec.X, spec.Z, omega, tau, spec.blocks, spec.kappa)
        np.testing.assert_allclose(mean, ref, rtol=0, atol=1e-8)


def test_eta_zero_shift_gives_zero_mean():
    rng = np.random.default_rng(1)
    spec = random_spec(8, 2, (2,), rng, flat=True)
    half = ModelSpec(spec.X, spec.Z, np.full(8, 0.5), spec.blocks, spec.prior)  # kappa = 0
    S, t = eta_conditional(np.ones(8), np.ones(1), half)
    assert not np.any(t)
    assert not np.any(chol_solve_mean(S, t))


def test_eta_draw_moments():
    rng = np.random.default_rng(9)
    spec = random_spec(12, 2, (2,), rng)
    omega, tau = rng.random(12) + 0.1, np.array([0.7])
    S, t = eta_conditional(omega, tau, spec)
    draw_rng = make_rng(7, purpose="test")
    x = _mc(lambda: draw_eta(omega, tau, spec, draw_rng), 60_000)
    _check_gaussian(x, *gaussian_moments(S, t))


# ---------------------------------------------------------------- transitions


class Recorder:
    """Wraps the module-level draw functions and logs each call."""

    def __init__(self, monkeypatch):
        self.calls = []
        for name in ("draw_tau", "draw_omega", "draw_u", "draw_beta", "draw_eta"):
            original = getattr(samplers, name)
            monkeypatch.setattr(samplers, name, self._wrap(name, original))

    def _wrap(self, name, fn):
        def wrapped(*args):
            out = fn(*args)
            self.calls.append((name, [np.array(a, copy=True) if isinstance(a, np.ndarray) else a
                                      for a in args], np.array(out, copy=True)))
            return out
        return wrapped

    @property
    def order(self):
        return [c[0] for c in self.calls]


def test_fg_update_order_and_arguments(monkeypatch):
    spec = tiny_spec()
    rec = Recorder(monkeypatch)
    state = ChainState([0.3], [-0.4], np.ones(10), [1.0])
    new = fg_step(state, spec, make_rng(1))
    assert rec.order == ["draw_tau", "draw_omega", "draw_u", "draw_beta"]
    (_, tau_args, tau), (_, om_args, omega), (_, u_args, u), (_, b_args, beta) = rec.calls
    np.testing.assert_array_equal(tau_args[0], state.u)                      # tau from current u
    np.testing.assert_array_equal(om_args[0], state.eta)                     # omega from current eta
    np.testing.assert_array_equal(u_args[0], state.beta)                     # u given old beta
    np.testing.assert_array_equal(u_args[1], omega)
    np.testing.assert_array_equal(u_args[2], tau)
    np.testing.assert_array_equal(b_args[0], u)                              # beta given new u
    np.testing.assert_array_equal(b_args[1], omega)
    np.testing.assert_array_equal(new.beta, beta)
    np.testing.assert_array_equal(new.u, u)


def test_bg_update_order_and_arguments(monkeypatch):
    spec = tiny_spec()
    rec = Recorder(monkeypatch)
    state = ChainState([0.3], [-0.4], np.ones(10), [1.0])
    new = bg_step(state, spec, make_rng(1))
    assert rec.order == ["draw_tau", "draw_omega", "draw_eta"]
    (_, tau_args, tau), (_, om_args, omega), (_, eta_args, eta) = rec.calls
    np.testing.assert_array_equal(tau_args[0], state.u)
    np.testing.assert_array_equal(om_args[0], state.eta)
    np.testing.assert_array_equal(eta_args[0], omega)
    np.testing.assert_array_equal(eta_args[1], tau)
    np.testing.assert_array_equal(new.eta, eta)


class RecordingRNG:
    """Generator proxy logging which distribution consumed randomness."""

    def __init__(self, rng):
        self._rng = rng
        self.log = []

    def gamma(self, *a, **k):
        self.log.append("gamma")
        return self._rng.gamma(*a, **k)

    def standard_normal(self, *a, **k):
        self.log.append("normal")
        return self._rng.standard_normal(*a, **k)


def test_recording_rng_order(monkeypatch):
    # the PG kernel needs a real Generator, so omega draws are logged separately
    spec = tiny_spec()
    rec = RecordingRNG(make_rng(0))

    def omega_from_real(eta, M, rng):
        rec.log.append("pg")
        return draw_omega(eta, M, rec._rng)

    monkeypatch.setattr(samplers, "draw_omega", omega_from_real)
    state = ChainState.default(spec)
    fg_step(state, spec, rec)
    assert rec.log == ["gamma", "pg", "normal", "normal"]
    rec.log.clear()
    bg_step(state, spec, rec)
    assert rec.log == ["gamma", "pg", "normal"]


def test_hand_checked_substeps(monkeypatch):
    # n = p = q = 1, x = 2, y = 1, prior N(0.5, 1/3), tau ~ Gamma(2, 1)
    spec = ModelSpec([[2.0]], [[1.0]], [1.0], (1,), PriorSpec.normal([0.5], [[3.0]], [2.0], [1.0]))
    state = ChainState([0.25], [-0.5], [1.0], [1.0])
    seen = {}

    def spy(name, fn):
        def wrapped(*args):
            seen[name] = fn(*args)
            return seen[name]
        return wrapped

    for name in ("tau_conditional", "u_conditional", "beta_conditional", "eta_conditional"):
        monkeypatch.setattr(samplers, name, spy(name, getattr(samplers, name)))
    rec = Recorder(monkeypatch)
    fg_step(state, spec, make_rng(3))
    omega, tau, u_new = rec.calls[1][2][0], rec.calls[0][2][0], rec.calls[2][2][0]

    shape, rate, _ = seen["tau_conditional"]
    assert (shape[0], rate[0]) == (2.5, 1.125)          # 2 + 1/2, 1 + 0.25/2
    S, t = seen["u_conditional"]
    assert S[0, 0] == pytest.approx(omega + tau)
    assert t[0] == pytest.approx(0.5 - omega * 2.0 * 0.25)
    S, t = seen["beta_conditional"]
    assert S[0, 0] == pytest.approx(4.0 * omega + 3.0)
    assert t[0] == pytest.approx(2.0 * 0.5 + 3.0 * 0.5 - 2.0 * omega * u_new)

    rec.calls.clear()
    bg_step(state, spec, make_rng(3))
    omega, tau = rec.calls[1][2][0], rec.calls[0][2][0]
    S, t = seen["eta_conditional"]
    np.testing.assert_allclose(S, [[4 * omega + 3, 2 * omega], [2 * omega, omega + tau]])
    np.testing.assert_allclose(t, [2 * 0.5 + 3 * 0.5, 0.5])


def test_block_independence_of_tau_and_omega():
    spec = tiny_spec()
    eta = np.array([0.5, -0.3])
    rng = make_rng(12, purpose="test")
    n = 100_000
    taus = np.empty(n)
    omegas = np.empty(n)
    for i in range(n):
        taus[i] = draw_tau(eta[1:], spec.prior, spec.blocks, rng)[0]
        omegas[i] = draw_omega(eta, spec.M[:1], rng)[0]
    r = np.corrcoef(taus, omegas)[0, 1]
    assert abs(r) < 4 / np.sqrt(n)


@pytest.mark.parametrize("step", [fg_step, bg_step])
def test_step_determinism(step):
    spec = tiny_spec()
    state = ChainState([0.1], [0.2], np.ones(10), [1.0])
    a = step(state, spec, make_rng(5))
    b = step(state, spec, make_rng(5))
    np.testing.assert_array_equal(a.eta, b.eta)
    np.testing.assert_array_equal(a.tau, b.tau)
    np.testing.assert_array_equal(a.omega, b.omega)


@pytest.mark.parametrize("kind", ["fg", "bg"])
def test_stationarity_from_posterior_start(kind):
    from models import TINY_PRIOR, TINY_X, TINY_Y
    target = tiny_posterior_beta_mean_2d(TINY_X, TINY_Y, **TINY_PRIOR)
    spec = tiny_spec()
    init = ChainState([target], [0.0], np.ones(10), [2.0])
    out = run_chain(spec, RunConfig(kind, 40_000, 0, 1, seed=21, init=init))
    beta = out.beta[:, 0]
    assert abs(beta.mean() - target) < 3 * batch_means_se(beta)


# ---------------------------------------------------------------- run_chain


def test_run_chain_row_count_and_meta():
    out = run_chain(tiny_spec(), RunConfig("bg", 100, 20, 2, seed=1))
    assert out.draws_eta.shape == (40, 2)
    assert out.draws_tau.shape == (40, 1)
    assert out.draws.shape == (40, 3)
    assert out.names == ("beta[beta0]", "u[u0]", "tau[tau1]")
    assert out.meta["sampler"] == "bg" and out.meta["chain_id"] == 1
    assert np.all(out.tau > 0)
    assert out.draws_omega is None


def test_run_chain_thinning_keeps_expected_iterations():
    full = run_chain(tiny_spec(), RunConfig("fg", 30, 0, 1, seed=4))
    thin = run_chain(tiny_spec(), RunConfig("fg", 30, 6, 4, seed=4))
    # kept iterations 10, 14, ..., 30
    np.testing.assert_array_equal(thin.draws, full.draws[9::4])


def test_run_chain_reproducible():
    cfg = RunConfig("fg", 200, 50, 1, seed=99, store_omega=True)
    a, b = run_chain(tiny_spec(), cfg), run_chain(tiny_spec(), cfg)
    np.testing.assert_array_equal(a.draws, b.draws)
    np.testing.assert_array_equal(a.draws_omega, b.draws_omega)
    c = run_chain(tiny_spec(), RunConfig("fg", 200, 50, 1, seed=100))
    assert not np.array_equal(a.draws, c.draws)


def test_run_chain_timing_grows_with_iterations():
    short = run_chain(tiny_spec(), RunConfig("bg", 10, 0, 1, seed=1))
    long = run_chain(tiny_spec(), RunConfig("bg", 5000, 0, 1, seed=1))
    assert 0 < short.seconds < long.seconds


def test_step_errors_carry_iteration(monkeypatch):
    calls = {"n": 0}
    original = samplers.draw_u

    def failing(*args):
        calls["n"] += 1
        if calls["n"] == 3:
            raise SingularityError("precision matrix is not positive definite", pivot=0)
        return original(*args)

    monkeypatch.setattr(samplers, "draw_u", failing)
    with pytest.raises(ChainError) as err:
        run_chain(tiny_spec(), RunConfig("fg", 10, 0, 1, seed=1))
    assert err.value.iteration == 3
    assert "iteration 3" in str(err.value)


def test_config_validation():
    with pytest.raises(InputError):
        RunConfig("fg", 10, 10)
    with pytest.raises(InputError):
        RunConfig("fg", 0)
    with pytest.raises(InputError):
        RunConfig("fg", 10, 0, 0)
    with pytest.raises(InputError):
        RunConfig("fg", 10, seed=-1)
    with pytest.raises(InputError):
        SamplerKind.parse("metropolis")
    assert SamplerKind.parse("BlockGibbs") is SamplerKind.BLOCK
    assert SamplerKind.parse("FullGibbs") is SamplerKind.FULL
    with pytest.raises(InputError):
        run_chain(tiny_spec(), RunConfig("fg", 10, init=ChainState([0.0, 0.0], [0.0], [1.0], [1.0])))


def test_invalid_spec_is_rejected():
    spec = tiny_spec()
    bad = ModelSpec(spec.X, spec.Z, spec.y, (2,), spec.prior)
    with pytest.raises(InputError):
        run_chain(bad, RunConfig("bg", 10))
