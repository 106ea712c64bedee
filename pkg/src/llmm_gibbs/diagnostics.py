"""Chain-quality metrics: ACF, ESS, multivariate ESS and mean squared jumps.

Long-run variances use nonoverlapping batch means with batch size
``b = floor(sqrt(m))``. The ``m - a b`` trailing draws that do not fill a
batch are dropped from the batch-means estimate only.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateVarianceError, DomainError, RankError

MIN_ESS_LENGTH = 100
RANK_RTOL = 1e-12


def _as_series(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"expected a 1-d series, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    return x


def _as_draws(draws):
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    if draws.ndim != 2:
        raise DomainError(f"expected an (m, d) matrix, got shape {draws.shape}")
    if not np.all(np.isfinite(draws)):
        raise DomainError("draws contain non-finite values")
    return draws


def acf(series, max_lag):
    """Sample autocorrelations at lags 0..max_lag.

    Uses the biased autocovariance ``(1/m) sum (x_t - xbar)(x_{t+k} - xbar)``
    at every lag, so lag 0 is exactly 1.
    """
    x = _as_series(series)
    m = x.size
    max_lag = int(max_lag)
    if max_lag < 0 or m <= max_lag:
        raise DomainError(f"need 0 <= max_lag < length (got {max_lag}, {m})")
    if np.ptp(x) == 0.0:
        raise DegenerateVarianceError("series is constant")
    xc = x - x.mean()
    gamma0 = xc @ xc / m
    if not gamma0 > 0.0:
        raise DegenerateVarianceError("series has zero sample variance")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = (xc[:m - k] @ xc[k:] / m) / gamma0
    return out


def batch_means_cov(draws):
    """Nonoverlapping batch-means estimate of the long-run covariance.

    Returns ``b / (a - 1) * sum_k (Ybar_k - Ybar)(Ybar_k - Ybar)'`` with
    ``a = floor(m / b)`` batches of size ``b = floor(sqrt(m))``.
    """
    draws = _as_draws(draws)
    m, d = draws.shape
    b = int(np.floor(np.sqrt(m)))
    a = m // b
    if a < 2:
        raise DomainError("too few draws for batch means")
    means = draws[:a * b].reshape(a, b, d).mean(axis=1)
    dev = means - means.mean(axis=0)
    return b * (dev.T @ dev) / (a - 1)


def _logdet_pd(C, what):
    w, V = np.linalg.eigh(C)
    if not w[-1] > 0 or w[0] <= RANK_RTOL * w[-1]:
        raise RankError(f"{what} is singular", direction=V[:, 0])
    sign, logdet = np.linalg.slogdet(C)
    return logdet


def _ess_core(draws):
    draws = _as_draws(draws)
    m, d = draws.shape
    if m < MIN_ESS_LENGTH * d:
        raise DomainError(f"need at least {MIN_ESS_LENGTH * d} draws for dimension {d}, got {m}")
    if np.any(np.ptp(draws, axis=0) == 0.0):
        j = int(np.flatnonzero(np.ptp(draws, axis=0) == 0.0)[0])
        if d == 1:
            raise DegenerateVarianceError("series is constant")
        direction = np.zeros(d)
        direction[j] = 1.0
        raise RankError(f"coordinate {j} is constant", direction=direction)
    lam = np.atleast_2d(np.cov(draws, rowvar=False))
    sig = batch_means_cov(draws)
    if d == 1:
        if not lam[0, 0] > 0.0 or not sig[0, 0] > 0.0:
            raise DegenerateVarianceError("zero variance estimate")
        return m * lam[0, 0] / sig[0, 0]
    ld_lam = _logdet_pd(lam, "sample covariance")
    ld_sig = _logdet_pd(sig, "batch-means covariance")
    return m * np.exp((ld_lam - ld_sig) / d)


def ess(series):
    """Univariate effective sample size ``m * lambda^2 / sigma^2``.

    ``lambda^2`` is the sample variance and ``sigma^2`` the batch-means
    long-run variance.
    """
    return float(_ess_core(_as_series(series)[:, None]))


def mess(draws):
    """Multivariate ESS ``m * (det Lambda / det Sigma)^(1/d)``.

    Raises
    ------
    RankError
        If either covariance estimate is singular; ``direction`` spans the
        offending subspace.
    """
    return float(_ess_core(draws))


def msj(draws):
    """Mean squared Euclidean jump between consecutive rows."""
    draws = _as_draws(draws)
    if draws.shape[0] < 2:
        raise DomainError("need at least two draws")
    jumps = np.diff(draws, axis=0)
    return float(np.mean(np.sum(jumps * jumps, axis=1)))


@dataclass
class DiagnosticsReport:
    """Per-coordinate ACF and ESS plus per-group mESS and MSJ.

    Metrics that cannot be computed (too few draws, constant coordinate)
    are stored as ``None`` and explained in ``warnings``.
    """

    n_draws: int
    seconds: float | None
    acf: dict
    ess: dict
    mess: dict
    msj: dict
    ess_per_second: dict
    mess_per_second: dict
    groups: dict
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def default_groups(names):
    """beta, (beta, tau) and tau groups by column-name prefix."""
    beta = [s for s in names if s.startswith("beta")]
    tau = [s for s in names if s.startswith("tau")]
    groups = {}
    if beta:
        groups["beta"] = beta
    if beta and tau:
        groups["beta_tau"] = beta + tau
    if tau:
        groups["tau"] = tau
    return groups


def diagnose(draws, names, max_lag=5, groups=None, seconds=None):
    """Compute every metric for an ``(m, d)`` draws matrix with column ``names``."""
    draws = _as_draws(draws)
    names = list(names)
    if len(names) != draws.shape[1]:
        raise DomainError("one name per column is required")
    if groups is None:
        groups = default_groups(names)
    index = {s: i for i, s in enumerate(names)}
    for g, cols in groups.items():
        missing = [c for c in cols if c not in index]
        if missing:
            raise DomainError(f"group {g!r} names unknown columns {missing}")

    warnings = []
    acfs, esss = {}, {}
    for i, s in enumerate(names):
        col = draws[:, i]
        try:
            acfs[s] = acf(col, max_lag).tolist()
        except (DomainError, DegenerateVarianceError) as exc:
            acfs[s] = None
            warnings.append(f"acf[{s}]: {exc}")
        try:
            esss[s] = ess(col)
        except (DomainError, DegenerateVarianceError) as exc:
            esss[s] = None
            warnings.append(f"ess[{s}]: {exc}")

    messes, msjs = {}, {}
    for g, cols in groups.items():
        sub = draws[:, [index[c] for c in cols]]
        try:
            messes[g] = mess(sub)
        except (DomainError, DegenerateVarianceError, RankError) as exc:
            messes[g] = None
            warnings.append(f"mess[{g}]: {exc}")
        try:
            msjs[g] = msj(sub)
        except DomainError as exc:
            msjs[g] = None
            warnings.append(f"msj[{g}]: {exc}")

    def per_second(d):
        if not seconds or seconds <= 0:
            return {k: None for k in d}
        return {k: (None if v is None else v / seconds) for k, v in d.items()}

    return DiagnosticsReport(
        n_draws=int(draws.shape[0]),
        seconds=seconds,
        acf=acfs,
        ess=esss,
        mess=messes,
        msj=msjs,
        ess_per_second=per_second(esss),
        mess_per_second=per_second(messes),
        groups={g: list(c) for g, c in groups.items()},
        warnings=warnings,
    )


def diagnose_chain(output, max_lag=5, groups=None):
    """:func:`diagnose` applied to a :class:`~llmm_gibbs.samplers.ChainOutput`."""
    return diagnose(output.draws, output.names, max_lag=max_lag, groups=groups,
                    seconds=output.seconds)
