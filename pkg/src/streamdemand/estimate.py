"""Frequentist estimators linking covariates to affinity and to counts.

Three layers, all per audience segment:

* logistic regression on individual listen/no-listen bits, when user-level
  data exist;
* the strata-size law relating an observed weekly count to the size of the
  audience that produced it (number of Bernoulli trials needed for the
  ``y``-th success);
* log-link Poisson / Negative-Binomial regression of weekly counts on
  covariates, with conditional demand control charts for proposed
  covariate paths.

An always-1 pseudo-channel is appended to the marketing block, so every
fit carries an intercept; it is reported separately from the channel
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .core import AffinityModel, CovariatePath, DemandCurve
from .errors import ConfigurationError, DomainError, FitError, SeparationError

_MAX_ITER = 100
_REL_TOL = 1e-8
_OMEGA_BOUNDS = (1e-3, 1e6)


@dataclass
class RegressionFit:
    """Maximum-likelihood fit of a linked linear model.

    ``theta`` covers the marketing channels, ``gamma`` the ambient
    covariates, with the intercept kept apart. ``omega`` is the
    Negative-Binomial dispersion (None for Poisson and logistic fits);
    variance of a count with mean mu is ``mu + mu**2 / omega``.
    """

    theta: np.ndarray
    gamma: np.ndarray
    intercept: float
    se_theta: np.ndarray
    se_gamma: np.ndarray
    se_intercept: float
    log_likelihood: float
    link: str
    family: str
    omega: float | None = None
    segment_id: int | str | None = None
    n_iter: int = 0

    def __post_init__(self):
        if self.omega is not None and self.omega <= 0:
            raise DomainError("dispersion must be positive")
        if np.any(self.se_theta < 0) or np.any(self.se_gamma < 0) or self.se_intercept < 0:
            raise DomainError("standard errors cannot be negative")
        if not np.isfinite(self.log_likelihood):
            raise FitError("log-likelihood not finite on a successful fit")

    def linear_predictor(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if x.shape[1] != self.theta.shape[0] or z.shape[1] != self.gamma.shape[0]:
            raise ConfigurationError("covariate dimensions do not match the fit")
        return self.intercept + x @ self.theta + z @ self.gamma


@dataclass
class ControlChart:
    """Conditional demand curve with quantile bands for a proposed path.

    Bands are family quantiles at (1 +- level) / 2, widened where needed
    so that lower <= mean <= upper pointwise (discrete quantiles can
    otherwise cross a very small mean).
    """

    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.9
    family: str = "poisson"

    def __post_init__(self):
        if not (np.all(self.lower <= self.mean + 1e-12)
                and np.all(self.mean <= self.upper + 1e-12)):
            raise DomainError("control chart bands must bracket the mean")


def affinity_predict(model: AffinityModel, x: np.ndarray, z: np.ndarray,
                     segment: int = 0) -> float:
    """Listening probability under the model's link for one covariate pair."""
    return model.probability(segment, x, z)


def _stack_observations(observations):
    xs, zs, ys = [], [], []
    for obs in observations:
        x, z, y = obs
        xs.append(np.asarray(x, dtype=float).ravel())
        zs.append(np.asarray(z, dtype=float).ravel())
        ys.append(float(y))
    X = np.vstack(xs) if xs else np.zeros((0, 0))
    Z = np.vstack(zs) if zs else np.zeros((0, 0))
    return X, Z, np.asarray(ys)


def _design(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    return np.hstack([X, Z, np.ones((n, 1))])


def _check_rank(D: np.ndarray):
    if np.linalg.matrix_rank(D) < D.shape[1]:
        raise ConfigurationError("design matrix is rank deficient")


def _split_coefs(beta, cov, C, D_dim):
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return (beta[:C], beta[C:C + D_dim], float(beta[-1]),
            se[:C], se[C:C + D_dim], float(se[-1]))


def fit_logistic(observations, segment_id: int | str | None = None) -> RegressionFit:
    """Logistic MLE of per-listener listening bits on covariates via IRLS.

    Converges when the relative log-likelihood change drops below 1e-8;
    raises SeparationError when the likelihood is degenerate and FitError
    (with the iteration trace attached) when 100 iterations do not converge.
    """
    X, Z, y = _stack_observations(observations)
    n = y.shape[0]
    C, D_dim = X.shape[1], Z.shape[1]
    if n < C + D_dim + 1:
        raise ConfigurationError(
            f"need at least {C + D_dim + 1} observations, got {n}"
        )
    if np.all(y == y[0]):
        raise SeparationError("all responses identical: likelihood is degenerate")
    Dm = _design(X, Z)
    _check_rank(Dm)

    beta = np.zeros(Dm.shape[1])
    ll_old = -np.inf
    trace = []
    for it in range(1, _MAX_ITER + 1):
        eta = np.clip(Dm @ beta, -30.0, 30.0)
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        ll = float(np.sum(y * np.log(mu + 1e-300) + (1 - y) * np.log(1 - mu + 1e-300)))
        trace.append(ll)
        if np.max(np.abs(beta)) > 1e3:
            raise SeparationError("coefficients diverging: separation suspected")
        if ll_old > -np.inf and abs(ll - ll_old) <= _REL_TOL * (abs(ll_old) + 1e-12):
            info = Dm.T @ (w[:, None] * Dm)
            cov = np.linalg.inv(info)
            th, ga, b0, se_th, se_ga, se_b0 = _split_coefs(beta, cov, C, D_dim)
            return RegressionFit(th, ga, b0, se_th, se_ga, se_b0, ll,
                                 link="logit", family="binomial",
                                 segment_id=segment_id, n_iter=it)
        ll_old = ll
        wz = eta + (y - mu) / np.maximum(w, 1e-10)
        WD = w[:, None] * Dm
        beta = np.linalg.solve(Dm.T @ WD, WD.T @ wz)
    raise FitError("logistic IRLS did not converge in 100 iterations", trace=trace)


def negbin_strata_logpmf(n_t: int, y_t: int, p: float) -> float:
    """Log-probability that an audience of size ``n_t`` produced count ``y_t``.

    The count is the number of successes in Bernoulli(p) trials; the
    stratum size is the trial count at which the ``y_t``-th success lands:
    choose(n-1, y-1) * p**y * (1-p)**(n-y), evaluated in log space.
    """
    if y_t < 1:
        raise DomainError("observed count must be at least 1")
    if n_t < y_t:
        raise DomainError(f"stratum size {n_t} cannot be below the count {y_t}")
    if not 0.0 < p < 1.0:
        raise DomainError("probability must lie strictly inside (0, 1)")
    return float(gammaln(n_t) - gammaln(y_t) - gammaln(n_t - y_t + 1)
                 + y_t * np.log(p) + (n_t - y_t) * np.log1p(-p))


def negbin_strata_pmf(n_t: int, y_t: int, p: float) -> float:
    return float(np.exp(negbin_strata_logpmf(n_t, y_t, p)))


def negbin_strata_support_sum(y_t: int, p: float, tol: float = 1e-9,
                              n_max: int = 1_000_000) -> float:
    """Sum of the strata pmf over n >= y with adaptive truncation."""
    total = 0.0
    n = y_t
    while n <= n_max:
        total += negbin_strata_pmf(n, y_t, p)
        if 1.0 - total < tol:
            break
        n += 1
    return total


def _negbin_loglik(y: np.ndarray, mu: np.ndarray, omega: float) -> float:
    return float(np.sum(gammaln(y + omega) - gammaln(omega) - gammaln(y + 1)
                        + omega * np.log(omega / (omega + mu))
                        + y * np.log(mu / (omega + mu) + 1e-300)))


def _poisson_loglik(y: np.ndarray, mu: np.ndarray) -> float:
    return float(np.sum(y * np.log(mu + 1e-300) - mu - gammaln(y + 1)))


def _count_irls(Dm: np.ndarray, y: np.ndarray, beta: np.ndarray,
                omega: float | None) -> tuple[np.ndarray, float, int]:
    """Log-link IRLS; ``omega=None`` is Poisson, otherwise NegBin weights."""
    ll_old = -np.inf
    for it in range(1, _MAX_ITER + 1):
        eta = np.clip(Dm @ beta, -30.0, 30.0)
        mu = np.exp(eta)
        ll = _poisson_loglik(y, mu) if omega is None else _negbin_loglik(y, mu, omega)
        if ll_old > -np.inf and abs(ll - ll_old) <= _REL_TOL * (abs(ll_old) + 1e-12):
            return beta, ll, it
        ll_old = ll
        w = mu if omega is None else mu * omega / (omega + mu)
        wz = eta + (y - mu) / np.maximum(mu, 1e-10)
        WD = w[:, None] * Dm
        beta = np.linalg.solve(Dm.T @ WD, WD.T @ wz)
    raise FitError("count-regression IRLS did not converge in 100 iterations")


def fit_count_regression(curve: DemandCurve, covariates: CovariatePath,
                         family: str = "poisson") -> RegressionFit:
    """Log-link MLE of weekly counts on covariates.

    For the negbin family the dispersion is profiled: coefficients and
    omega alternate until the joint log-likelihood stabilizes.
    """
    if family not in ("poisson", "negbin"):
        raise ConfigurationError(f"unknown family {family!r}")
    y = curve.values.astype(float)
    T = y.shape[0]
    C, D_dim = covariates.n_channels, covariates.n_ambient
    if covariates.horizon != T:
        raise ConfigurationError("covariate horizon does not match the curve")
    if T < C + D_dim + 2:
        raise ConfigurationError(f"need at least {C + D_dim + 2} weeks, got {T}")
    if np.all(y == 0):
        raise FitError("all-zero series: count regression is degenerate")
    Dm = _design(covariates.x, covariates.z)
    _check_rank(Dm)

    beta = np.zeros(Dm.shape[1])
    beta[-1] = np.log(max(np.mean(y), 0.1))
    if family == "poisson":
        beta, ll, it = _count_irls(Dm, y, beta, omega=None)
        mu = np.exp(np.clip(Dm @ beta, -30.0, 30.0))
        info = Dm.T @ (mu[:, None] * Dm)
        omega_hat = None
        n_iter = it
    else:
        omega_hat = 10.0
        ll = -np.inf
        n_iter = 0
        for outer in range(_MAX_ITER):
            beta, ll_beta, it = _count_irls(Dm, y, beta, omega=omega_hat)
            mu = np.exp(np.clip(Dm @ beta, -30.0, 30.0))
            res = minimize_scalar(
                lambda lw: -_negbin_loglik(y, mu, np.exp(lw)),
                bounds=(np.log(_OMEGA_BOUNDS[0]), np.log(_OMEGA_BOUNDS[1])),
                method="bounded",
            )
            omega_hat = float(np.exp(res.x))
            ll_new = _negbin_loglik(y, mu, omega_hat)
            n_iter += it
            if ll > -np.inf and abs(ll_new - ll) <= _REL_TOL * (abs(ll) + 1e-12):
                ll = ll_new
                break
            ll = ll_new
        w = mu * omega_hat / (omega_hat + mu)
        info = Dm.T @ (w[:, None] * Dm)
    cov = np.linalg.inv(info)
    th, ga, b0, se_th, se_ga, se_b0 = _split_coefs(beta, cov, C, D_dim)
    return RegressionFit(th, ga, b0, se_th, se_ga, se_b0, ll,
                         link="log", family=family, omega=omega_hat,
                         n_iter=n_iter)


def conditional_demand_chart(fit: RegressionFit, proposed: CovariatePath,
                             level: float = 0.9) -> ControlChart:
    """Predicted weekly demand with quantile bands under a proposed path."""
    if fit.link != "log":
        raise ConfigurationError("control charts require a log-link count fit")
    if not 0.0 < level < 1.0:
        raise DomainError("band level must lie in (0, 1)")
    mu = np.exp(fit.linear_predictor(proposed.x, proposed.z))
    q_lo, q_hi = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    if fit.family == "poisson" or fit.omega is None:
        lower = stats.poisson.ppf(q_lo, mu)
        upper = stats.poisson.ppf(q_hi, mu)
    else:
        w = fit.omega
        lower = stats.nbinom.ppf(q_lo, w, w / (w + mu))
        upper = stats.nbinom.ppf(q_hi, w, w / (w + mu))
    lower = np.minimum(lower, mu)
    upper = np.maximum(upper, mu)
    return ControlChart(mean=mu, lower=lower, upper=upper, level=level,
                        family=fit.family)
