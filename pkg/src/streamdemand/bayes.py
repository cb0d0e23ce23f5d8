"""Bayesian hierarchy for always-on demand prediction.

Weekly counts per segment follow a Negative Binomial whose log-mean is
linear in the covariates. Channel effects are exchangeable within artist
(Normal with an LKJ-correlated covariance), ambient effects are truncated
to the positive reals, concentrations get chi-square hyperpriors and the
dispersion a Gamma prior.

Sampling is adaptive random-walk Metropolis-within-Gibbs: one block per
segment for channel effects, ambient effects (reflected at zero) and
log-dispersion, plus per-artist blocks for the correlation matrices
(parameterized by partial correlations) and their concentrations.
Proposal scales adapt toward a 0.3 acceptance rate during warmup and are
frozen afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .core import CovariatePath, DemandCurve
from .draws import PosteriorDraws
from .errors import ConfigurationError, DomainError, FitError
from .rng import rng_from_seed

_LP_CAP = 30.0


# ---------------------------------------------------------------------------
# LKJ correlation matrices via partial correlations (C-vine construction)

def _partials_to_corr(partials: np.ndarray, dim: int) -> np.ndarray:
    """Map the vector of partial correlations to a correlation matrix."""
    P = np.zeros((dim, dim))
    iu = np.triu_indices(dim, 1)
    P[iu] = partials
    R = np.eye(dim)
    for i in range(1, dim):
        for j in range(i):
            rho = P[j, i]
            for l in range(j - 1, -1, -1):
                rho = rho * np.sqrt((1 - P[l, i] ** 2) * (1 - P[l, j] ** 2)) \
                    + P[l, i] * P[l, j]
            R[j, i] = R[i, j] = rho
    return R


def _partial_beta_shapes(dim: int, eta: float) -> np.ndarray:
    """Beta shape per partial correlation under an LKJ(eta) prior."""
    iu = np.triu_indices(dim, 1)
    levels = iu[0] + 1  # tree level of each partial correlation
    return eta + (dim - 1 - levels) / 2.0


def _partials_logpdf(partials: np.ndarray, dim: int, eta: float) -> float:
    if np.any(np.abs(partials) >= 1.0):
        return -np.inf
    shapes = _partial_beta_shapes(dim, eta)
    u = (partials + 1.0) / 2.0
    return float(np.sum(stats.beta.logpdf(u, shapes, shapes) - np.log(2.0)))


def sample_lkj(dimension: int, eta: float, rng: np.random.Generator) -> np.ndarray:
    """A correlation matrix distributed LKJ(eta)."""
    if dimension < 2:
        raise DomainError("LKJ needs dimension >= 2")
    if eta <= 0:
        raise DomainError("LKJ concentration must be positive")
    shapes = _partial_beta_shapes(dimension, eta)
    partials = 2.0 * rng.beta(shapes, shapes) - 1.0
    # small eta puts mass hard against +-1; keep the matrix numerically PD
    partials = np.clip(partials, -1.0 + 1e-7, 1.0 - 1e-7)
    return _partials_to_corr(partials, dimension)


# ---------------------------------------------------------------------------
# Model specification and data panel

@dataclass(frozen=True)
class NullModelSpec:
    """Priors and index structure for the always-on hierarchy.

    One hyperparameter set is shared across artists; concentrations and
    correlation matrices are still drawn per artist. ``disp_shape`` /
    ``disp_rate`` parameterize the Gamma dispersion prior by shape and
    rate (mean shape/rate).
    """

    artists: tuple[str, ...]
    segments_per_artist: tuple[int, ...]
    mu_x: np.ndarray
    scale_x: np.ndarray
    mu_z: np.ndarray
    scale_z: np.ndarray
    tau_x: float = 4.0
    tau_z: float = 4.0
    disp_shape: float = 2.0
    disp_rate: float = 0.5

    def __post_init__(self):
        for name in ("mu_x", "scale_x", "mu_z", "scale_z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if len(self.artists) != len(self.segments_per_artist):
            raise ConfigurationError("one segment count per artist required")
        if len(self.artists) < 1 or any(s < 1 for s in self.segments_per_artist):
            raise ConfigurationError("need at least one artist with one segment")
        if self.scale_x.shape != self.mu_x.shape or self.scale_z.shape != self.mu_z.shape:
            raise ConfigurationError("prior scales must match prior means in shape")
        positives = (self.tau_x, self.tau_z, self.disp_shape, self.disp_rate,
                     *self.scale_x, *self.scale_z)
        if any(v <= 0 for v in positives):
            raise DomainError("hyperparameters must be positive")

    @property
    def n_channels(self) -> int:
        return self.mu_x.shape[0]

    @property
    def n_ambient(self) -> int:
        return self.mu_z.shape[0]

    @property
    def n_segments(self) -> int:
        return int(sum(self.segments_per_artist))

    def artist_of_segment(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.artists)), self.segments_per_artist)

    def to_dict(self) -> dict:
        return {
            "artists": list(self.artists),
            "segments_per_artist": list(self.segments_per_artist),
            "mu_x": self.mu_x.tolist(), "scale_x": self.scale_x.tolist(),
            "mu_z": self.mu_z.tolist(), "scale_z": self.scale_z.tolist(),
            "tau_x": self.tau_x, "tau_z": self.tau_z,
            "disp_shape": self.disp_shape, "disp_rate": self.disp_rate,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NullModelSpec":
        return cls(artists=tuple(doc["artists"]),
                   segments_per_artist=tuple(doc["segments_per_artist"]),
                   mu_x=doc["mu_x"], scale_x=doc["scale_x"],
                   mu_z=doc["mu_z"], scale_z=doc["scale_z"],
                   tau_x=doc["tau_x"], tau_z=doc["tau_z"],
                   disp_shape=doc["disp_shape"], disp_rate=doc["disp_rate"])


@dataclass(frozen=True)
class DemandPanel:
    """Per-segment demand curves labelled by artist, on a shared path."""

    curves: tuple[DemandCurve, ...]
    artist_ids: tuple[str, ...]
    covariates: CovariatePath

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "artist_ids", tuple(self.artist_ids))
        if len(self.curves) != len(self.artist_ids):
            raise ConfigurationError("one artist id per curve required")
        if not self.curves:
            raise ConfigurationError("panel needs at least one curve")
        T = self.curves[0].horizon
        if any(c.horizon != T for c in self.curves):
            raise ConfigurationError("curves must share one horizon")
        if self.covariates.horizon != T:
            raise ConfigurationError("covariates must match the curve horizon")

    @property
    def horizon(self) -> int:
        return self.curves[0].horizon

    def counts(self) -> np.ndarray:
        return np.stack([c.values for c in self.curves]).astype(float)

    def default_spec(self, mu_x=None, scale_x=None, mu_z=None, scale_z=None,
                     **hyper) -> NullModelSpec:
        artists = []
        for a in self.artist_ids:
            if a not in artists:
                artists.append(a)
        seg_counts = [sum(1 for x in self.artist_ids if x == a) for a in artists]
        C, D = self.covariates.n_channels, self.covariates.n_ambient
        return NullModelSpec(
            artists=tuple(artists), segments_per_artist=tuple(seg_counts),
            mu_x=np.full(C, 0.5) if mu_x is None else mu_x,
            scale_x=np.full(C, 1.0) if scale_x is None else scale_x,
            mu_z=np.full(D, 0.5) if mu_z is None else mu_z,
            scale_z=np.full(D, 1.0) if scale_z is None else scale_z,
            **hyper)


@dataclass(frozen=True)
class MCMCConfig:
    chains: int = 4
    warmup: int = 2000
    draws: int = 2000
    seed: int = 0
    adapt_window: int = 50
    target_accept: float = 0.3
    prior_only: bool = False
    thin: int = 1

    def __post_init__(self):
        if self.chains < 1 or self.draws < 1 or self.warmup < 0:
            raise ConfigurationError("chains and draws must be positive")
        if not 0.2 <= self.target_accept <= 0.5:
            raise ConfigurationError("target acceptance must sit in [0.2, 0.5]")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("chains", "warmup", "draws", "seed", "adapt_window",
                 "target_accept", "prior_only", "thin")}

    @classmethod
    def from_dict(cls, doc: dict) -> "MCMCConfig":
        return cls(**doc)


# ---------------------------------------------------------------------------
# Priors

def sample_prior(spec: NullModelSpec, rng: np.random.Generator) -> dict:
    """One joint draw from the prior stack."""
    A = len(spec.artists)
    C, D = spec.n_channels, spec.n_ambient
    eta_x = rng.chisquare(spec.tau_x, size=A)
    eta_z = rng.chisquare(spec.tau_z, size=A)
    corr_x = np.stack([sample_lkj(C, eta_x[a], rng) if C >= 2 else np.ones((1, 1))
                       for a in range(A)]) if C >= 1 else np.zeros((A, 0, 0))
    corr_z = np.stack([sample_lkj(D, eta_z[a], rng) if D >= 2 else np.ones((1, 1))
                       for a in range(A)]) if D >= 1 else np.zeros((A, 0, 0))
    artist_of = spec.artist_of_segment()
    J = spec.n_segments
    theta = np.zeros((J, C))
    gamma = np.zeros((J, D))
    for j in range(J):
        a = artist_of[j]
        if C:
            cov_x = np.diag(spec.scale_x) @ corr_x[a] @ np.diag(spec.scale_x)
            theta[j] = rng.multivariate_normal(spec.mu_x, cov_x, method="cholesky")
        if D:
            cov_z = np.diag(spec.scale_z) @ corr_z[a] @ np.diag(spec.scale_z)
            while True:  # truncation to the positive orthant
                g = rng.multivariate_normal(spec.mu_z, cov_z, method="cholesky")
                if np.all(g >= 0):
                    gamma[j] = g
                    break
    omega = rng.gamma(spec.disp_shape, 1.0 / spec.disp_rate, size=J)
    return {"theta": theta, "gamma": gamma, "omega": omega,
            "eta_x": eta_x, "eta_z": eta_z, "corr_x": corr_x, "corr_z": corr_z}


def _negbin_loglik_rows(y: np.ndarray, mu: np.ndarray, omega: float) -> float:
    mu = np.maximum(mu, 1e-12)
    return float(np.sum(gammaln(y + omega) - gammaln(omega) - gammaln(y + 1)
                        + omega * np.log(omega / (omega + mu))
                        + y * np.log(mu / (omega + mu))))


def _mvn_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> float:
    dev = solve_triangular(chol, x - mean, lower=True)
    return float(-0.5 * dev @ dev - np.sum(np.log(np.diag(chol)))
                 - 0.5 * x.shape[0] * np.log(2 * np.pi))


def _orthant_log_prob(mean: np.ndarray, cov: np.ndarray) -> float:
    """log P(X >= 0) for X ~ N(mean, cov); the TruncNormal normalizer."""
    d = mean.shape[0]
    if d == 0:
        return 0.0
    if d == 1:
        return float(stats.norm.logcdf(mean[0] / np.sqrt(cov[0, 0])))
    p = stats.multivariate_normal(mean=-mean, cov=cov, allow_singular=True).cdf(
        np.zeros(d))
    return float(np.log(max(p, 1e-300)))


# ---------------------------------------------------------------------------
# Adaptive random-walk machinery (shared with the forced-model sampler)

class StepAdapter:
    """Per-block proposal scales, adapted in batches during warmup only."""

    def __init__(self, names: Sequence[str], target: float, window: int,
                 init_step: float = 0.3):
        self.step = {n: init_step for n in names}
        self.accepted = {n: 0 for n in names}
        self.tried = {n: 0 for n in names}
        self.realized: dict[str, list[float]] = {n: [] for n in names}
        self.target = target
        self.window = window
        self.frozen = False

    def record(self, name: str, accepted: bool):
        self.tried[name] += 1
        self.accepted[name] += int(accepted)
        if not self.frozen and self.tried[name] >= self.window:
            rate = self.accepted[name] / self.tried[name]
            self.step[name] *= math.exp(1.0 * (rate - self.target))
            self.step[name] = min(max(self.step[name], 1e-4), 50.0)
            self.accepted[name] = 0
            self.tried[name] = 0

    def freeze(self):
        self.frozen = True
        for n in self.accepted:
            self.accepted[n] = 0
            self.tried[n] = 0

    def post_warmup_rates(self) -> dict[str, float]:
        return {n: (self.accepted[n] / self.tried[n]) if self.tried[n] else np.nan
                for n in self.accepted}


def _reflect(values: np.ndarray, lo: float | None = None,
             hi: float | None = None) -> np.ndarray:
    out = np.asarray(values, dtype=float).copy()
    for _ in range(64):
        moved = False
        if lo is not None:
            mask = out < lo
            if np.any(mask):
                out[mask] = 2 * lo - out[mask]
                moved = True
        if hi is not None:
            mask = out > hi
            if np.any(mask):
                out[mask] = 2 * hi - out[mask]
                moved = True
        if not moved:
            return out
    raise FitError("reflection did not settle; proposal scale far too large")


# ---------------------------------------------------------------------------
# The null-model sampler

class _NullSampler:
    def __init__(self, panel: DemandPanel, spec: NullModelSpec, config: MCMCConfig):
        self.spec = spec
        self.config = config
        self.y = panel.counts()
        self.x = panel.covariates.x
        self.z = panel.covariates.z
        self.J = self.y.shape[0]
        self.C = spec.n_channels
        self.D = spec.n_ambient
        self.A = len(spec.artists)
        self.artist_of = spec.artist_of_segment()
        if self.J != spec.n_segments:
            raise ConfigurationError(
                f"panel has {self.J} curves, spec declares {spec.n_segments} segments")
        self.n_partials_x = self.C * (self.C - 1) // 2
        self.n_partials_z = self.D * (self.D - 1) // 2

    # -- state helpers ------------------------------------------------------

    def init_state(self, rng, init: dict | None):
        draw = sample_prior(self.spec, rng)
        if init:
            for key, val in init.items():
                if key in ("theta", "gamma", "omega"):
                    draw[key] = np.asarray(val, dtype=float).reshape(draw[key].shape)
        state = {
            "theta": draw["theta"], "gamma": np.maximum(draw["gamma"], 1e-6),
            "log_omega": np.log(np.maximum(draw["omega"], 1e-6)),
            "eta_x": draw["eta_x"], "eta_z": draw["eta_z"],
            "part_x": np.zeros((self.A, self.n_partials_x)),
            "part_z": np.zeros((self.A, self.n_partials_z)),
        }
        self._refresh_chol(state)
        state["loglik"] = np.array([self._seg_loglik(state, j) for j in range(self.J)])
        return state

    def _refresh_chol(self, state, artists=None):
        if "chol_x" not in state:
            state["chol_x"] = [None] * self.A
            state["chol_z"] = [None] * self.A
            state["corr_x"] = np.zeros((self.A, self.C, self.C))
            state["corr_z"] = np.zeros((self.A, self.D, self.D))
        for a in (range(self.A) if artists is None else artists):
            Rx = _partials_to_corr(state["part_x"][a], self.C) if self.C else np.zeros((0, 0))
            Rz = _partials_to_corr(state["part_z"][a], self.D) if self.D else np.zeros((0, 0))
            state["corr_x"][a] = Rx
            state["corr_z"][a] = Rz
            if self.C:
                cov = np.diag(self.spec.scale_x) @ Rx @ np.diag(self.spec.scale_x)
                state["chol_x"][a] = np.linalg.cholesky(cov)
            if self.D:
                cov = np.diag(self.spec.scale_z) @ Rz @ np.diag(self.spec.scale_z)
                state["chol_z"][a] = np.linalg.cholesky(cov)

    def _seg_loglik(self, state, j, theta=None, gamma=None, log_omega=None) -> float:
        if self.config.prior_only:
            return 0.0
        th = state["theta"][j] if theta is None else theta
        ga = state["gamma"][j] if gamma is None else gamma
        lw = state["log_omega"][j] if log_omega is None else log_omega
        lp = np.clip(self.x @ th + self.z @ ga, -_LP_CAP, _LP_CAP)
        return _negbin_loglik_rows(self.y[j], np.exp(lp), np.exp(lw))

    # -- priors --------------------------------------------------------------

    def _theta_prior(self, state, j, theta=None) -> float:
        if not self.C:
            return 0.0
        th = state["theta"][j] if theta is None else theta
        return _mvn_logpdf(th, self.spec.mu_x, state["chol_x"][self.artist_of[j]])

    def _gamma_prior(self, state, j, gamma=None) -> float:
        # orthant normalizer omitted: constant in gamma, handled in the
        # correlation block where it varies
        if not self.D:
            return 0.0
        ga = state["gamma"][j] if gamma is None else gamma
        if np.any(ga < 0):
            return -np.inf
        return _mvn_logpdf(ga, self.spec.mu_z, state["chol_z"][self.artist_of[j]])

    def _omega_prior(self, state, j, log_omega=None) -> float:
        lw = state["log_omega"][j] if log_omega is None else log_omega
        w = np.exp(lw)
        return float((self.spec.disp_shape) * lw - self.spec.disp_rate * w)
        # Gamma(shape, rate) density in w plus the log-scale Jacobian:
        # (shape-1) log w - rate w + log w

    # -- one full Gibbs sweep -------------------------------------------------

    def sweep(self, state, rng, adapter: StepAdapter):
        for j in range(self.J):
            if self.C:
                name = f"theta[{j}]"
                prop = state["theta"][j] + adapter.step[name] * rng.standard_normal(self.C)
                cur = state["loglik"][j] + self._theta_prior(state, j)
                new_ll = self._seg_loglik(state, j, theta=prop)
                new = new_ll + self._theta_prior(state, j, theta=prop)
                if np.log(rng.random()) < new - cur:
                    state["theta"][j] = prop
                    state["loglik"][j] = new_ll
                    adapter.record(name, True)
                else:
                    adapter.record(name, False)
            if self.D:
                name = f"gamma[{j}]"
                prop = _reflect(state["gamma"][j]
                                + adapter.step[name] * rng.standard_normal(self.D),
                                lo=0.0)
                cur = state["loglik"][j] + self._gamma_prior(state, j)
                new_ll = self._seg_loglik(state, j, gamma=prop)
                new = new_ll + self._gamma_prior(state, j, gamma=prop)
                if np.log(rng.random()) < new - cur:
                    state["gamma"][j] = prop
                    state["loglik"][j] = new_ll
                    adapter.record(name, True)
                else:
                    adapter.record(name, False)
            name = f"omega[{j}]"
            prop = float(state["log_omega"][j] + adapter.step[name] * rng.standard_normal())
            cur = state["loglik"][j] + self._omega_prior(state, j)
            new_ll = self._seg_loglik(state, j, log_omega=prop)
            new = new_ll + self._omega_prior(state, j, log_omega=prop)
            if np.log(rng.random()) < new - cur:
                state["log_omega"][j] = prop
                state["loglik"][j] = new_ll
                adapter.record(name, True)
            else:
                adapter.record(name, False)

        for a in range(self.A):
            segs = np.nonzero(self.artist_of == a)[0]
            if self.n_partials_x:
                self._corr_step(state, rng, adapter, a, segs, side="x")
            if self.n_partials_z:
                self._corr_step(state, rng, adapter, a, segs, side="z")
            self._eta_step(state, rng, adapter, a, side="x")
            self._eta_step(state, rng, adapter, a, side="z")

    def _corr_step(self, state, rng, adapter, a, segs, side):
        dim = self.C if side == "x" else self.D
        part_key, eta_key = f"part_{side}", f"eta_{side}"
        name = f"corr_{side}[{a}]"
        cur_part = state[part_key][a]
        prop = _reflect(cur_part + adapter.step[name] * rng.standard_normal(cur_part.shape),
                        lo=-0.999, hi=0.999)

        def stack_logp(partials):
            R = _partials_to_corr(partials, dim)
            scale = self.spec.scale_x if side == "x" else self.spec.scale_z
            cov = np.diag(scale) @ R @ np.diag(scale)
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                return -np.inf, None
            mean = self.spec.mu_x if side == "x" else self.spec.mu_z
            total = _partials_logpdf(partials, dim, state[eta_key][a])
            for j in segs:
                vec = state["theta"][j] if side == "x" else state["gamma"][j]
                total += _mvn_logpdf(vec, mean, chol)
            if side == "z":
                total -= len(segs) * _orthant_log_prob(mean, cov)
            return total, chol

        new_logp, new_chol = stack_logp(prop)
        cur_logp, _ = stack_logp(cur_part)
        if new_chol is not None and np.log(rng.random()) < new_logp - cur_logp:
            state[part_key][a] = prop
            self._refresh_chol(state, artists=[a])
            adapter.record(name, True)
        else:
            adapter.record(name, False)

    def _eta_step(self, state, rng, adapter, a, side):
        dim = self.C if side == "x" else self.D
        tau = self.spec.tau_x if side == "x" else self.spec.tau_z
        eta_key, part_key = f"eta_{side}", f"part_{side}"
        if dim < 2:
            # no partial correlations: the conditional equals the prior
            state[eta_key][a] = rng.chisquare(tau)
            return
        name = f"eta_{side}[{a}]"
        cur = state[eta_key][a]
        prop = float(np.exp(np.log(cur) + adapter.step[name] * rng.standard_normal()))

        def logp(eta):
            if eta <= 0:
                return -np.inf
            return (_partials_logpdf(state[part_key][a], dim, eta)
                    + stats.chi2.logpdf(eta, tau) + np.log(eta))

        if np.log(rng.random()) < logp(prop) - logp(cur):
            state[eta_key][a] = prop
            adapter.record(name, True)
        else:
            adapter.record(name, False)

    def block_names(self):
        names = []
        for j in range(self.J):
            if self.C:
                names.append(f"theta[{j}]")
            if self.D:
                names.append(f"gamma[{j}]")
            names.append(f"omega[{j}]")
        for a in range(self.A):
            if self.n_partials_x:
                names.append(f"corr_x[{a}]")
                names.append(f"eta_x[{a}]")
            if self.n_partials_z:
                names.append(f"corr_z[{a}]")
                names.append(f"eta_z[{a}]")
        return names

    def run_chain(self, rng, init: dict | None):
        cfg = self.config
        state = self.init_state(rng, init)
        adapter = StepAdapter(self.block_names(), cfg.target_accept, cfg.adapt_window)
        for _ in range(cfg.warmup):
            self.sweep(state, rng, adapter)
        adapter.freeze()
        kept = max(cfg.draws // cfg.thin, 1)
        out = {
            "theta": np.zeros((kept, self.J, self.C)),
            "gamma": np.zeros((kept, self.J, self.D)),
            "omega": np.zeros((kept, self.J)),
            "eta_x": np.zeros((kept, self.A)),
            "eta_z": np.zeros((kept, self.A)),
            "corr_x": np.zeros((kept, self.A, self.C, self.C)),
            "corr_z": np.zeros((kept, self.A, self.D, self.D)),
        }
        k = 0
        for i in range(cfg.draws):
            self.sweep(state, rng, adapter)
            if i % cfg.thin == 0 and k < kept:
                out["theta"][k] = state["theta"]
                out["gamma"][k] = state["gamma"]
                out["omega"][k] = np.exp(state["log_omega"])
                out["eta_x"][k] = state["eta_x"]
                out["eta_z"][k] = state["eta_z"]
                out["corr_x"][k] = state["corr_x"]
                out["corr_z"][k] = state["corr_z"]
                k += 1
        return out, adapter.post_warmup_rates()


def fit_null_model(panel: DemandPanel, spec: NullModelSpec | None = None,
                   config: MCMCConfig | None = None,
                   init: dict | None = None) -> PosteriorDraws:
    """Fit the always-on hierarchy by Metropolis-within-Gibbs.

    Chains own independent child streams of the master seed and run
    sequentially, so results are reproducible bit for bit. Convergence
    trouble (split-Rhat above 1.1) is attached as a warning, not an error.
    """
    spec = spec or panel.default_spec()
    config = config or MCMCConfig()
    if panel.horizon < 8:
        raise FitError(f"need at least 8 weeks to fit, got {panel.horizon}")
    if not config.prior_only and np.all(panel.counts() == 0):
        raise FitError("all counts are zero: demand panel is degenerate")
    sampler = _NullSampler(panel, spec, config)
    master = rng_from_seed(config.seed)
    streams = master.spawn(config.chains)
    chains = []
    rates = []
    for rng in streams:
        out, rate = sampler.run_chain(rng, init)
        chains.append(out)
        rates.append(rate)
    blocks = {key: np.stack([c[key] for c in chains]) for key in chains[0]}
    blocks = {k: v for k, v in blocks.items() if v.size}
    meta = {
        "panel": {
            "counts": panel.counts().tolist(),
            "artist_ids": list(panel.artist_ids),
            "song_ids": [c.song_id for c in panel.curves],
            "x": panel.covariates.x.tolist(),
            "z": panel.covariates.z.tolist(),
        },
        "spec": spec.to_dict(),
        "config": config.to_dict(),
        "acceptance": rates,
        "model": "null",
    }
    draws = PosteriorDraws(blocks, seed=config.seed, meta=meta)
    draws.compute_diagnostics()
    return draws


def panel_from_draws(draws: PosteriorDraws) -> DemandPanel:
    """Reconstruct the training panel stored in a fit's metadata."""
    meta = draws.meta["panel"]
    counts = np.asarray(meta["counts"])
    cov = CovariatePath(np.asarray(meta["x"]), np.asarray(meta["z"]))
    curves = [DemandCurve(meta["song_ids"][j], j, counts[j])
              for j in range(counts.shape[0])]
    return DemandPanel(tuple(curves), tuple(meta["artist_ids"]), cov)


def posterior_predictive(draws: PosteriorDraws, proposed: CovariatePath,
                         quantiles: Sequence[float] = (0.05, 0.5, 0.95),
                         rng: np.random.Generator | None = None,
                         max_sims: int = 1000) -> dict:
    """Pointwise quantile curves of simulated demand at a proposed path."""
    if rng is None:
        rng = rng_from_seed(draws.seed if draws.seed is not None else 0)
    qs = sorted(float(q) for q in quantiles)
    if any(not 0 < q < 1 for q in qs):
        raise DomainError("quantiles must lie strictly inside (0, 1)")
    theta = draws.pooled("theta")
    gamma = draws.pooled("gamma")
    omega = draws.pooled("omega")
    n = theta.shape[0]
    keep = np.linspace(0, n - 1, min(max_sims, n)).astype(int)
    T = proposed.horizon
    J = theta.shape[1]
    sims = np.zeros((keep.shape[0], J, T))
    for idx, i in enumerate(keep):
        lp = np.clip(proposed.x @ theta[i].T + proposed.z @ gamma[i].T,
                     -_LP_CAP, _LP_CAP)  # (T, J)
        mu = np.exp(lp)
        w = omega[i]
        sims[idx] = rng.negative_binomial(w[None, :], w[None, :] / (w[None, :] + mu)).T
    seg_q = np.quantile(sims, qs, axis=0)          # (Q, J, T)
    agg_q = np.quantile(sims.sum(axis=1), qs, axis=0)  # (Q, T)
    return {
        "quantiles": qs,
        "weeks": list(range(T)),
        "segments": seg_q,
        "aggregate": agg_q,
        "mean_aggregate": sims.sum(axis=1).mean(axis=0),
    }


def update_with_new_week(draws: PosteriorDraws, new_counts: Sequence[int],
                         new_x: Sequence[float], new_z: Sequence[float],
                         config: MCMCConfig | None = None,
                         warm_start: bool = True) -> PosteriorDraws:
    """Re-fit with one more week of data appended.

    A full MCMC run on the extended panel (no approximate filtering); the
    previous posterior means seed the chains when ``warm_start`` is set.
    """
    panel = panel_from_draws(draws)
    counts = panel.counts()
    new_counts = np.asarray(new_counts, dtype=float).ravel()
    if new_counts.shape[0] != counts.shape[0]:
        raise ConfigurationError(
            f"expected {counts.shape[0]} segment counts, got {new_counts.shape[0]}")
    new_x = np.asarray(new_x, dtype=float).reshape(1, -1)
    new_z = np.asarray(new_z, dtype=float).reshape(1, -1)
    if new_x.shape[1] != panel.covariates.n_channels \
            or new_z.shape[1] != panel.covariates.n_ambient:
        raise ConfigurationError("new covariate row does not match the panel")
    ext = np.hstack([counts, new_counts[:, None]])
    cov = CovariatePath(np.vstack([panel.covariates.x, new_x]),
                        np.vstack([panel.covariates.z, new_z]))
    curves = [DemandCurve(c.song_id, c.stratum_id, ext[j])
              for j, c in enumerate(panel.curves)]
    new_panel = DemandPanel(tuple(curves), panel.artist_ids, cov)
    spec = NullModelSpec.from_dict(draws.meta["spec"])
    config = config or MCMCConfig.from_dict(draws.meta["config"])
    init = None
    if warm_start:
        init = {
            "theta": draws.pooled("theta").mean(axis=0),
            "gamma": draws.pooled("gamma").mean(axis=0),
            "omega": draws.pooled("omega").mean(axis=0),
        }
    return fit_null_model(new_panel, spec, config, init=init)
