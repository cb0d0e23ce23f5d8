"""Four-phase envelope model for aggregate demand curves.

A de-novo demand curve rises from (0, 0) to an attack peak, holds through
a sustain phase, decays, and releases back to zero: a continuous
piecewise-linear mean through the five nodes

    (0, 0), (tau_a, mu_a), (tau_s, mu_s), (tau_d, mu_d), (tau_r, 0).

Fitting happens in two steps: the integer change points are located
first by least squares over all admissible knot triples (the release
knot is the final week), then the per-phase models (node values, phase
covariate effects, dispersion) are fit conditional on the knots.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .core import CovariatePath, DemandCurve
from .errors import (
    ConfigurationError,
    DegenerateFitError,
    DomainError,
    PhaseSupportError,
)

PHASES = ("attack", "sustain", "decay", "release")

_MEAN_FLOOR = 1e-6


@dataclass(frozen=True)
class ChangePoints:
    """Ordered integer week indices where the envelope switches phase."""

    tau_a: int
    tau_s: int
    tau_d: int
    tau_r: int

    def __post_init__(self):
        taus = (self.tau_a, self.tau_s, self.tau_d, self.tau_r)
        if any(int(t) != t for t in taus):
            raise DomainError("change points are integer weeks")
        if not 0 < self.tau_a < self.tau_s < self.tau_d < self.tau_r:
            raise DomainError(f"change points must be strictly ordered, got {taus}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.tau_a, self.tau_s, self.tau_d, self.tau_r)

    def phase_weeks(self) -> list[np.ndarray]:
        """Week indices per phase; interior boundaries go to the earlier phase."""
        a, s, d, r = self.as_tuple()
        return [np.arange(0, a + 1),
                np.arange(a + 1, s + 1),
                np.arange(s + 1, d + 1),
                np.arange(d + 1, r + 1)]


@dataclass(frozen=True)
class EnvelopeFit:
    """Fitted envelope: knots, node values, per-phase lines and effects.

    ``alpha`` and ``beta`` are the intercept/slope of each phase line,
    derived from the node values so the mean is continuous, starts at
    zero and returns to zero at the release knot. ``theta``/``gamma``
    hold per-phase covariate effects (empty when fit without covariates).
    """

    change_points: ChangePoints
    node_values: np.ndarray  # (mu_a, mu_s, mu_d)
    omega: float
    theta: np.ndarray | None = None  # (4, C)
    gamma: np.ndarray | None = None  # (4, D)

    def __post_init__(self):
        nodes = np.asarray(self.node_values, dtype=float)
        if nodes.shape != (3,):
            raise DomainError("exactly three interior node values expected")
        if np.any(nodes <= 0):
            raise DomainError("node values must be positive")
        if self.omega <= 0:
            raise DomainError("dispersion must be positive")
        object.__setattr__(self, "node_values", nodes)

    @property
    def mu_a(self) -> float:
        return float(self.node_values[0])

    @property
    def mu_s(self) -> float:
        return float(self.node_values[1])

    @property
    def mu_d(self) -> float:
        return float(self.node_values[2])

    def phase_lines(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-phase (alpha, beta) with mean alpha_r + beta_r * t on phase r."""
        a, s, d, r = self.change_points.as_tuple()
        ya, ys, yd = self.node_values
        beta = np.array([ya / a,
                         (ys - ya) / (s - a),
                         (yd - ys) / (d - s),
                         -yd / (r - d)])
        alpha = np.array([0.0,
                          (ya * s - ys * a) / (s - a),
                          (ys * d - yd * s) / (d - s),
                          yd * r / (r - d)])
        return alpha, beta

    def to_dict(self) -> dict:
        alpha, beta = self.phase_lines()
        out = {
            "change_points": dict(zip(("tau_a", "tau_s", "tau_d", "tau_r"),
                                      self.change_points.as_tuple())),
            "node_values": {"mu_a": self.mu_a, "mu_s": self.mu_s, "mu_d": self.mu_d},
            "phase_alpha": alpha.tolist(),
            "phase_beta": beta.tolist(),
            "omega": self.omega,
        }
        if self.theta is not None:
            out["phase_theta"] = np.asarray(self.theta).tolist()
        if self.gamma is not None:
            out["phase_gamma"] = np.asarray(self.gamma).tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "EnvelopeFit":
        cp = ChangePoints(**doc["change_points"])
        nodes = np.array([doc["node_values"][k] for k in ("mu_a", "mu_s", "mu_d")])
        theta = np.asarray(doc["phase_theta"]) if "phase_theta" in doc else None
        gamma = np.asarray(doc["phase_gamma"]) if "phase_gamma" in doc else None
        return cls(cp, nodes, float(doc["omega"]), theta=theta, gamma=gamma)


def adsr_mean(t, fit: EnvelopeFit):
    """Envelope mean at week(s) ``t``; linear between nodes, floored at 0."""
    a, s, d, r = fit.change_points.as_tuple()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > r):
        raise DomainError(f"week outside the envelope support [0, {r}]")
    knots_t = np.array([0.0, a, s, d, r])
    knots_v = np.array([0.0, fit.mu_a, fit.mu_s, fit.mu_d, 0.0])
    out = np.maximum(np.interp(t_arr, knots_t, knots_v), 0.0)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def _node_basis(T: int, a: int, s: int, d: int) -> np.ndarray:
    """Hat-function basis (T x 3) of the interior nodes; endpoints pinned at 0."""
    t = np.arange(T, dtype=float)
    r = T - 1
    return np.column_stack([
        np.interp(t, [0, a, s], [0.0, 1.0, 0.0]),
        np.interp(t, [a, s, d], [0.0, 1.0, 0.0]),
        np.interp(t, [s, d, r], [0.0, 1.0, 0.0]),
    ])


def solve_node_values(y: np.ndarray, a: int, s: int, d: int) -> tuple[np.ndarray, float]:
    """Least-squares interior node values for fixed knots; returns (nodes, rss)."""
    B = _node_basis(y.shape[0], a, s, d)
    nodes, *_ = np.linalg.lstsq(B, y, rcond=None)
    resid = y - B @ nodes
    return nodes, float(resid @ resid)


def _segment_tables(y: np.ndarray):
    """Closed-form per-segment sums for the knot search.

    For a segment between knots p < q, weeks p+1..q, with ramp
    lam = (t - p)/(q - p), the quantities sum(lam^2), sum(lam(1-lam)),
    sum((1-lam)^2), sum(y lam) and sum(y (1-lam)) all reduce to prefix
    sums of y and t*y plus polynomial sums in the gap m = q - p.
    """
    T = y.shape[0]
    t = np.arange(T, dtype=float)
    cy = np.concatenate([[0.0], np.cumsum(y)])
    cty = np.concatenate([[0.0], np.cumsum(t * y)])

    def tables(p: np.ndarray, q: np.ndarray):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        m = q - p
        s1 = m * (m + 1) / 2.0
        s2 = m * (m + 1) * (2 * m + 1) / 6.0
        sm2 = (m - 1) * m * (2 * m - 1) / 6.0  # sum of v^2, v = 0..m-1
        Y = cy[q.astype(int) + 1] - cy[p.astype(int) + 1]
        TY = cty[q.astype(int) + 1] - cty[p.astype(int) + 1]
        lam2 = s2 / m**2
        lam_one = (m * s1 - s2) / m**2
        one2 = sm2 / m**2
        y_lam = (TY - p * Y) / m
        y_one = (q * Y - TY) / m
        return lam2, lam_one, one2, y_lam, y_one

    return tables


def fit_changepoints(curve: DemandCurve, min_first: int = 1, min_gap: int = 2,
                     tie_tol: float = 1e-9) -> ChangePoints:
    """Locate the three interior knots by exhaustive least squares.

    The release knot is the final observed week. Every admissible knot
    triple is scored in O(1) from prefix-sum tables; ties within
    ``tie_tol`` (relative to the series energy) break to the earliest
    attack, then sustain, then decay knot.
    """
    y = curve.values.astype(float)
    T = y.shape[0]
    if T < 8:
        raise DomainError(f"need at least 8 weeks to fit four phases, got {T}")
    if np.all(y == y[0]):
        raise DegenerateFitError(
            "constant series has no interior structure; fit fewer phases")
    peak = int(np.argmax(y))
    if peak == 0 or peak == T - 1:
        raise DegenerateFitError(
            "series is monotone (peak at an endpoint); fit fewer phases")
    r = T - 1
    a_lo, gap = max(min_first, 1), max(min_gap, 1)
    if a_lo + 3 * gap > r:
        raise DomainError("series too short for the requested knot spacing")

    tables = _segment_tables(y)
    energy = float(y @ y)
    scale = max(energy, 1.0)

    def rss_over_decay(a: int, s: int):
        """RSS of the best node values for every decay knot, fixed (a, s)."""
        d_vals = np.arange(s + gap, r - gap + 1)
        if d_vals.size == 0:
            return d_vals, d_vals.astype(float)
        l2_0a, _, _, yl_0a, _ = tables(np.array([0]), np.array([a]))
        l2_as, lo_as, o2_as, yl_as, yo_as = tables(np.array([a]), np.array([s]))
        l2_sd, lo_sd, o2_sd, yl_sd, yo_sd = tables(np.full_like(d_vals, s), d_vals)
        _, _, o2_dr, _, yo_dr = tables(d_vals, np.full_like(d_vals, r))

        g11 = l2_0a[0] + o2_as[0]
        g12 = lo_as[0]
        g22 = l2_as[0] + o2_sd
        g23 = lo_sd
        g33 = l2_sd + o2_dr
        b1 = yl_0a[0] + yo_as[0]
        b2 = yl_as[0] + yo_sd
        b3 = yl_sd + yo_dr

        # tridiagonal 3x3 solve, vectorized over the decay knot
        det = g11 * (g22 * g33 - g23**2) - g12 * (g12 * g33)
        with np.errstate(divide="ignore", invalid="ignore"):
            n1 = (b1 * (g22 * g33 - g23**2) - g12 * (b2 * g33 - g23 * b3)) / det
            n2 = (g11 * (b2 * g33 - g23 * b3) - b1 * (g12 * g33)) / det
            n3 = (g11 * (g22 * b3 - b2 * g23) + g12 * (b1 * g23 - g12 * b3)) / det
        rss = energy - (b1 * n1 + b2 * n2 + b3 * n3)
        return d_vals, np.where(np.isfinite(rss), rss, np.inf)

    pairs = [(a, s)
             for a in range(a_lo, r - 3 * gap + 1)
             for s in range(a + gap, r - 2 * gap + 1)]
    best_rss = np.inf
    for a, s in pairs:
        _, rss = rss_over_decay(a, s)
        if rss.size:
            best_rss = min(best_rss, float(np.min(rss)))
    if not np.isfinite(best_rss):
        raise DegenerateFitError("no admissible knot triple")

    # second pass: lexicographically earliest triple within tolerance of the optimum
    chosen = None
    for a, s in pairs:
        d_vals, rss = rss_over_decay(a, s)
        hits = np.nonzero(rss <= best_rss + tie_tol * scale)[0]
        if hits.size:
            chosen = (a, s, int(d_vals[hits[0]]))
            break
    a, s, d = chosen
    nodes, _ = solve_node_values(y, a, s, d)
    if np.any(nodes <= 0):
        raise DegenerateFitError(
            "fitted node values are not positive; series lacks a four-phase shape")
    return ChangePoints(a, s, d, r)


def _negbin_logpmf(y: np.ndarray, mu: np.ndarray, omega: float) -> float:
    from scipy.special import gammaln

    mu = np.maximum(mu, _MEAN_FLOOR)
    return float(np.sum(gammaln(y + omega) - gammaln(omega) - gammaln(y + 1)
                        + omega * np.log(omega / (omega + mu))
                        + y * np.log(mu / (omega + mu))))


def fit_partite(curve: DemandCurve, changepoints: ChangePoints,
                covariates: CovariatePath | None = None,
                family: str = "negbin") -> EnvelopeFit:
    """Fit the per-phase models conditional on fixed change points.

    Node values come from the same least squares used by the knot
    search (so a covariate-free fit nests step one exactly). Covariate
    effects are estimated phase by phase, each restricted to its own
    weeks, as additive shifts of the phase line under a NegBin
    likelihood. The dispersion is shared across phases.
    """
    if family != "negbin":
        raise ConfigurationError("only the negbin family is supported")
    y = curve.values.astype(float)
    T = y.shape[0]
    a, s, d, r = changepoints.as_tuple()
    if r > T - 1:
        raise ConfigurationError(f"release knot {r} beyond the last week {T - 1}")
    weeks = changepoints.phase_weeks()
    for name, w in zip(PHASES, weeks):
        if w.size < 2:
            raise PhaseSupportError(f"{name} phase has {w.size} week(s); need >= 2")
    y_fit = y[: r + 1]

    nodes, _ = solve_node_values(y_fit, a, s, d)
    if np.any(nodes <= 0):
        raise DegenerateFitError("fitted node values are not positive")
    base_fit = EnvelopeFit(changepoints, nodes, omega=1.0)
    line = adsr_mean(np.arange(r + 1), base_fit)

    theta = gamma = None
    mean_path = line.copy()
    if covariates is not None and (covariates.n_channels + covariates.n_ambient) > 0:
        if covariates.horizon < r + 1:
            raise ConfigurationError("covariate path shorter than the envelope")
        C, D = covariates.n_channels, covariates.n_ambient
        theta = np.zeros((4, C))
        gamma = np.zeros((4, D))
        for ph, w in enumerate(weeks):
            Xw = covariates.x[w]
            Zw = covariates.z[w]
            yw, lw = y[w], line[w]

            def nll(eff):
                the, gam = eff[:C], eff[C:]
                mu = lw + Xw @ the + Zw @ gam
                return -_negbin_logpmf(yw, mu, omega=10.0)

            res = minimize(nll, np.zeros(C + D), method="Nelder-Mead",
                           options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 2000})
            theta[ph] = res.x[:C]
            gamma[ph] = res.x[C:]
            mean_path[w] = np.maximum(lw + Xw @ theta[ph] + Zw @ gamma[ph],
                                      _MEAN_FLOOR)

    res = minimize_scalar(
        lambda lw: -_negbin_logpmf(y_fit, mean_path, np.exp(lw)),
        bounds=(np.log(1e-3), np.log(1e6)), method="bounded")
    omega = float(np.exp(res.x))
    return EnvelopeFit(changepoints, nodes, omega=omega, theta=theta, gamma=gamma)


def changepoint_prior_factors(taus, T: int) -> np.ndarray:
    """Log factors of the sequential knot prior (unnormalized chain).

    The attack knot is uniform on {2, ..., T-1}; each later knot is
    uniform on the weeks remaining to the right of its predecessor.
    Violations yield -inf factors.
    """
    if T < 6:
        raise DomainError("horizon too short for a four-knot prior")
    if isinstance(taus, ChangePoints):
        taus = taus.as_tuple()
    a, s, d, r = (int(v) for v in taus)
    out = np.full(4, -np.inf)
    if not (2 <= a < s < d < r <= T - 1):
        return out
    out[0] = -np.log(T - 2)
    for i, (prev, cur) in enumerate(((a, s), (s, d), (d, r)), start=1):
        width = (T - 1) - prev
        if width <= 0 or not prev < cur <= T - 1:
            return np.full(4, -np.inf)
        out[i] = -np.log(width)
    return out


@lru_cache(maxsize=None)
def _prior_log_norm(T: int) -> float:
    """Log of the chain's total mass over all completable knot tuples.

    The release-knot factor 1/(T-1-d) sums to one over its support, so
    the normalizer reduces to a double sum over attack and sustain knots,
    weighted by how many decay knots leave room for a release knot.
    """
    total = 0.0
    for a in range(2, T - 2):
        for s_ in range(a + 1, T - 2):
            n_decay = (T - 2) - s_  # d ranges over s+1 .. T-2
            total += n_decay / ((T - 2) * ((T - 1) - a) * ((T - 1) - s_))
    if total <= 0:
        raise DomainError("horizon too short for a four-knot prior")
    return float(np.log(total))


def changepoint_prior_logpmf(taus, T: int) -> float:
    """Normalized log prior mass of a knot tuple; -inf off support."""
    factors = changepoint_prior_factors(taus, T)
    if not np.all(np.isfinite(factors)):
        return -np.inf
    return float(np.sum(factors) - _prior_log_norm(T))


# ---------------------------------------------------------------------------
# Bayesian fit of the forced model

@dataclass(frozen=True)
class ForcedModelPriors:
    """Priors for the envelope's distributional layer.

    Node values get independent half-normal priors; the dispersion a
    Gamma(shape, rate); optional per-phase covariate effects get Normal
    (channels) and zero-truncated Normal (ambient) priors.
    """

    node_scale: float = 1000.0
    disp_shape: float = 2.0
    disp_rate: float = 0.5
    effect_scale: float = 1.0

    def __post_init__(self):
        if min(self.node_scale, self.disp_shape, self.disp_rate,
               self.effect_scale) <= 0:
            raise DomainError("prior hyperparameters must be positive")

    @classmethod
    def for_curve(cls, curve: DemandCurve, **kw) -> "ForcedModelPriors":
        return cls(node_scale=2.0 * max(float(curve.values.max()), 1.0), **kw)


class _ForcedSampler:
    """Metropolis-within-Gibbs over nodes, dispersion, effects and knots."""

    def __init__(self, curve, covariates, priors, config, taus, sample_taus):
        self.y = curve.values.astype(float)
        self.T = self.y.shape[0]
        self.priors = priors
        self.config = config
        self.sample_taus = sample_taus
        self.fixed_taus = taus
        self.cov = covariates
        self.C = covariates.n_channels if covariates is not None else 0
        self.D = covariates.n_ambient if covariates is not None else 0

    def _mean_path(self, taus, nodes, theta_ph, gamma_ph):
        a, s, d, r = taus
        knots_t = np.array([0.0, a, s, d, r], dtype=float)
        knots_v = np.array([0.0, *nodes, 0.0])
        t = np.arange(self.T, dtype=float)
        line = np.interp(t, knots_t, knots_v)
        line[t > r] = 0.0
        if self.C or self.D:
            bounds = [0, a + 1, s + 1, d + 1, self.T]
            for ph in range(4):
                w = slice(bounds[ph], bounds[ph + 1])
                if self.C:
                    line[w] += self.cov.x[w] @ theta_ph[ph]
                if self.D:
                    line[w] += self.cov.z[w] @ gamma_ph[ph]
        return np.maximum(line, _MEAN_FLOOR)

    def _logpost(self, state):
        pri = self.priors
        nodes = state["nodes"]
        if np.any(nodes < 0):
            return -np.inf
        lp = float(np.sum(-0.5 * (nodes / pri.node_scale) ** 2))
        lw = state["log_omega"]
        lp += pri.disp_shape * lw - pri.disp_rate * np.exp(lw)
        if self.sample_taus:
            tau_lp = changepoint_prior_logpmf(state["taus"], self.T)
            if not np.isfinite(tau_lp):
                return -np.inf
            lp += tau_lp
        if self.C:
            lp += float(np.sum(-0.5 * (state["theta_ph"] / pri.effect_scale) ** 2))
        if self.D:
            if np.any(state["gamma_ph"] < 0):
                return -np.inf
            lp += float(np.sum(-0.5 * (state["gamma_ph"] / pri.effect_scale) ** 2))
        if not self.config.prior_only:
            mu = self._mean_path(state["taus"], nodes,
                                 state.get("theta_ph"), state.get("gamma_ph"))
            lp += _negbin_logpmf(self.y, mu, float(np.exp(lw)))
        return lp

    def _init_state(self, rng):
        pri = self.priors
        taus = self.fixed_taus.as_tuple() if self.fixed_taus is not None else None
        if taus is None:
            # start from evenly spread knots on the prior support
            q = np.linspace(0.2, 1.0, 4)
            taus = tuple(int(v) for v in np.maximum(
                np.round(q * (self.T - 1)), [2, 3, 4, 5]))
        state = {
            "nodes": np.abs(rng.normal(0.0, pri.node_scale, size=3)),
            "log_omega": float(np.log(rng.gamma(pri.disp_shape, 1.0 / pri.disp_rate))),
            "taus": taus,
        }
        if self.C:
            state["theta_ph"] = rng.normal(0.0, pri.effect_scale, size=(4, self.C))
        if self.D:
            state["gamma_ph"] = np.abs(rng.normal(0.0, pri.effect_scale,
                                                  size=(4, self.D)))
        if not self.config.prior_only and not self.sample_taus:
            # moment-style start: least-squares nodes at the fixed knots
            a, s, d, _ = state["taus"]
            nodes, _ = solve_node_values(self.y, a, s, d)
            state["nodes"] = np.maximum(nodes, 1.0)
        return state

    def _block_names(self):
        names = ["nodes", "omega"]
        if self.sample_taus:
            names.append("taus")
        if self.C:
            names.append("theta_ph")
        if self.D:
            names.append("gamma_ph")
        return names

    def _sweep(self, state, rng, adapter, lp):
        from .bayes import _reflect  # shared reflection helper

        prop = dict(state)
        prop["nodes"] = _reflect(state["nodes"]
                                 + adapter.step["nodes"] * self.priors.node_scale / 10.0
                                 * rng.standard_normal(3), lo=0.0)
        lp_new = self._logpost(prop)
        if np.log(rng.random()) < lp_new - lp:
            state["nodes"] = prop["nodes"]
            lp = lp_new
            adapter.record("nodes", True)
        else:
            adapter.record("nodes", False)

        prop = dict(state)
        prop["log_omega"] = state["log_omega"] + adapter.step["omega"] \
            * rng.standard_normal()
        lp_new = self._logpost(prop)
        if np.log(rng.random()) < lp_new - lp:
            state["log_omega"] = prop["log_omega"]
            lp = lp_new
            adapter.record("omega", True)
        else:
            adapter.record("omega", False)

        if self.sample_taus:
            taus = list(state["taus"])
            for k in range(4):
                cand = taus.copy()
                cand[k] += int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1)
                prop = dict(state)
                prop["taus"] = tuple(cand)
                lp_new = self._logpost(prop)
                if np.log(rng.random()) < lp_new - lp:
                    taus = cand
                    lp = lp_new
                    adapter.record("taus", True)
                else:
                    adapter.record("taus", False)
            state["taus"] = tuple(taus)

        for key, name, lo in (("theta_ph", "theta_ph", None),
                              ("gamma_ph", "gamma_ph", 0.0)):
            if key not in state:
                continue
            prop = dict(state)
            step = adapter.step[name] * self.priors.effect_scale
            cand = state[key] + step * rng.standard_normal(state[key].shape)
            prop[key] = cand if lo is None else _reflect(cand, lo=lo)
            lp_new = self._logpost(prop)
            if np.log(rng.random()) < lp_new - lp:
                state[key] = prop[key]
                lp = lp_new
                adapter.record(name, True)
            else:
                adapter.record(name, False)
        return lp

    def run_chain(self, rng):
        from .bayes import StepAdapter

        cfg = self.config
        state = self._init_state(rng)
        adapter = StepAdapter(self._block_names(), cfg.target_accept,
                              cfg.adapt_window)
        lp = self._logpost(state)
        if not np.isfinite(lp):
            state["nodes"] = np.maximum(state["nodes"], 1.0)
            lp = self._logpost(state)
        for _ in range(cfg.warmup):
            lp = self._sweep(state, rng, adapter, lp)
        adapter.freeze()
        kept = max(cfg.draws // cfg.thin, 1)
        out = {
            "nodes": np.zeros((kept, 3)),
            "omega": np.zeros(kept),
            "taus": np.zeros((kept, 4)),
        }
        if self.C:
            out["theta_phase"] = np.zeros((kept, 4, self.C))
        if self.D:
            out["gamma_phase"] = np.zeros((kept, 4, self.D))
        k = 0
        for i in range(cfg.draws):
            lp = self._sweep(state, rng, adapter, lp)
            if i % cfg.thin == 0 and k < kept:
                out["nodes"][k] = state["nodes"]
                out["omega"][k] = np.exp(state["log_omega"])
                out["taus"][k] = state["taus"]
                if self.C:
                    out["theta_phase"][k] = state["theta_ph"]
                if self.D:
                    out["gamma_phase"][k] = state["gamma_ph"]
                k += 1
        return out, adapter.post_warmup_rates()


def fit_forced_model_bayes(curve: DemandCurve,
                           covariates: CovariatePath | None = None,
                           config=None,
                           taus: ChangePoints | None = None,
                           sample_taus: bool = False,
                           priors: ForcedModelPriors | None = None):
    """Posterior over the envelope's nodes, dispersion and (optionally) knots.

    By default the knots are estimated first (two-step practice) and held
    fixed; pass ``sample_taus=True`` to put the sequential uniform prior
    on them and add an integer random-walk move. Returns posterior draws;
    use :func:`envelope_from_draws` to collapse them to a point fit.
    """
    from .bayes import MCMCConfig
    from .draws import PosteriorDraws
    from .rng import rng_from_seed

    config = config or MCMCConfig()
    priors = priors or ForcedModelPriors.for_curve(curve)
    if taus is None and not sample_taus and not config.prior_only:
        taus = fit_changepoints(curve)
    if taus is not None and sample_taus:
        raise ConfigurationError("either fix the knots or sample them, not both")
    sampler = _ForcedSampler(curve, covariates, priors, config, taus, sample_taus)
    master = rng_from_seed(config.seed)
    chains, rates = [], []
    for rng in master.spawn(config.chains):
        out, rate = sampler.run_chain(rng)
        chains.append(out)
        rates.append(rate)
    blocks = {key: np.stack([c[key] for c in chains]) for key in chains[0]}
    meta = {
        "model": "forced",
        "sample_taus": sample_taus,
        "fixed_taus": list(taus.as_tuple()) if taus is not None else None,
        "horizon": curve.values.shape[0],
        "song_id": curve.song_id,
        "config": config.to_dict(),
        "acceptance": rates,
        "priors": {
            "node_scale": priors.node_scale,
            "disp_shape": priors.disp_shape,
            "disp_rate": priors.disp_rate,
            "effect_scale": priors.effect_scale,
        },
    }
    draws = PosteriorDraws(blocks, seed=config.seed, meta=meta)
    draws.compute_diagnostics()
    return draws


def envelope_from_draws(draws) -> EnvelopeFit:
    """Posterior-mean envelope; knots by posterior mode when sampled."""
    nodes = draws.pooled("nodes").mean(axis=0)
    omega = float(draws.pooled("omega").mean())
    taus_draws = draws.pooled("taus").astype(int)
    tuples, counts = np.unique(taus_draws, axis=0, return_counts=True)
    mode = tuples[int(np.argmax(counts))]
    theta = gamma = None
    if "theta_phase" in draws.blocks:
        theta = draws.pooled("theta_phase").mean(axis=0)
    if "gamma_phase" in draws.blocks:
        gamma = draws.pooled("gamma_phase").mean(axis=0)
    return EnvelopeFit(ChangePoints(*[int(v) for v in mode]),
                       np.maximum(nodes, 1e-9), omega=omega,
                       theta=theta, gamma=gamma)
