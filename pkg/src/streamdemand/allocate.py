"""Budget allocation for listening maximization.

Two planning schemes. Under the null model, weekly spend maximizes the
listening probability within each segment subject to the probability
ceiling and the week's budget; the analytic pseudo-inverse path is also
provided, together with a comparison report, because the two disagree
whenever spend spreads across channels (the pseudo-inverse allocation can
overshoot the weekly budget). Under the forced scheme, each envelope
phase has a constant optimal spend path, pinned at the phase extremum.

Budget is reallocated across segments greedily by marginal audience gain
per unit of spend, which is optimal for this separable linear structure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .envelope import EnvelopeFit, adsr_mean
from .errors import ConfigurationError, DomainError, InfeasibleError

_EPS = 1e-9


@dataclass(frozen=True)
class BudgetPolicy:
    """Total spend ``total`` split into weekly budgets, plus the social cap."""

    weekly: np.ndarray
    social_cap: float = np.inf

    def __post_init__(self):
        weekly = np.asarray(self.weekly, dtype=float)
        if weekly.ndim != 1 or weekly.size == 0:
            raise DomainError("weekly budgets must be a nonempty vector")
        if np.any(weekly < 0) or self.social_cap < 0:
            raise DomainError("budgets cannot be negative")
        object.__setattr__(self, "weekly", weekly)

    @classmethod
    def uniform(cls, total: float, horizon: int, social_cap: float = np.inf):
        if total < 0:
            raise DomainError("total budget cannot be negative")
        return cls(np.full(horizon, total / horizon), social_cap)

    @property
    def total(self) -> float:
        return float(self.weekly.sum())

    @property
    def horizon(self) -> int:
        return self.weekly.shape[0]


@dataclass
class AllocationPath:
    """Planned spend (weeks x segments x channels) with its objective."""

    spend: np.ndarray
    probabilities: np.ndarray
    objective: float
    scheme: str
    unspent: float = 0.0

    def __post_init__(self):
        if np.any(self.spend < -_EPS):
            raise DomainError("allocations must be non-negative")

    def weekly_totals(self) -> np.ndarray:
        return self.spend.sum(axis=(1, 2))

    def to_dict(self) -> dict:
        return {
            "spend": self.spend.tolist(),
            "probabilities": self.probabilities.tolist(),
            "objective": self.objective,
            "scheme": self.scheme,
            "unspent": self.unspent,
        }


def _ambient_load(gamma, z) -> float:
    gamma = np.asarray(gamma, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if gamma.shape != z.shape:
        raise ConfigurationError("gamma and z must have matching length")
    return float(gamma @ z)


def closed_form_null(theta, gamma, z, budget: float) -> np.ndarray:
    """Analytic spend path via the row-vector pseudo-inverse of the effects.

    With [theta]^+ = theta / ||theta||^2, the allocation is
    budget * [theta]^+ while the probability ceiling is slack, and
    (1 - gamma.z) * [theta]^+ once it binds; either way
    theta @ x equals min(budget, 1 - gamma.z) exactly.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    norm2 = float(theta @ theta)
    if norm2 == 0.0:
        raise DomainError("effects vector is zero: pseudo-inverse undefined")
    if budget < 0:
        raise DomainError("budget cannot be negative")
    gz = _ambient_load(gamma, z)
    if gz > 1.0 + _EPS:
        raise DomainError("ambient load already exceeds the probability ceiling")
    reach = min(budget, max(1.0 - gz, 0.0))
    return reach * theta / norm2


def lp_null_max(theta, gamma, z, budget: float) -> tuple[np.ndarray, float]:
    """Exact solution of the weekly listening-probability program.

    maximize theta.x + gamma.z  subject to  0 <= theta.x + gamma.z <= 1,
    sum(x) <= budget, x >= 0. The optimum concentrates spend on the
    channel with the largest positive effect (first such channel on
    ties), cut off at the probability ceiling.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if budget < 0:
        raise DomainError("budget cannot be negative")
    gz = _ambient_load(gamma, z)
    if gz > 1.0 + _EPS:
        raise InfeasibleError("ambient load exceeds 1: no feasible allocation")
    x = np.zeros(theta.shape[0])
    if theta.size == 0 or np.all(theta <= 0):
        return x, gz
    best = int(np.argmax(theta))
    x[best] = min(budget, (1.0 - gz) / theta[best])
    return x, float(gz + theta[best] * x[best])


def compare_schemes(theta, gamma, z, budget: float) -> dict:
    """Put the analytic path and the exact program side by side.

    The analytic path can exceed the weekly budget row whenever spend
    spreads over several channels; the report flags that violation and
    names the feasible winner.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    gz = _ambient_load(gamma, z)
    closed = closed_form_null(theta, gamma, z, budget)
    closed_obj = float(min(budget, max(1.0 - gz, 0.0)) + gz)
    lp_x, lp_obj = lp_null_max(theta, gamma, z, budget)
    violation = float(closed.sum()) > budget + _EPS
    if violation:
        dominant = "lp"
    elif lp_obj > closed_obj + _EPS:
        dominant = "lp"
    elif closed_obj > lp_obj + _EPS:
        dominant = "closed_form"
    else:
        dominant = "tie"
    return {
        "closed_form": {"spend": closed, "objective": closed_obj,
                        "spend_total": float(closed.sum())},
        "lp": {"spend": lp_x, "objective": lp_obj,
               "spend_total": float(lp_x.sum())},
        "closed_budget_violation": bool(violation),
        "budget": float(budget),
        "dominant": dominant,
    }


def forced_phase_max(fit: EnvelopeFit) -> list[tuple[int, float]]:
    """Per-phase (argmax week, max mean) of the envelope.

    Each phase line is maximized exactly: at the right endpoint when the
    phase rises, at the left endpoint otherwise (ties go to the earliest
    week, which is the left endpoint).
    """
    a, s, d, r = fit.change_points.as_tuple()
    supports = [(0, a), (a, s), (s, d), (d, r)]
    _, beta = fit.phase_lines()
    out = []
    for (lo, hi), slope in zip(supports, beta):
        week = hi if slope > 0 else lo
        out.append((int(week), float(adsr_mean(week, fit))))
    return out


@dataclass
class ReallocationResult:
    split: np.ndarray            # money per segment
    channel: np.ndarray          # chosen channel per segment
    gain: float                  # expected extra listeners bought
    unspent: float
    order: list[int] = field(default_factory=list)


def reallocate_across_segments(effects, sizes, ambient_loads,
                               budget: float) -> ReallocationResult:
    """Greedy split of one week's budget across audience segments.

    Money flows to the segment with the highest marginal audience gain
    (segment size times its best channel effect) until that segment's
    probability ceiling binds, then spills to the next best. Greedy is
    exact here: the objective is linear per segment with a hard cap.
    """
    effects = np.atleast_2d(np.asarray(effects, dtype=float))
    sizes = np.asarray(sizes, dtype=float).ravel()
    loads = np.asarray(ambient_loads, dtype=float).ravel()
    J = effects.shape[0]
    if sizes.shape[0] != J or loads.shape[0] != J:
        raise ConfigurationError("one size and ambient load per segment required")
    if budget < 0:
        raise DomainError("budget cannot be negative")
    best_channel = np.argmax(effects, axis=1)
    best_effect = effects[np.arange(J), best_channel]
    rates = sizes * best_effect
    split = np.zeros(J)
    remaining = float(budget)
    order = [int(j) for j in np.argsort(-rates, kind="stable") if best_effect[j] > 0]
    gain = 0.0
    for j in order:
        if remaining <= _EPS:
            break
        headroom = max(1.0 - loads[j], 0.0)
        capacity = headroom / best_effect[j]
        take = min(remaining, capacity)
        split[j] = take
        gain += sizes[j] * best_effect[j] * take
        remaining -= take
    if remaining > _EPS and budget > 0:
        warnings.warn(
            f"all segments at their probability ceiling; {remaining:.6g} unspent",
            stacklevel=2)
    return ReallocationResult(split=split, channel=best_channel, gain=gain,
                              unspent=float(max(remaining, 0.0)), order=order)


@dataclass(frozen=True)
class PlannerState:
    """Point estimates the planner needs: per-segment effects and sizes."""

    theta: np.ndarray            # (J, C)
    gamma: np.ndarray            # (J, D)
    sizes: np.ndarray            # (J,)
    z: np.ndarray                # (T, D) ambient path
    envelope: EnvelopeFit | None = None

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        sizes = np.asarray(self.sizes, dtype=float).ravel()
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 2:
            raise ConfigurationError("ambient path must be 2-D (weeks x signals)")
        if theta.shape[0] != gamma.shape[0] or theta.shape[0] != sizes.shape[0]:
            raise ConfigurationError("theta, gamma and sizes disagree on segments")
        if gamma.shape[1] != z.shape[1]:
            raise ConfigurationError("gamma and ambient path disagree on signals")
        for name, val in (("theta", theta), ("gamma", gamma),
                          ("sizes", sizes), ("z", z)):
            object.__setattr__(self, name, val)

    @property
    def n_segments(self) -> int:
        return self.theta.shape[0]

    @property
    def horizon(self) -> int:
        return self.z.shape[0]


def _allocate_week(state: PlannerState, z_row: np.ndarray,
                   budget: float) -> tuple[np.ndarray, float]:
    loads = state.gamma @ z_row
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = reallocate_across_segments(state.theta, state.sizes, loads, budget)
    spend = np.zeros_like(state.theta)
    for j in range(state.n_segments):
        if result.split[j] > 0:
            spend[j, result.channel[j]] = result.split[j]
    return spend, result.unspent


def plan_horizon(policy: BudgetPolicy, state: PlannerState,
                 scheme: str = "null") -> AllocationPath:
    """Allocate the whole budget over the horizon.

    ``null``: week-by-week greedy reallocation under each week's budget.
    ``forced``: the envelope's phases each get a constant weekly spend
    (their pooled budget spread evenly), matching the constant optimal
    path of a linear-in-time phase mean.
    """
    T = policy.horizon
    if state.horizon < T:
        raise ConfigurationError("ambient path shorter than the budget horizon")
    if np.any(state.z[:T].sum(axis=1) > policy.social_cap + _EPS):
        raise InfeasibleError("ambient path exceeds the social cap")
    J, C = state.theta.shape
    spend = np.zeros((T, J, C))
    unspent = 0.0
    if scheme == "null":
        for t in range(T):
            spend[t], miss = _allocate_week(state, state.z[t], float(policy.weekly[t]))
            unspent += miss
    elif scheme == "forced":
        if state.envelope is None:
            raise ConfigurationError("forced planning requires a fitted envelope")
        r = state.envelope.change_points.tau_r
        if T != r + 1:
            raise ConfigurationError(
                f"budget horizon {T} must equal the envelope support {r + 1}")
        for weeks in state.envelope.change_points.phase_weeks():
            pooled = float(policy.weekly[weeks].sum())
            z_bar = state.z[weeks].mean(axis=0)
            week_spend, miss = _allocate_week(state, z_bar, pooled / weeks.size)
            for t in weeks:
                spend[t] = week_spend
            unspent += miss * weeks.size
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    probs = np.zeros((T, J))
    for t in range(T):
        probs[t] = np.clip((state.theta * spend[t]).sum(axis=1)
                           + state.gamma @ state.z[t], 0.0, 1.0)
    objective = float((probs * state.sizes[None, :]).sum())
    if unspent > _EPS:
        warnings.warn(f"{unspent:.6g} of the budget could not be spent "
                      "(probability ceilings)", stacklevel=2)
    return AllocationPath(spend=spend, probabilities=probs, objective=objective,
                          scheme=scheme, unspent=float(unspent))
