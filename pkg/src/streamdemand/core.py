"""Counting-process model of weekly song demand over segmented audiences.

A population of listeners is covered by (possibly overlapping) audience
segments. Each listener in segment ``j`` streams the song in week ``t``
with probability ``P[t, j]``, an affine function of marketing channels
``x_t`` and ambient covariates ``z_t``. Weekly per-segment counts are the
sums of those Bernoulli utilities; the aggregate over segments is the
song-level demand curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, CoverageError, DomainError

AGGREGATE = "aggregate"

_LINKS = ("identity-clipped", "inverse-logit")


@dataclass(frozen=True)
class ListenerPopulation:
    """A fixed pool of ``size`` listeners observed for ``horizon`` weeks.

    Listener ids are ``0 .. size-1``. The horizon must allow four phases.
    """

    size: int
    horizon: int

    def __post_init__(self):
        if self.size < 1:
            raise DomainError(f"population size must be >= 1, got {self.size}")
        if self.horizon < 4:
            raise DomainError(f"horizon must be >= 4 weeks, got {self.horizon}")

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(range(self.size))


@dataclass(frozen=True)
class SegmentCovering:
    """Week-indexed membership sets ``segments[t][j]`` over a population.

    Segments may overlap (a listener can hold several reasons to listen at
    once) but together they must cover the whole population every week,
    and no segment may be empty. A constant covering is the special case
    where the same sets repeat each week; use :meth:`constant`.
    """

    population: ListenerPopulation
    segments: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self):
        T = self.population.horizon
        if len(self.segments) != T:
            raise ConfigurationError(
                f"covering has {len(self.segments)} weeks, population horizon is {T}"
            )
        J = len(self.segments[0])
        if J < 1:
            raise ConfigurationError("covering needs at least one segment")
        ids = self.population.ids
        for t, week in enumerate(self.segments):
            if len(week) != J:
                raise ConfigurationError(f"week {t} has {len(week)} segments, expected {J}")
            for j, seg in enumerate(week):
                if not seg:
                    raise CoverageError(f"segment {j} empty at week {t}", week=t)
                if not seg <= ids:
                    raise ConfigurationError(
                        f"segment {j} at week {t} has ids outside the population"
                    )
            union = frozenset().union(*week)
            if union != ids:
                raise CoverageError(
                    f"covering misses listeners at week {t}",
                    uncovered=ids - union,
                    week=t,
                )

    @classmethod
    def constant(cls, population: ListenerPopulation,
                 segments: Sequence[Sequence[int]]) -> "SegmentCovering":
        week = tuple(frozenset(s) for s in segments)
        return cls(population, tuple(week for _ in range(population.horizon)))

    @property
    def n_segments(self) -> int:
        return len(self.segments[0])

    def at(self, t: int) -> tuple[frozenset[int], ...]:
        return self.segments[t]


@dataclass(frozen=True)
class CovariatePath:
    """Weekly covariates: marketing spend ``x`` (T x C) and ambient ``z`` (T x D).

    All entries live in [0, 1]; channel spends are normalized shares of a
    unit budget, ambient signals are normalized indices.
    """

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if x.ndim != 2 or z.ndim != 2:
            raise ConfigurationError("x and z must be 2-D (weeks x channels)")
        if x.shape[0] != z.shape[0]:
            raise ConfigurationError(
                f"x has {x.shape[0]} weeks but z has {z.shape[0]}"
            )
        for name, arr in (("x", x), ("z", z)):
            if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
                raise DomainError(f"{name} entries must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def horizon(self) -> int:
        return self.x.shape[0]

    @property
    def n_channels(self) -> int:
        return self.x.shape[1]

    @property
    def n_ambient(self) -> int:
        return self.z.shape[1]

    @classmethod
    def constant(cls, horizon: int, x: Sequence[float], z: Sequence[float]) -> "CovariatePath":
        return cls(np.tile(np.asarray(x, dtype=float), (horizon, 1)),
                   np.tile(np.asarray(z, dtype=float), (horizon, 1)))


@dataclass(frozen=True)
class AffinityModel:
    """Per-segment effects mapping covariates to listening probability.

    ``theta`` is (J x C): demand per marketing channel; ``gamma`` is
    (J x D): demand per ambient signal. Under the ``identity-clipped``
    link the probability is ``clip(theta @ x + gamma @ z, 0, 1)``; under
    ``inverse-logit`` it is the logistic of the same linear score.
    """

    theta: np.ndarray
    gamma: np.ndarray
    link: str = "identity-clipped"

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        if theta.shape[0] != gamma.shape[0]:
            raise ConfigurationError(
                f"theta has {theta.shape[0]} segments but gamma has {gamma.shape[0]}"
            )
        if self.link not in _LINKS:
            raise ConfigurationError(f"unknown link {self.link!r}; expected one of {_LINKS}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_segments(self) -> int:
        return self.theta.shape[0]

    def linear_score(self, j: int, x_t: np.ndarray, z_t: np.ndarray) -> float:
        x_t = np.asarray(x_t, dtype=float).ravel()
        z_t = np.asarray(z_t, dtype=float).ravel()
        if x_t.shape[0] != self.theta.shape[1] or z_t.shape[0] != self.gamma.shape[1]:
            raise ConfigurationError(
                f"covariate dimensions ({x_t.shape[0]}, {z_t.shape[0]}) do not match "
                f"effects ({self.theta.shape[1]}, {self.gamma.shape[1]})"
            )
        return float(self.theta[j] @ x_t + self.gamma[j] @ z_t)

    def probability(self, j: int, x_t: np.ndarray, z_t: np.ndarray) -> float:
        """Listening probability for a member of segment ``j`` this week."""
        s = self.linear_score(j, x_t, z_t)
        if self.link == "inverse-logit":
            return float(1.0 / (1.0 + np.exp(-s)))
        return float(np.clip(s, 0.0, 1.0))

    def probabilities(self, covariates: CovariatePath) -> np.ndarray:
        """The full (T x J) matrix of per-week, per-segment probabilities."""
        score = covariates.x @ self.theta.T + covariates.z @ self.gamma.T
        if self.link == "inverse-logit":
            return 1.0 / (1.0 + np.exp(-score))
        return np.clip(score, 0.0, 1.0)


@dataclass(frozen=True)
class DemandCurve:
    """Weekly stream counts for one song on one stratum (or the aggregate)."""

    song_id: str
    stratum_id: int | str
    values: np.ndarray
    week_zero_is_release: bool = True

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise DomainError("a demand curve is a 1-D count series")
        if values.size and np.min(values) < 0:
            raise DomainError("stream counts must be non-negative")
        if not np.issubdtype(values.dtype, np.integer):
            rounded = np.rint(np.asarray(values, dtype=float))
            if values.size and np.max(np.abs(rounded - values)) > 1e-9:
                raise DomainError("stream counts must be integers")
            values = rounded.astype(np.int64)
        object.__setattr__(self, "values", values.astype(np.int64))

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.horizon


@dataclass
class CoveringReport:
    """Per-week coverage audit: |union| versus the sum of segment sizes."""

    valid: bool
    union_sizes: list[int] = field(default_factory=list)
    sum_sizes: list[int] = field(default_factory=list)
    uncovered: dict[int, list[int]] = field(default_factory=dict)


def draw_utility(p: float, rng: np.random.Generator) -> int:
    """One Bernoulli listening decision: 1 with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    return int(rng.random() < p)


def simulate_segment_demand(segment: frozenset[int] | set[int],
                            model: AffinityModel,
                            covariates: CovariatePath,
                            t: int,
                            rng: np.random.Generator,
                            segment_index: int = 0) -> int:
    """Weekly stream count for one segment: a sum of member Bernoulli draws.

    The count is Binomial(|segment|, P[t, j]) where j = ``segment_index``.
    """
    if not segment:
        raise DomainError("segment must be nonempty")
    if not 0 <= t < covariates.horizon:
        raise DomainError(f"week {t} outside covariate horizon {covariates.horizon}")
    p = model.probability(segment_index, covariates.x[t], covariates.z[t])
    return int(np.sum(rng.random(len(segment)) < p))


def simulate_covering_demand(covering: SegmentCovering,
                             model: AffinityModel,
                             covariates: CovariatePath,
                             rng: np.random.Generator,
                             song_id: str = "synthetic") -> list[DemandCurve]:
    """One realized demand curve per segment over the full horizon."""
    if model.n_segments != covering.n_segments:
        raise ConfigurationError(
            f"model has {model.n_segments} segments, covering has {covering.n_segments}"
        )
    if covariates.horizon != covering.population.horizon:
        raise ConfigurationError("covariate horizon does not match the population horizon")
    T, J = covariates.horizon, covering.n_segments
    counts = np.zeros((T, J), dtype=np.int64)
    for t in range(T):
        for j, seg in enumerate(covering.at(t)):
            counts[t, j] = simulate_segment_demand(seg, model, covariates, t, rng,
                                                   segment_index=j)
    return [DemandCurve(song_id, j, counts[:, j]) for j in range(J)]


def aggregate_demand(curves: Sequence[DemandCurve]) -> DemandCurve:
    """Pointwise sum across strata, yielding the song-level curve."""
    if not curves:
        raise DomainError("nothing to aggregate")
    horizon = curves[0].horizon
    song = curves[0].song_id
    for c in curves[1:]:
        if c.horizon != horizon:
            raise DomainError(f"horizon mismatch: {c.horizon} != {horizon}")
        if c.song_id != song:
            raise DomainError(f"cannot aggregate across songs ({c.song_id} != {song})")
    total = np.sum([c.values for c in curves], axis=0)
    return DemandCurve(song, AGGREGATE, total,
                       week_zero_is_release=curves[0].week_zero_is_release)


def extremal_curves(covering: SegmentCovering,
                    model: AffinityModel,
                    covariates: CovariatePath,
                    rng: np.random.Generator,
                    song_id: str = "synthetic") -> tuple[DemandCurve, DemandCurve]:
    """Boundary demand processes for the covering.

    The upper curve assigns every listener the week's maximum segment-wise
    affinity; the lower curve the minimum. Both are simulated over the full
    population with a shared stream, bracketing what any one stratum mix
    could have produced.
    """
    if model.n_segments != covering.n_segments:
        raise ConfigurationError(
            f"model has {model.n_segments} segments, covering has {covering.n_segments}"
        )
    T = covering.population.horizon
    N = covering.population.size
    if covariates.horizon != T:
        raise ConfigurationError("covariate horizon does not match the population horizon")
    probs = model.probabilities(covariates)  # (T, J)
    upper = np.zeros(T, dtype=np.int64)
    lower = np.zeros(T, dtype=np.int64)
    for t in range(T):
        u = rng.random(N)  # shared draws: lower_t <= upper_t pathwise
        upper[t] = int(np.sum(u < np.max(probs[t])))
        lower[t] = int(np.sum(u < np.min(probs[t])))
    return (DemandCurve(song_id, "upper", upper),
            DemandCurve(song_id, "lower", lower))


def sparse_audience(covering: SegmentCovering, t: int) -> frozenset[int]:
    """Listeners belonging to exactly one segment at week ``t``.

    Equals the iterated symmetric difference of the week's segments when
    no listener sits in three or more of them; the exactly-once reading is
    taken as the definition (population minus all pairwise intersections).
    """
    week = covering.at(t)
    counts: dict[int, int] = {}
    for seg in week:
        for i in seg:
            counts[i] = counts.get(i, 0) + 1
    return frozenset(i for i, k in counts.items() if k == 1)


def verify_covering(covering: SegmentCovering) -> CoveringReport:
    """Audit coverage and overlap week by week.

    Construction already guarantees coverage; this reports |union| against
    the sum of segment sizes so overlap is visible, and re-checks coverage
    for defense in depth.
    """
    ids = covering.population.ids
    report = CoveringReport(valid=True)
    for t, week in enumerate(covering.segments):
        union = frozenset().union(*week)
        report.union_sizes.append(len(union))
        report.sum_sizes.append(sum(len(s) for s in week))
        if union != ids:
            report.valid = False
            report.uncovered[t] = sorted(ids - union)
    return report


def check_covering_sets(population: ListenerPopulation,
                        segments: Sequence[Sequence[int]]) -> CoveringReport:
    """Audit raw membership sets (one week) without constructing a covering.

    Unlike the :class:`SegmentCovering` constructor this does not raise on
    a gap; it returns a report listing uncovered listener ids.
    """
    ids = population.ids
    week = [frozenset(s) for s in segments]
    union = frozenset().union(*week) if week else frozenset()
    report = CoveringReport(valid=union == ids)
    report.union_sizes.append(len(union))
    report.sum_sizes.append(sum(len(s) for s in week))
    if not report.valid:
        report.uncovered[0] = sorted(ids - union)
    return report
