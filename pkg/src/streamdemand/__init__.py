"""Streaming-song demand: simulation, estimation, optimization.

Weekly song demand is modeled as counting processes over overlapping
audience segments. The package simulates those processes, estimates
listening affinity by frequentist and Bayesian routes, fits
four-phase envelopes with change points, clusters demand curves into
listening modes, and plans budget allocations that maximize expected
listening, with a file store, CLI and HTTP API on top.
"""

from .allocate import (
    AllocationPath,
    BudgetPolicy,
    PlannerState,
    closed_form_null,
    compare_schemes,
    forced_phase_max,
    lp_null_max,
    plan_horizon,
    reallocate_across_segments,
)
from .bayes import (
    DemandPanel,
    MCMCConfig,
    NullModelSpec,
    fit_null_model,
    posterior_predictive,
    sample_lkj,
    sample_prior,
    update_with_new_week,
)
from .cluster import CurveCluster, dba_barycenter, dtw_distance, kmeans_curves
from .core import (
    AffinityModel,
    CovariatePath,
    DemandCurve,
    ListenerPopulation,
    SegmentCovering,
    aggregate_demand,
    draw_utility,
    extremal_curves,
    simulate_covering_demand,
    simulate_segment_demand,
    sparse_audience,
    verify_covering,
)
from .draws import PosteriorDraws, effective_sample_size, split_rhat
from .envelope import (
    ChangePoints,
    EnvelopeFit,
    adsr_mean,
    changepoint_prior_logpmf,
    envelope_from_draws,
    fit_changepoints,
    fit_forced_model_bayes,
    fit_partite,
)
from .errors import (
    ConfigurationError,
    CoverageError,
    DegenerateFitError,
    DomainError,
    EmptyCurveError,
    FitError,
    InfeasibleError,
    PhaseSupportError,
    SeparationError,
    StoreError,
    StreamDemandError,
)
from .estimate import (
    ControlChart,
    RegressionFit,
    affinity_predict,
    conditional_demand_chart,
    fit_count_regression,
    fit_logistic,
    negbin_strata_pmf,
)
from .ingest import IngestRecord, ingest_csv, translate_to_origin
from .rng import rng_from_seed, split
from .store import ProjectStore
from .version import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
