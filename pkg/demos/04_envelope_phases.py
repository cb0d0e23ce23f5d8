"""Fitting the four-phase envelope: attack, sustain, decay, release.

A de-novo demand curve rises from zero, holds, decays, and releases
back to zero. The weekly change points are found first by exhaustive
least squares (two-step practice), then the per-phase models are fit
conditional on them; a fully Bayesian variant can sample the knots too.
"""

import numpy as np

from streamdemand import (
    ChangePoints,
    DemandCurve,
    EnvelopeFit,
    MCMCConfig,
    adsr_mean,
    envelope_from_draws,
    fit_changepoints,
    fit_forced_model_bayes,
    fit_partite,
)
from streamdemand.rng import rng_from_seed

rng = rng_from_seed(3)
T = 40
true_knots = (6, 14, 26, 39)
truth = EnvelopeFit(ChangePoints(*true_knots), np.array([840.0, 780.0, 150.0]),
                    omega=400.0)
mu = np.maximum(adsr_mean(np.arange(T), truth), 1e-6)
y = rng.negative_binomial(400.0, 400.0 / (400.0 + mu))
curve = DemandCurve("demo", "aggregate", y)

taus = fit_changepoints(curve)
print("true knots:  ", true_knots)
print("fitted knots:", taus.as_tuple())

fit = fit_partite(curve, taus)
print("fitted node values:", np.round(fit.node_values, 1).tolist(),
      "(truth 840, 780, 150)")
alpha, beta = fit.phase_lines()
for name, a_r, b_r in zip(("attack", "sustain", "decay", "release"), alpha, beta):
    print(f"  {name:8s} line: mean(t) = {a_r:8.1f} + {b_r:+7.2f} t")
print(f"dispersion omega = {fit.omega:.1f}")

draws = fit_forced_model_bayes(curve, config=MCMCConfig(chains=2, warmup=800,
                                                        draws=800, seed=2),
                               taus=taus)
posterior_fit = envelope_from_draws(draws)
nodes = draws.pooled("nodes")
print("\nposterior node values:")
for k, label in enumerate(("attack peak", "sustain end", "decay end")):
    lo, hi = np.quantile(nodes[:, k], [0.05, 0.95])
    print(f"  {label:12s} {nodes[:, k].mean():7.1f}  90% CI [{lo:.0f}, {hi:.0f}]")
print("posterior-mean envelope at the knots:",
      [round(adsr_mean(t, posterior_fit), 1) for t in taus.as_tuple()])
