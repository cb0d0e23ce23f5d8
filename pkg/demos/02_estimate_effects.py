"""Estimating covariate effects on listening.

Two estimation routes, mirroring what data you can get your hands on:
user-level listen/no-listen bits feed a logistic regression, while
weekly aggregate counts feed a log-link Negative-Binomial regression.
The fitted count model then turns a proposed covariate plan into a
conditional demand curve with quantile bands (a control chart).
"""

import numpy as np

from streamdemand import (
    CovariatePath,
    DemandCurve,
    conditional_demand_chart,
    fit_count_regression,
    fit_logistic,
    negbin_strata_pmf,
)
from streamdemand.rng import rng_from_seed

rng = rng_from_seed(21)

# --- user-level bits -> logistic -------------------------------------------
n = 12_000
x = rng.random((n, 1))            # marketing exposure share
z = rng.random((n, 1))            # ambient buzz index
p = 1.0 / (1.0 + np.exp(-(1.2 * x[:, 0] + 0.5 * z[:, 0] - 1.0)))
bits = (rng.random(n) < p).astype(int)
fit = fit_logistic(list(zip(x, z, bits)))
print("logistic fit (truth: theta=1.2 gamma=0.5 intercept=-1.0)")
print(f"  theta = {fit.theta[0]:+.3f} +- {fit.se_theta[0]:.3f}")
print(f"  gamma = {fit.gamma[0]:+.3f} +- {fit.se_gamma[0]:.3f}")
print(f"  intercept = {fit.intercept:+.3f} +- {fit.se_intercept:.3f}")

# --- audience size from one weekly count -------------------------------------
print("\nP(stratum size = n | 40 streams at p=0.35):")
for size in (100, 115, 130):
    print(f"  n={size}: {negbin_strata_pmf(size, 40, 0.35):.4f}")

# --- weekly counts -> NegBin regression -> control chart ----------------------
T = 120
wx = rng.random((T, 1))
wz = rng.random((T, 1))
mu = np.exp(2.2 + 0.9 * wx[:, 0] + 0.4 * wz[:, 0])
y = rng.negative_binomial(6.0, 6.0 / (6.0 + mu))
curve = DemandCurve("demo", 0, y)
cov = CovariatePath(wx, wz)
count_fit = fit_count_regression(curve, cov, family="negbin")
print("\nNegBin fit (truth: theta=0.9 gamma=0.4 intercept=2.2 omega=6)")
print(f"  theta = {count_fit.theta[0]:+.3f} +- {count_fit.se_theta[0]:.3f}")
print(f"  gamma = {count_fit.gamma[0]:+.3f} +- {count_fit.se_gamma[0]:.3f}")
print(f"  intercept = {count_fit.intercept:+.3f}")
print(f"  omega = {count_fit.omega:.2f}")

proposed = CovariatePath(np.full((12, 1), 0.8), np.full((12, 1), 0.2))
chart = conditional_demand_chart(count_fit, proposed, level=0.9)
print("\nconditional demand for 12 weeks at x=0.8, z=0.2:")
print("  mean ", np.round(chart.mean[:4], 1), "...")
print("  band ", [f"[{lo:.0f}, {hi:.0f}]"
                  for lo, hi in zip(chart.lower[:4], chart.upper[:4])], "...")
