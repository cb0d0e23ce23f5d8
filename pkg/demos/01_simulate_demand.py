"""Simulating weekly song demand over overlapping audience segments.

A population of listeners is covered by two overlapping segments with
different listening affinities. Each week every listener flips a coin
whose probability comes from the segment's marketing and ambient
covariates; segment counts, the aggregate demand curve, and the
max/min-affinity boundary processes all fall out of those flips.
"""

import numpy as np

from streamdemand import (
    AffinityModel,
    CovariatePath,
    ListenerPopulation,
    SegmentCovering,
    aggregate_demand,
    extremal_curves,
    simulate_covering_demand,
    sparse_audience,
    verify_covering,
)
from streamdemand.rng import rng_from_seed

rng = rng_from_seed(7)
T = 40

population = ListenerPopulation(size=5000, horizon=T)
covering = SegmentCovering.constant(
    population,
    [range(0, 3200), range(2400, 5000)],  # 800 listeners sit in both
)
report = verify_covering(covering)
print("covering valid:", report.valid)
print("week 0: |union| =", report.union_sizes[0],
      " sum of segment sizes =", report.sum_sizes[0])
print("listeners in exactly one segment:", len(sparse_audience(covering, 0)))

# marketing ramps up then fades; ambient buzz is a steady hum
x = np.interp(np.arange(T), [0, 6, 18, 30, T - 1],
              [0.05, 0.65, 0.5, 0.1, 0.0]).reshape(-1, 1)
z = np.full((T, 1), 0.25)
covariates = CovariatePath(x, z)

model = AffinityModel(theta=[[0.30], [0.12]], gamma=[[0.08], [0.03]])

curves = simulate_covering_demand(covering, model, covariates, rng, song_id="demo")
total = aggregate_demand(curves)
upper, lower = extremal_curves(covering, model, covariates, rng, song_id="demo")

print("\nweek  segment-0  segment-1  aggregate  lower  upper")
for t in range(0, T, 5):
    print(f"{t:4d}  {curves[0].values[t]:9d}  {curves[1].values[t]:9d}"
          f"  {total.values[t]:9d}  {lower.values[t]:5d}  {upper.values[t]:5d}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.fill_between(range(T), lower.values, upper.values, alpha=0.2,
                    label="affinity envelope")
    for j, c in enumerate(curves):
        ax.plot(c.values, lw=1, label=f"segment {j}")
    ax.plot(total.values, "k", lw=2, label="aggregate")
    ax.set_xlabel("week since release")
    ax.set_ylabel("streams")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig("demo01_demand.png", dpi=120)
    print("\nwrote demo01_demand.png")
except ImportError:
    pass
