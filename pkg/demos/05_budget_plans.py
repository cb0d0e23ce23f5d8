"""Planning marketing spend to maximize expected listening.

The weekly program caps the listening probability at one and the spend
at the week's budget. The analytic pseudo-inverse path spreads money
across channels in proportion to their effects; the exact program puts
it on the best channel. The comparison report shows when the analytic
path overshoots the weekly budget and which allocation wins. Across
segments, money flows greedily toward the largest marginal audience
gain; under a fitted envelope the plan is constant within each phase.
"""

import numpy as np

from streamdemand import (
    BudgetPolicy,
    ChangePoints,
    EnvelopeFit,
    PlannerState,
    compare_schemes,
    forced_phase_max,
    plan_horizon,
    reallocate_across_segments,
)

theta = [0.6, 0.8]
report = compare_schemes(theta, [], [], budget=0.5)
print("channel effects", theta, "budget 0.5")
print("  pseudo-inverse spend:", np.round(report["closed_form"]["spend"], 2),
      f"-> probability {report['closed_form']['objective']:.2f},"
      f" total spend {report['closed_form']['spend_total']:.2f}")
print("  exact program spend: ", np.round(report["lp"]["spend"], 2),
      f"-> probability {report['lp']['objective']:.2f}")
print("  budget violated by pseudo-inverse:", report["closed_budget_violation"],
      "| feasible winner:", report["dominant"])

res = reallocate_across_segments(
    effects=[[0.8], [0.2]], sizes=[100, 100], ambient_loads=[0.0, 0.0], budget=2.0)
print("\nreallocating 2.0 across equal-size segments with effects 0.8 vs 0.2:")
print("  split:", np.round(res.split, 2).tolist(),
      "| expected extra listeners:", round(res.gain, 1))

fit = EnvelopeFit(ChangePoints(6, 14, 26, 39), np.array([840.0, 700.0, 180.0]),
                  omega=60.0)
print("\nphase extrema of the fitted envelope:")
for name, (week, value) in zip(("attack", "sustain", "decay", "release"),
                               forced_phase_max(fit)):
    print(f"  {name:8s} max mean {value:7.1f} at week {week}")

T = 40
state = PlannerState(theta=[[0.05, 0.08]], gamma=[[0.1]], sizes=[5000],
                     z=np.full((T, 1), 0.2), envelope=fit)
policy = BudgetPolicy.uniform(total=8.0, horizon=T)
for scheme in ("null", "forced"):
    path = plan_horizon(policy, state, scheme=scheme)
    weekly = path.weekly_totals()
    print(f"\n{scheme} scheme: objective {path.objective:,.0f} expected listens,"
          f" spend {path.spend.sum():.2f} of {policy.total}")
    print("  weekly spend:", " ".join(f"{w:.2f}" for w in weekly[:10]), "...")
