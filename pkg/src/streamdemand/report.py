"""Per-song SVG reports: demand control charts and fitted envelopes.

Plots are written with fixed metadata and a fixed hash salt so report
files are byte-reproducible for identical inputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .envelope import EnvelopeFit, adsr_mean  # noqa: E402
from .estimate import ControlChart  # noqa: E402

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}

plt.rcParams["svg.hashsalt"] = "streamdemand"


def control_chart_svg(path, observed: np.ndarray, chart: ControlChart,
                      title: str = "conditional demand") -> None:
    """Observed counts against the predicted mean and quantile band."""
    weeks = np.arange(len(observed))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.fill_between(weeks[: len(chart.mean)], chart.lower, chart.upper,
                    alpha=0.25, color="tab:blue",
                    label=f"{chart.level:.0%} band")
    ax.plot(weeks[: len(chart.mean)], chart.mean, color="tab:blue", lw=1.5,
            label="predicted mean")
    ax.plot(weeks, observed, "o-", color="black", ms=3, lw=0.8, label="observed")
    ax.set_xlabel("week since release")
    ax.set_ylabel("streams")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def envelope_svg(path, observed: np.ndarray, fit: EnvelopeFit,
                 title: str = "four-phase envelope") -> None:
    """Observed counts with the fitted envelope and its phase knots."""
    weeks = np.arange(len(observed))
    r = fit.change_points.tau_r
    grid = np.linspace(0, r, 400)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(weeks, observed, "o-", color="black", ms=3, lw=0.8, label="observed")
    ax.plot(grid, adsr_mean(grid, fit), color="tab:red", lw=1.8, label="envelope")
    for tau, label in zip(fit.change_points.as_tuple(),
                          ("attack", "sustain", "decay", "release")):
        ax.axvline(tau, color="tab:red", ls=":", lw=0.8)
        ax.annotate(label, (tau, ax.get_ylim()[1] * 0.95), fontsize=8,
                    ha="center", color="tab:red")
    ax.set_xlabel("week since release")
    ax.set_ylabel("streams")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)
