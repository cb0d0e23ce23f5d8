"""Synthetic demand scenarios: a JSON description of a population, its
segment covering, effects and covariate generators, rendered into the
same weekly CSV rows that ingestion consumes.

Covariate generators per channel:

* ``{"kind": "constant", "value": v}``
* ``{"kind": "ramp", "from": a, "to": b}``
* ``{"kind": "pulse", "weeks": [..], "value": v, "base": b}``
* ``{"kind": "adsr", "knots": [a, s, d], "peak": p, "sustain": q, "tail": r}``
  (a four-phase path rising from 0 to p, to q, to r, back to 0)
* ``{"kind": "path", "values": [...]}``

With ``"noiseless": true`` the weekly counts are the rounded expected
values instead of Binomial draws, which gives exactly reproducible
four-phase test curves.
"""

from __future__ import annotations

import json
from datetime import date

import numpy as np

from .core import (
    AffinityModel,
    CovariatePath,
    ListenerPopulation,
    SegmentCovering,
    simulate_covering_demand,
)
from .errors import ConfigurationError
from .ingest import IngestRecord, weeks_to_dates


def _render_channel(gen: dict, T: int) -> np.ndarray:
    kind = gen.get("kind", "constant")
    if kind == "constant":
        return np.full(T, float(gen["value"]))
    if kind == "ramp":
        return np.linspace(float(gen["from"]), float(gen["to"]), T)
    if kind == "pulse":
        out = np.full(T, float(gen.get("base", 0.0)))
        for w in gen["weeks"]:
            out[int(w)] = float(gen["value"])
        return out
    if kind == "adsr":
        a, s, d = (int(k) for k in gen["knots"])
        xs = [0, a, s, d, T - 1]
        vs = [0.0, float(gen["peak"]), float(gen.get("sustain", gen["peak"])),
              float(gen.get("tail", 0.3 * float(gen["peak"]))), 0.0]
        return np.interp(np.arange(T, dtype=float), xs, vs)
    if kind == "path":
        values = np.asarray(gen["values"], dtype=float)
        if values.shape[0] != T:
            raise ConfigurationError(f"path length {values.shape[0]} != horizon {T}")
        return values
    raise ConfigurationError(f"unknown covariate generator {kind!r}")


def load_scenario(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def simulate_scenario(scenario: dict, rng) -> list[IngestRecord]:
    """Render a scenario into weekly ingest records.

    Segments are given as id ranges ``[lo, hi)`` over the population and
    may overlap; they must cover everyone. Counts are Binomial sums of
    member utilities (or rounded expectations when noiseless).
    """
    pop_cfg = scenario["population"]
    population = ListenerPopulation(int(pop_cfg["size"]), int(pop_cfg["horizon"]))
    T = population.horizon
    seg_cfg = scenario["segments"]
    segments = []
    for seg in seg_cfg:
        lo, hi = (int(v) for v in seg["members"])
        segments.append(range(lo, hi))
    covering = SegmentCovering.constant(population, segments)

    cov_cfg = scenario.get("covariates", {})
    x_gens = cov_cfg.get("x", [])
    z_gens = cov_cfg.get("z", [])
    x = (np.column_stack([_render_channel(g, T) for g in x_gens])
         if x_gens else np.zeros((T, 0)))
    z = (np.column_stack([_render_channel(g, T) for g in z_gens])
         if z_gens else np.zeros((T, 0)))
    covariates = CovariatePath(x, z)

    effects = scenario["effects"]
    model = AffinityModel(np.asarray(effects["theta"], dtype=float),
                          np.asarray(effects.get("gamma", [[] for _ in seg_cfg]),
                                     dtype=float).reshape(len(seg_cfg), -1),
                          link=scenario.get("link", "identity-clipped"))
    if model.n_segments != covering.n_segments:
        raise ConfigurationError("one effects row per segment required")

    if scenario.get("noiseless", False):
        probs = model.probabilities(covariates)
        counts = np.zeros((T, covering.n_segments), dtype=np.int64)
        for j, seg in enumerate(segments):
            counts[:, j] = np.rint(len(seg) * probs[:, j]).astype(np.int64)
    else:
        curves = simulate_covering_demand(covering, model, covariates, rng,
                                          song_id=scenario.get("song_id", "synthetic"))
        counts = np.stack([c.values for c in curves], axis=1)

    release = date.fromisoformat(scenario.get("release_date", "2021-01-04"))
    dates = weeks_to_dates(release, T)
    song_id = scenario.get("song_id", "synthetic")
    artist_id = scenario.get("artist_id", "synthetic-artist")
    records = []
    for t in range(T):
        covs = tuple((f"x_{c}", float(x[t, c])) for c in range(x.shape[1])) \
            + tuple((f"z_{c}", float(z[t, c])) for c in range(z.shape[1]))
        for j, seg in enumerate(seg_cfg):
            records.append(IngestRecord(
                song_id=song_id, artist_id=artist_id,
                stratum=str(seg.get("label", f"stratum-{j}")),
                week_start=dates[t], streams=int(counts[t, j]),
                release_date=release, covariates=covs))
    return records
