"""The full pipeline through the service layer.

Everything the HTTP API and dashboard do runs through one core: ingest
weekly rows into the store, fit models, plan budgets, and ask what-if
questions. The run log records every mutation with its seed, so a store
can be rebuilt by replay. (Start the HTTP server with
``streamdemand serve --store <dir>``; this demo drives the core
directly.)
"""

import tempfile

import numpy as np

from streamdemand.ingest import records_to_csv_rows
from streamdemand.rng import rng_from_seed
from streamdemand.scenario import simulate_scenario
from streamdemand.service import ServiceCore, replay_log
from streamdemand.store import ProjectStore

scenario = {
    "song_id": "first-single",
    "artist_id": "new-artist",
    "release_date": "2021-01-04",
    "population": {"size": 3000, "horizon": 40},
    "segments": [{"label": "dsp-a", "members": [0, 1800]},
                 {"label": "dsp-b", "members": [1400, 3000]}],
    "effects": {"theta": [[0.8], [0.6]], "gamma": [[0.05], [0.04]]},
    "covariates": {
        "x": [{"kind": "adsr", "knots": [6, 14, 26], "peak": 0.7,
               "sustain": 0.55, "tail": 0.2}],
        "z": [{"kind": "ramp", "from": 0.1, "to": 0.45}],
    },
}

root = tempfile.mkdtemp(prefix="streamdemand-demo-")
core = ServiceCore(ProjectStore(root))

rows = records_to_csv_rows(simulate_scenario(scenario, rng_from_seed(1)))
summary = core.ingest_rows(rows)
print("ingested:", summary["songs"], f"({summary['n_records']} rows,"
      f" {summary['n_rejects']} rejects)")

forced = core.fit_forced("first-single", seed=2)
print("envelope knots:", forced["envelope"]["change_points"])

null = core.fit_null("first-single", seed=3, warmup=400, draws=400)
print("null fit:", null["fit_id"], "worst Rhat", round(null["max_rhat"], 3))

out = core.whatif(null["fit_id"], budget={"total": 6.0})
plan = out["plan"]
print(f"\nwhat-if with budget 6.0: objective {plan['objective']:,.0f},"
      f" baseline {out['baseline_objective']:,.0f},"
      f" delta {out['objective_delta']:,.0f}")
median = np.asarray(out["predictive"]["aggregate"])[1]
print("predictive median (first weeks):", np.round(median[:8]).astype(int).tolist())

rebuilt = replay_log(core.store.read_log(), ProjectStore(tempfile.mkdtemp()))
same = all(core.store.get(kind, key) == rebuilt.store.get(kind, key)
           for kind in ("songs", "fits", "plans")
           for key in core.store.list(kind))
print("\nreplaying the run log rebuilds the store exactly:", same)
print("store at:", root)
