"""Service layer: store-backed operations, background jobs, HTTP API.

``ServiceCore`` owns every mutation (ingest, fits, classification,
planning), writes each one to the store's run log with its payload and
seed, and can replay a log into a fresh store to reproduce it. The HTTP
app is a thin JSON adapter over the core: long-running fits go through a
background job queue so health checks and reads never wait on them.
"""

from __future__ import annotations

import itertools
import queue
import threading
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .allocate import BudgetPolicy, PlannerState, plan_horizon
from .bayes import (
    DemandPanel,
    MCMCConfig,
    fit_null_model,
    posterior_predictive,
)
from .cluster import kmeans_curves
from .core import CovariatePath, DemandCurve
from .envelope import EnvelopeFit, fit_changepoints, fit_forced_model_bayes, fit_partite
from .errors import ConfigurationError, StoreError, StreamDemandError
from .ingest import covariates_from_records, parse_rows, translate_to_origin
from .rng import rng_from_seed
from .store import ProjectStore, content_id


# ---------------------------------------------------------------------------
# Core operations

class ServiceCore:
    """Store-backed operations shared by the HTTP API and the CLI."""

    def __init__(self, store: ProjectStore):
        self.store = store

    # -- ingestion -------------------------------------------------------------

    def ingest_rows(self, rows: list[dict], mapping: dict | None = None,
                    log: bool = True) -> dict:
        records, rejects = parse_rows(rows, mapping)
        songs = {}
        for rec in records:
            songs.setdefault(rec.song_id, []).append(rec)
        stored = []
        for song_id, recs in sorted(songs.items()):
            if self.store.has("songs", song_id):
                existing = self.store.get("songs", song_id)
                if existing["release_date"] != recs[0].release_date.isoformat():
                    raise StoreError(
                        f"song {song_id} already stored with release date "
                        f"{existing['release_date']}", conflict=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                curves = translate_to_origin(recs)
            horizon = next(iter(curves.values())).horizon
            x, z, x_names, z_names = covariates_from_records(recs, horizon)
            doc = {
                "song_id": song_id,
                "artist_id": recs[0].artist_id,
                "release_date": recs[0].release_date.isoformat(),
                "horizon": horizon,
                "strata": {label: curve.values.tolist()
                           for label, curve in sorted(curves.items())},
                "covariates": {"x": x.tolist(), "z": z.tolist()},
                "x_names": x_names,
                "z_names": z_names,
            }
            self.store.put("songs", song_id, doc)
            stored.append(song_id)
        summary = {
            "songs": stored,
            "n_records": len(records),
            "n_rejects": len(rejects),
            "rejects": rejects.rows,
        }
        if log:
            self.store.log("ingest", {"rows": rows, "mapping": mapping or {}},
                           result={"songs": stored})
        return summary

    # -- song access -------------------------------------------------------------

    def list_songs(self) -> list[str]:
        return self.store.list("songs")

    def song_curves(self, song_id: str) -> dict:
        doc = self.store.get("songs", song_id)
        agg = np.sum([np.asarray(v) for v in doc["strata"].values()], axis=0)
        doc["aggregate"] = agg.tolist()
        return doc

    def _song_panel(self, song_id: str) -> DemandPanel:
        doc = self.store.get("songs", song_id)
        cov = CovariatePath(np.asarray(doc["covariates"]["x"]),
                            np.asarray(doc["covariates"]["z"]))
        curves = tuple(DemandCurve(song_id, label, np.asarray(values))
                       for label, values in sorted(doc["strata"].items()))
        artists = tuple(doc["artist_id"] for _ in curves)
        return DemandPanel(curves, artists, cov)

    def _aggregate_curve(self, song_id: str) -> DemandCurve:
        doc = self.song_curves(song_id)
        return DemandCurve(song_id, "aggregate", np.asarray(doc["aggregate"]))

    # -- fitting -------------------------------------------------------------------

    def fit_null(self, song_id: str, seed: int = 0, chains: int = 2,
                 warmup: int = 500, draws: int = 500, log: bool = True) -> dict:
        panel = self._song_panel(song_id)
        config = MCMCConfig(chains=chains, warmup=warmup, draws=draws, seed=seed)
        payload = {"song_id": song_id, "seed": seed, "chains": chains,
                   "warmup": warmup, "draws": draws}
        fit_id = content_id({"kind": "null", "payload": payload,
                             "data": self.store.get("songs", song_id)}, "fit-")
        result = fit_null_model(panel, config=config)
        self.store.put_draws(fit_id, result)
        doc = {
            "fit_id": fit_id,
            "kind": "null",
            "song_id": song_id,
            "seed": seed,
            "strata": [c.stratum_id for c in panel.curves],
            "posterior_means": {
                "theta": result.pooled("theta").mean(axis=0).tolist(),
                "gamma": result.pooled("gamma").mean(axis=0).tolist(),
                "omega": result.pooled("omega").mean(axis=0).tolist(),
            },
            "warnings": result.warnings,
            "max_rhat": float(max(v["rhat"] for v in result.diagnostics.values())),
        }
        self.store.put("fits", fit_id, doc)
        if log:
            self.store.log("fit_null", payload, seed=seed,
                           result={"fit_id": fit_id})
        return doc

    def fit_forced(self, song_id: str, seed: int = 0, bayes: bool = False,
                   sample_taus: bool = False, chains: int = 2, warmup: int = 500,
                   draws: int = 500, log: bool = True) -> dict:
        curve = self._aggregate_curve(song_id)
        payload = {"song_id": song_id, "seed": seed, "bayes": bayes,
                   "sample_taus": sample_taus, "chains": chains,
                   "warmup": warmup, "draws": draws}
        fit_id = content_id({"kind": "forced", "payload": payload,
                             "data": self.store.get("songs", song_id)}, "fit-")
        taus = fit_changepoints(curve)
        envelope = fit_partite(curve, taus)
        doc = {
            "fit_id": fit_id,
            "kind": "forced",
            "song_id": song_id,
            "seed": seed,
            "envelope": envelope.to_dict(),
        }
        if bayes:
            config = MCMCConfig(chains=chains, warmup=warmup, draws=draws, seed=seed)
            result = fit_forced_model_bayes(
                curve, config=config,
                taus=None if sample_taus else taus,
                sample_taus=sample_taus)
            self.store.put_draws(fit_id, result)
            doc["max_rhat"] = float(max(v["rhat"]
                                        for v in result.diagnostics.values()))
            doc["warnings"] = result.warnings
        self.store.put("fits", fit_id, doc)
        if log:
            self.store.log("fit_forced", payload, seed=seed,
                           result={"fit_id": fit_id})
        return doc

    def classify(self, song_ids: list[str] | None = None, k: int = 7,
                 seed: int = 0, log: bool = True) -> dict:
        ids = song_ids or self.list_songs()
        if not ids:
            raise ConfigurationError("no songs in the store to classify")
        curves = [self._aggregate_curve(s).values.astype(float) for s in ids]
        k = min(k, len(curves))
        clusters = kmeans_curves(curves, k=k, seed=seed)
        payload = {"song_ids": ids, "k": k, "seed": seed}
        fit_id = content_id({"kind": "classify", "payload": payload}, "cls-")
        doc = {
            "fit_id": fit_id,
            "kind": "classify",
            "k": k,
            "seed": seed,
            "clusters": [
                {"centroid": cl.centroid.tolist(),
                 "members": [ids[i] for i in cl.members],
                 "inertia": cl.inertia}
                for cl in clusters
            ],
        }
        self.store.put("fits", fit_id, doc)
        if log:
            self.store.log("classify", payload, seed=seed,
                           result={"fit_id": fit_id})
        return doc

    def get_fit(self, fit_id: str) -> dict:
        return self.store.get("fits", fit_id)

    # -- prediction ------------------------------------------------------------------

    def predictive(self, fit_id: str, quantiles=(0.05, 0.5, 0.95),
                   proposed: dict | None = None) -> dict:
        doc = self.get_fit(fit_id)
        if doc["kind"] != "null":
            raise ConfigurationError("predictive curves require a null-model fit")
        draws = self.store.get_draws(fit_id)
        if proposed is None:
            panel = self._song_panel(doc["song_id"])
            cov = panel.covariates
        else:
            cov = CovariatePath(np.asarray(proposed["x"], dtype=float),
                                np.asarray(proposed["z"], dtype=float))
        bands = posterior_predictive(draws, cov, quantiles,
                                     rng=rng_from_seed(doc["seed"]))
        return {
            "fit_id": fit_id,
            "quantiles": bands["quantiles"],
            "weeks": bands["weeks"],
            "aggregate": bands["aggregate"].tolist(),
            "segments": bands["segments"].tolist(),
            "mean_aggregate": bands["mean_aggregate"].tolist(),
        }

    # -- planning --------------------------------------------------------------------

    def _planner_state(self, doc: dict, z_path: np.ndarray,
                       sizes=None, effects: dict | None = None,
                       envelope: EnvelopeFit | None = None) -> PlannerState:
        if effects is not None:
            theta = np.asarray(effects["theta"], dtype=float)
            gamma = np.asarray(effects.get("gamma", np.zeros((theta.shape[0], 0))),
                               dtype=float)
        elif doc["kind"] == "null":
            theta = np.asarray(doc["posterior_means"]["theta"], dtype=float)
            gamma = np.asarray(doc["posterior_means"]["gamma"], dtype=float)
        else:
            # forced fits model the aggregate: one segment, one unit channel
            theta = np.array([[1.0]])
            gamma = np.zeros((1, z_path.shape[1]))
        J = theta.shape[0]
        if sizes is None:
            song = self.store.get("songs", doc["song_id"])
            strata_max = [max(v) for _, v in sorted(song["strata"].items())]
            if J == len(strata_max):
                sizes = strata_max
            else:
                sizes = [sum(strata_max)] * J
        gamma = gamma.reshape(J, -1)
        if gamma.shape[1] != z_path.shape[1]:
            if gamma.shape[1] == 0:
                gamma = np.zeros((J, z_path.shape[1]))
            else:
                raise ConfigurationError(
                    "ambient path width does not match the fitted effects")
        return PlannerState(theta=theta, gamma=gamma, sizes=sizes, z=z_path,
                            envelope=envelope)

    def optimize(self, fit_id: str, scheme: str, budget: dict,
                 z_path=None, sizes=None, effects: dict | None = None,
                 log: bool = True) -> dict:
        doc = self.get_fit(fit_id)
        envelope = None
        if scheme == "forced":
            if doc["kind"] != "forced":
                raise ConfigurationError("forced planning requires a forced fit")
            envelope = EnvelopeFit.from_dict(doc["envelope"])
            horizon = envelope.change_points.tau_r + 1
        else:
            song = self.store.get("songs", doc["song_id"])
            horizon = song["horizon"]
        if "weekly" in budget:
            policy = BudgetPolicy(np.asarray(budget["weekly"], dtype=float),
                                  budget.get("social_cap", np.inf))
            horizon = policy.horizon
        else:
            policy = BudgetPolicy.uniform(float(budget["total"]), horizon,
                                          budget.get("social_cap", np.inf))
        if z_path is not None:
            z = np.asarray(z_path, dtype=float)
        else:
            song = self.store.get("songs", doc["song_id"])
            z = np.asarray(song["covariates"]["z"], dtype=float)
            if z.shape[0] < horizon:
                z = np.vstack([z, np.zeros((horizon - z.shape[0], z.shape[1]))])
            z = z[:horizon]
        state = self._planner_state(doc, z, sizes, effects, envelope)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            path = plan_horizon(policy, state, scheme=scheme)
        payload = {"fit_id": fit_id, "scheme": scheme, "budget": budget,
                   "z_path": None if z_path is None else np.asarray(z_path).tolist(),
                   "sizes": None if sizes is None else list(sizes),
                   "effects": effects}
        plan_id = content_id({"kind": "plan", "payload": payload}, "plan-")
        plan_doc = {"plan_id": plan_id, "fit_id": fit_id, "scheme": scheme,
                    **path.to_dict()}
        self.store.put("plans", plan_id, plan_doc)
        if log:
            self.store.log("optimize", payload, result={"plan_id": plan_id})
        return plan_doc

    def whatif(self, fit_id: str, budget: dict, z_path=None,
               quantiles=(0.05, 0.5, 0.95), scheme: str = "null",
               sizes=None, effects: dict | None = None) -> dict:
        """One planning round trip: plan, predictive bands, objective delta."""
        plan = self.optimize(fit_id, scheme, budget, z_path=z_path, sizes=sizes,
                             effects=effects, log=False)
        zero = self.optimize(fit_id, scheme,
                             {"total": 0.0,
                              **({"social_cap": budget["social_cap"]}
                                 if "social_cap" in budget else {})},
                             z_path=z_path, sizes=sizes, effects=effects, log=False)
        doc = self.get_fit(fit_id)
        predictive = None
        if doc["kind"] == "null":
            spend = np.asarray(plan["spend"])  # (T, J, C)
            x_total = np.clip(spend.sum(axis=1), 0.0, 1.0)
            song = self.store.get("songs", doc["song_id"])
            z = (np.asarray(z_path, dtype=float) if z_path is not None
                 else np.asarray(song["covariates"]["z"], dtype=float))
            z = z[: x_total.shape[0]]
            predictive = self.predictive(
                fit_id, quantiles, proposed={"x": x_total.tolist(),
                                             "z": z.tolist()})
        result = {
            "plan": plan,
            "baseline_objective": zero["objective"],
            "objective_delta": plan["objective"] - zero["objective"],
            "predictive": predictive,
        }
        self.store.log(
            "whatif",
            {"fit_id": fit_id, "budget": budget, "scheme": scheme,
             "z_path": None if z_path is None else np.asarray(z_path).tolist(),
             "quantiles": list(quantiles),
             "sizes": None if sizes is None else list(sizes),
             "effects": effects},
            result={"plan_id": plan["plan_id"]})
        return result


def replay_log(entries: list[dict], target_store: ProjectStore) -> ServiceCore:
    """Re-run every logged mutation into a fresh store.

    Payloads carry the full request (rows, configs, seeds) and ids are
    content hashes, so the replayed store matches the original.
    """
    core = ServiceCore(target_store)
    for entry in entries:
        action, payload = entry["action"], entry["payload"]
        if action == "ingest":
            core.ingest_rows(payload["rows"], payload.get("mapping") or None)
        elif action == "fit_null":
            core.fit_null(**payload)
        elif action == "fit_forced":
            core.fit_forced(**payload)
        elif action == "classify":
            core.classify(payload["song_ids"], payload["k"], payload["seed"])
        elif action == "optimize":
            core.optimize(payload["fit_id"], payload["scheme"], payload["budget"],
                          z_path=payload.get("z_path"),
                          sizes=payload.get("sizes"),
                          effects=payload.get("effects"))
        elif action == "whatif":
            core.whatif(payload["fit_id"], payload["budget"],
                        z_path=payload.get("z_path"),
                        quantiles=tuple(payload.get("quantiles",
                                                    (0.05, 0.5, 0.95))),
                        scheme=payload.get("scheme", "null"),
                        sizes=payload.get("sizes"),
                        effects=payload.get("effects"))
    return core


# ---------------------------------------------------------------------------
# Background jobs

@dataclass
class Job:
    job_id: str
    status: str = "queued"
    result: Any = None
    error: str | None = None
    done: threading.Event = field(default_factory=threading.Event)


class JobQueue:
    """A small worker pool; fits run here so reads never block."""

    def __init__(self, workers: int = 2):
        self._queue: queue.Queue = queue.Queue()
        self._jobs: dict[str, Job] = {}
        self._counter = itertools.count(1)
        self._lock = threading.Lock()
        self._threads = [threading.Thread(target=self._run, daemon=True)
                         for _ in range(workers)]
        for t in self._threads:
            t.start()

    def submit(self, fn, *args, **kwargs) -> str:
        with self._lock:
            job_id = f"job-{next(self._counter):04d}"
            job = Job(job_id)
            self._jobs[job_id] = job
        self._queue.put((job, fn, args, kwargs))
        return job_id

    def get(self, job_id: str) -> Job:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise StoreError(f"job {job_id} not found") from None

    def wait(self, job_id: str, timeout: float = 120.0) -> Job:
        job = self.get(job_id)
        job.done.wait(timeout)
        return job

    def _run(self):
        while True:
            job, fn, args, kwargs = self._queue.get()
            job.status = "running"
            try:
                job.result = fn(*args, **kwargs)
                job.status = "done"
            except Exception as exc:  # workers must survive any job failure
                job.status = "failed"
                job.error = f"{type(exc).__name__}: {exc}"
            finally:
                job.done.set()
                self._queue.task_done()


# ---------------------------------------------------------------------------
# HTTP API

def create_app(store_path, workers: int = 2):
    """The JSON API over a project store."""
    from fastapi import FastAPI
    from fastapi.responses import JSONResponse

    app = FastAPI(title="streamdemand", docs_url=None, redoc_url=None)
    core = ServiceCore(ProjectStore(store_path))
    jobs = JobQueue(workers=workers)
    app.state.core = core
    app.state.jobs = jobs

    @app.exception_handler(StoreError)
    async def store_error(_, exc: StoreError):
        status = 409 if exc.conflict else 404
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.exception_handler(StreamDemandError)
    async def validation_error(_, exc: StreamDemandError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def internal_error(_, exc: Exception):
        return JSONResponse(status_code=500, content={"error": "internal error"})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/ingest")
    def ingest(body: dict):
        return core.ingest_rows(body["rows"], body.get("mapping"))

    @app.get("/songs")
    def songs():
        return {"songs": core.list_songs()}

    @app.get("/songs/{song_id}/curves")
    def curves(song_id: str):
        return core.song_curves(song_id)

    @app.post("/fit/null")
    def fit_null(body: dict):
        job_id = jobs.submit(core.fit_null, body["song_id"],
                             seed=int(body.get("seed", 0)),
                             chains=int(body.get("chains", 2)),
                             warmup=int(body.get("warmup", 500)),
                             draws=int(body.get("draws", 500)))
        return {"job_id": job_id}

    @app.post("/fit/forced")
    def fit_forced(body: dict):
        job_id = jobs.submit(core.fit_forced, body["song_id"],
                             seed=int(body.get("seed", 0)),
                             bayes=bool(body.get("bayes", False)),
                             sample_taus=bool(body.get("sample_taus", False)),
                             chains=int(body.get("chains", 2)),
                             warmup=int(body.get("warmup", 500)),
                             draws=int(body.get("draws", 500)))
        return {"job_id": job_id}

    @app.post("/classify")
    def classify(body: dict):
        job_id = jobs.submit(core.classify, body.get("song_ids"),
                             k=int(body.get("k", 7)), seed=int(body.get("seed", 0)))
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        out = {"job_id": job.job_id, "status": job.status}
        if job.status == "done":
            out["result"] = job.result
        if job.status == "failed":
            out["error"] = job.error
        return out

    @app.get("/fits/{fit_id}")
    def get_fit(fit_id: str):
        return core.get_fit(fit_id)

    @app.get("/fits/{fit_id}/predictive")
    def predictive(fit_id: str, quantiles: str = "0.05,0.5,0.95"):
        qs = tuple(float(q) for q in quantiles.split(","))
        return core.predictive(fit_id, qs)

    @app.post("/optimize/null")
    def optimize_null(body: dict):
        return core.optimize(body["fit_id"], "null", body["budget"],
                             z_path=body.get("z_path"), sizes=body.get("sizes"),
                             effects=body.get("effects"))

    @app.post("/optimize/forced")
    def optimize_forced(body: dict):
        return core.optimize(body["fit_id"], "forced", body["budget"],
                             z_path=body.get("z_path"), sizes=body.get("sizes"),
                             effects=body.get("effects"))

    @app.post("/optimize/whatif")
    def optimize_whatif(body: dict):
        return core.whatif(body["fit_id"], body["budget"],
                           z_path=body.get("z_path"),
                           quantiles=tuple(body.get("quantiles", (0.05, 0.5, 0.95))),
                           scheme=body.get("scheme", "null"),
                           sizes=body.get("sizes"), effects=body.get("effects"))

    return app


def serve(store_path, host: str = "127.0.0.1", port: int = 8000):
    """Run the API with uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(store_path), host=host, port=port, log_level="warning")
