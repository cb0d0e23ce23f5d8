"""Command-line interface.

Subcommands cover the whole pipeline: simulate a scenario, ingest CSVs
into a store, fit the null and envelope models, classify curve modes,
plan budgets, emit SVG reports and serve the HTTP API. Exit codes:
0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    CoverageError,
    DomainError,
    EmptyCurveError,
    InfeasibleError,
    StoreError,
    StreamDemandError,
)
from .ingest import records_to_csv_rows
from .rng import rng_from_seed
from .scenario import load_scenario, simulate_scenario
from .service import ServiceCore
from .store import ProjectStore

_VALIDATION_ERRORS = (DomainError, ConfigurationError, CoverageError,
                      EmptyCurveError, InfeasibleError, StoreError)


def _write_json(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_rows(path, rows, fmt):
    if fmt == "json":
        _write_json(path, rows)
        return
    if not rows:
        raise DomainError("nothing to write")
    header = list(rows[0].keys())
    out = open(path, "w", newline="") if path not in (None, "-") else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return json.load(fh)
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamdemand",
        description="simulate, estimate and optimize streaming-song demand")
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--store",
                        default=os.environ.get("STREAMDEMAND_STORE", "./store"),
                        help="project store directory "
                             "(env: STREAMDEMAND_STORE)")
    parser.add_argument("--config", help="JSON file with extra options")
    parser.add_argument("--output-format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scenario file into weekly rows")
    p.add_argument("--scenario", required=True)
    p.add_argument("--output", "-o", default="-")

    p = sub.add_parser("ingest", help="load a weekly CSV export into the store")
    p.add_argument("--csv", required=True)
    p.add_argument("--mapping", help="JSON file mapping canonical to file columns")

    p = sub.add_parser("fit-null", help="fit the always-on hierarchy for a song")
    p.add_argument("--song", required=True)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--warmup", type=int, default=500)
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--output", "-o")

    p = sub.add_parser("fit-adsr", help="fit the four-phase envelope for a song")
    p.add_argument("--song", required=True)
    p.add_argument("--bayes", action="store_true")
    p.add_argument("--sample-taus", action="store_true")
    p.add_argument("--output", "-o")

    p = sub.add_parser("classify", help="cluster stored demand curves into modes")
    p.add_argument("--songs", nargs="*")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--output", "-o")

    p = sub.add_parser("optimize", help="plan budget allocation under a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--scheme", choices=("null", "forced"), default="null")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--social-cap", type=float, default=None)
    p.add_argument("--output", "-o")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("STREAMDEMAND_PORT", "8000")),
                   help="listen port (env: STREAMDEMAND_PORT)")

    p = sub.add_parser("report", help="emit per-song SVG reports")
    p.add_argument("--song", required=True)
    p.add_argument("--fit", help="fit id for the envelope overlay")
    p.add_argument("--outdir", default=".")
    return parser


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    records = simulate_scenario(scenario, rng_from_seed(args.seed))
    rows = records_to_csv_rows(records)
    fmt = "csv" if args.output_format == "csv" or str(args.output).endswith(".csv") \
        else args.output_format
    _write_rows(args.output, rows, fmt)
    return 0


def _cmd_ingest(args, core: ServiceCore) -> int:
    mapping = None
    if args.mapping:
        with open(args.mapping) as fh:
            mapping = json.load(fh)
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    summary = core.ingest_rows(rows, mapping)
    _write_json("-", {k: summary[k] for k in ("songs", "n_records", "n_rejects")})
    return 0


def _cmd_fit_null(args, core: ServiceCore) -> int:
    doc = core.fit_null(args.song, seed=args.seed, chains=args.chains,
                        warmup=args.warmup, draws=args.draws)
    _write_json(args.output or "-", doc)
    return 0


def _cmd_fit_adsr(args, core: ServiceCore) -> int:
    doc = core.fit_forced(args.song, seed=args.seed, bayes=args.bayes,
                          sample_taus=args.sample_taus)
    _write_json(args.output or "-", doc)
    taus = doc["envelope"]["change_points"]
    sys.stderr.write(
        "change points: attack={tau_a} sustain={tau_s} decay={tau_d} "
        "release={tau_r}\n".format(**taus))
    return 0


def _cmd_classify(args, core: ServiceCore) -> int:
    doc = core.classify(args.songs or None, k=args.k, seed=args.seed)
    _write_json(args.output or "-", doc)
    return 0


def _cmd_optimize(args, core: ServiceCore) -> int:
    budget = {"total": args.budget}
    if args.social_cap is not None:
        budget["social_cap"] = args.social_cap
    doc = core.optimize(args.fit, args.scheme, budget)
    _write_json(args.output or "-", doc)
    return 0


def _cmd_report(args, core: ServiceCore) -> int:
    from .core import CovariatePath, DemandCurve
    from .envelope import EnvelopeFit
    from .estimate import conditional_demand_chart, fit_count_regression
    from .report import control_chart_svg, envelope_svg

    song = core.song_curves(args.song)
    observed = np.asarray(song["aggregate"])
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    x = np.asarray(song["covariates"]["x"], dtype=float)
    z = np.asarray(song["covariates"]["z"], dtype=float)
    # constant columns are collinear with the intercept; drop them here
    x = x[:, np.ptp(x, axis=0) > 1e-12] if x.size else x
    z = z[:, np.ptp(z, axis=0) > 1e-12] if z.size else z
    cov = CovariatePath(x, z)
    curve = DemandCurve(args.song, "aggregate", observed)
    fit = fit_count_regression(curve, cov, family="negbin")
    chart = conditional_demand_chart(fit, cov)
    chart_path = outdir / f"{args.song}-control-chart.svg"
    control_chart_svg(chart_path, observed, chart,
                      title=f"{args.song}: conditional demand")
    written = [str(chart_path)]
    if args.fit:
        doc = core.get_fit(args.fit)
        if doc["kind"] != "forced":
            raise ConfigurationError("envelope overlay requires a forced fit")
        envelope = EnvelopeFit.from_dict(doc["envelope"])
        env_path = outdir / f"{args.song}-envelope.svg"
        envelope_svg(env_path, observed, envelope,
                     title=f"{args.song}: fitted envelope")
        written.append(str(env_path))
    _write_json("-", {"written": written})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "serve":
            from .service import serve

            serve(args.store, host=args.host, port=args.port)
            return 0
        core = ServiceCore(ProjectStore(args.store))
        handlers = {
            "ingest": _cmd_ingest,
            "fit-null": _cmd_fit_null,
            "fit-adsr": _cmd_fit_adsr,
            "classify": _cmd_classify,
            "optimize": _cmd_optimize,
            "report": _cmd_report,
        }
        return handlers[args.command](args, core)
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except StreamDemandError as exc:
        sys.stderr.write(f"failure: {exc}\n")
        return 2
    except Exception as exc:  # runtime failures map to exit 2
        sys.stderr.write(f"failure: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
