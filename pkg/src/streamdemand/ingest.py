"""CSV ingestion and de-novo origin translation.

DSP exports arrive as weekly rows keyed by song, stratum and week start.
Ingestion validates row by row and never drops anything silently:
malformed rows land in a rejects report with a reason, duplicate
(song, stratum, week) rows are summed with a warning, and rows dated
before the release are rejected so every retained row satisfies
week_start >= release_date.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .core import DemandCurve
from .errors import ConfigurationError, EmptyCurveError

REQUIRED_COLUMNS = ("song_id", "artist_id", "stratum", "week_start",
                    "streams", "release_date")


@dataclass(frozen=True)
class IngestRecord:
    song_id: str
    artist_id: str
    stratum: str
    week_start: date
    streams: int
    release_date: date
    covariates: tuple[tuple[str, float], ...] = ()

    @property
    def week_index(self) -> int:
        return (self.week_start - self.release_date).days // 7

    def covariate_dict(self) -> dict[str, float]:
        return dict(self.covariates)


@dataclass
class RejectReport:
    rows: list[dict] = field(default_factory=list)

    def add(self, line_no: int, reason: str, raw: dict):
        self.rows.append({"line": line_no, "reason": reason, "raw": raw})

    def __len__(self) -> int:
        return len(self.rows)


def default_mapping() -> dict[str, str]:
    return {name: name for name in REQUIRED_COLUMNS}


def _parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())


def parse_rows(rows, mapping: dict[str, str] | None = None,
               header: list[str] | None = None, first_line: int = 2
               ) -> tuple[list[IngestRecord], RejectReport]:
    """Validate flat row dicts into records plus a rejects report.

    ``mapping`` maps canonical column names to the rows' key names;
    unmapped keys named ``x_*`` or ``z_*`` are picked up as covariates.
    Duplicate (song, stratum, week) rows are summed with a warning.
    """
    mapping = {**default_mapping(), **(mapping or {})}
    missing = [c for c in REQUIRED_COLUMNS if c not in mapping]
    if missing:
        raise ConfigurationError(f"mapping lacks required columns: {missing}")
    rows = list(rows)
    if header is None:
        header = sorted({k for row in rows for k in row})
    absent = [mapping[c] for c in REQUIRED_COLUMNS if mapping[c] not in header]
    if absent:
        raise ConfigurationError(f"rows lack mapped columns: {absent}")
    covariate_cols = [c for c in header
                      if c.startswith(("x_", "z_")) and c not in mapping.values()]
    rejects = RejectReport()
    seen: dict[tuple, IngestRecord] = {}
    duplicates = 0
    for line_no, raw in enumerate(rows, start=first_line):
        try:
            week_start = _parse_date(str(raw[mapping["week_start"]]))
            release = _parse_date(str(raw[mapping["release_date"]]))
        except (ValueError, TypeError, KeyError):
            rejects.add(line_no, "unparseable date", raw)
            continue
        try:
            streams = int(raw[mapping["streams"]])
        except (ValueError, TypeError, KeyError):
            rejects.add(line_no, "unparseable stream count", raw)
            continue
        if streams < 0:
            rejects.add(line_no, "negative stream count", raw)
            continue
        if week_start < release:
            rejects.add(line_no, "week starts before release", raw)
            continue
        covs = []
        bad_cov = None
        for col in covariate_cols:
            text = str(raw.get(col) if raw.get(col) is not None else "").strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                bad_cov = f"unparseable covariate {col}"
                break
            if not 0.0 <= value <= 1.0:
                bad_cov = f"covariate {col} outside [0, 1]"
                break
            covs.append((col, value))
        if bad_cov:
            rejects.add(line_no, bad_cov, raw)
            continue
        record = IngestRecord(
            song_id=str(raw[mapping["song_id"]]).strip(),
            artist_id=str(raw[mapping["artist_id"]]).strip(),
            stratum=str(raw[mapping["stratum"]]).strip(),
            week_start=week_start,
            streams=streams,
            release_date=release,
            covariates=tuple(covs),
        )
        key = (record.song_id, record.stratum, record.week_start)
        if key in seen:
            prev = seen[key]
            seen[key] = IngestRecord(
                prev.song_id, prev.artist_id, prev.stratum, prev.week_start,
                prev.streams + record.streams, prev.release_date,
                prev.covariates or record.covariates)
            duplicates += 1
        else:
            seen[key] = record
    if duplicates:
        warnings.warn(f"summed {duplicates} duplicate (song, stratum, week) rows",
                      stacklevel=2)
    return list(seen.values()), rejects


def ingest_csv(path, mapping: dict[str, str] | None = None
               ) -> tuple[list[IngestRecord], RejectReport]:
    """Parse and validate a weekly stream export file; see :func:`parse_rows`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = list(reader.fieldnames or [])
        return parse_rows(reader, mapping, header=header)


def translate_to_origin(records: list[IngestRecord]
                        ) -> dict[str, DemandCurve]:
    """Per-stratum weekly curves anchored at (release week, 0).

    Week 0 is the release week; interior weeks with no rows become zero
    counts. Rows dated before release are dropped with a warning (they
    cannot be indexed on the de-novo clock).
    """
    if not records:
        raise EmptyCurveError("no records to translate")
    songs = {r.song_id for r in records}
    if len(songs) > 1:
        raise ConfigurationError(f"records span several songs: {sorted(songs)}")
    pre_release = [r for r in records if r.week_start < r.release_date]
    if pre_release:
        warnings.warn(f"dropped {len(pre_release)} pre-release rows", stacklevel=2)
    usable = [r for r in records if r.week_start >= r.release_date]
    if not usable:
        raise EmptyCurveError("no post-release data for this song")
    horizon = max(r.week_index for r in usable) + 1
    strata = sorted({r.stratum for r in usable})
    song_id = usable[0].song_id
    out = {}
    for stratum in strata:
        values = np.zeros(horizon, dtype=np.int64)
        for r in usable:
            if r.stratum == stratum:
                values[r.week_index] += r.streams
        out[stratum] = DemandCurve(song_id, stratum, values)
    return out


def covariates_from_records(records: list[IngestRecord], horizon: int
                            ) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Weekly covariate matrices from the ``x_*`` / ``z_*`` columns.

    Covariates are per song and week; when strata rows disagree the last
    parsed value wins. Missing weeks stay at zero.
    """
    x_names = sorted({k for r in records for k, _ in r.covariates
                      if k.startswith("x_")})
    z_names = sorted({k for r in records for k, _ in r.covariates
                      if k.startswith("z_")})
    x = np.zeros((horizon, len(x_names)))
    z = np.zeros((horizon, len(z_names)))
    for r in records:
        if not r.release_date <= r.week_start:
            continue
        w = r.week_index
        if w >= horizon:
            continue
        covs = r.covariate_dict()
        for i, name in enumerate(x_names):
            if name in covs:
                x[w, i] = covs[name]
        for i, name in enumerate(z_names):
            if name in covs:
                z[w, i] = covs[name]
    return x, z, x_names, z_names


def records_to_csv_rows(records: list[IngestRecord]) -> list[dict]:
    """Flat dict rows (ISO dates) for CSV export; inverse of ingestion."""
    rows = []
    for r in records:
        row = {
            "song_id": r.song_id, "artist_id": r.artist_id, "stratum": r.stratum,
            "week_start": r.week_start.isoformat(), "streams": str(r.streams),
            "release_date": r.release_date.isoformat(),
        }
        row.update({k: repr(v) for k, v in r.covariates})
        rows.append(row)
    return rows


def weeks_to_dates(release: date, horizon: int) -> list[date]:
    return [release + timedelta(weeks=w) for w in range(horizon)]
