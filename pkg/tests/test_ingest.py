from datetime import date

import numpy as np
import pytest

from streamdemand.errors import ConfigurationError, EmptyCurveError
from streamdemand.ingest import (
    IngestRecord,
    covariates_from_records,
    ingest_csv,
    parse_rows,
    translate_to_origin,
)


def write_csv(path, rows, header=None):
    import csv

    header = header or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    return path


def row(song="s1", artist="a1", stratum="dsp-a", week="2021-01-04",
        streams="10", release="2021-01-04", **covs):
    base = {"song_id": song, "artist_id": artist, "stratum": stratum,
            "week_start": week, "streams": streams, "release_date": release}
    base.update(covs)
    return base


class TestIngestCsv:
    def test_well_formed_rows(self, tmp_path):
        rows = [row(week="2021-01-04"), row(week="2021-01-11", streams="12"),
                row(week="2021-01-18", streams="7")]
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 3
        assert len(rejects) == 0
        assert records[0].week_index == 0

    def test_negative_count_rejected(self, tmp_path):
        rows = [row(), row(week="2021-01-11", streams="-4")]
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 1
        assert len(rejects) == 1
        assert "negative" in rejects.rows[0]["reason"]

    def test_unparseable_date_rejected(self, tmp_path):
        rows = [row(), row(week="not-a-date")]
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 1
        assert "date" in rejects.rows[0]["reason"]

    def test_duplicates_summed_with_warning(self, tmp_path):
        rows = [row(streams="10"), row(streams="5")]
        with pytest.warns(UserWarning, match="duplicate"):
            records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 1
        assert records[0].streams == 15

    def test_missing_required_column(self, tmp_path):
        rows = [{k: v for k, v in row().items() if k != "streams"}]
        with pytest.raises(ConfigurationError):
            ingest_csv(write_csv(tmp_path / "d.csv", rows))

    def test_column_mapping(self, tmp_path):
        rows = [{"Song": "s1", "Artist": "a1", "DSP": "apple",
                 "Week": "2021-01-04", "Plays": "33", "Released": "2021-01-04"}]
        mapping = {"song_id": "Song", "artist_id": "Artist", "stratum": "DSP",
                   "week_start": "Week", "streams": "Plays",
                   "release_date": "Released"}
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows), mapping)
        assert len(records) == 1
        assert records[0].stratum == "apple"

    def test_covariates_parsed_and_validated(self, tmp_path):
        rows = [row(x_radio="0.5", z_social="0.2"),
                row(week="2021-01-11", x_radio="1.5", z_social="0.2")]
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 1
        assert records[0].covariate_dict() == {"x_radio": 0.5, "z_social": 0.2}
        assert "outside" in rejects.rows[0]["reason"]

    def test_pre_release_rejected(self, tmp_path):
        rows = [row(week="2020-12-28"), row()]
        records, rejects = ingest_csv(write_csv(tmp_path / "d.csv", rows))
        assert len(records) == 1
        assert "before release" in rejects.rows[0]["reason"]


class TestTranslateToOrigin:
    def _rec(self, week, streams, stratum="dsp-a", release="2021-01-04"):
        return IngestRecord("s1", "a1", stratum, date.fromisoformat(week),
                            streams, date.fromisoformat(release))

    def test_release_week_is_index_zero(self):
        curves = translate_to_origin([self._rec("2021-01-04", 9)])
        assert curves["dsp-a"].values.tolist() == [9]

    def test_gap_weeks_zero_filled(self):
        curves = translate_to_origin([
            self._rec("2021-01-04", 5), self._rec("2021-01-25", 7)])
        assert curves["dsp-a"].values.tolist() == [5, 0, 0, 7]

    def test_all_pre_release_is_error(self):
        with pytest.warns(UserWarning, match="pre-release"):
            with pytest.raises(EmptyCurveError):
                translate_to_origin([
                    IngestRecord("s1", "a1", "dsp-a", date(2020, 12, 1), 5,
                                 date(2021, 1, 4))])

    def test_multiple_strata(self):
        curves = translate_to_origin([
            self._rec("2021-01-04", 5), self._rec("2021-01-04", 8, stratum="dsp-b"),
            self._rec("2021-01-11", 2, stratum="dsp-b")])
        assert curves["dsp-a"].values.tolist() == [5, 0]
        assert curves["dsp-b"].values.tolist() == [8, 2]

    def test_mixed_songs_rejected(self):
        records = [self._rec("2021-01-04", 5),
                   IngestRecord("other", "a1", "dsp-a", date(2021, 1, 4), 5,
                                date(2021, 1, 4))]
        with pytest.raises(ConfigurationError):
            translate_to_origin(records)

    def test_roundtrip_counts_exact(self):
        # ingest -> translate reproduces the counts exactly
        weeks = ["2021-01-04", "2021-01-11", "2021-01-18", "2021-01-25"]
        counts = [3, 0, 14, 9]
        records = [self._rec(w, c) for w, c in zip(weeks, counts)]
        curves = translate_to_origin(records)
        assert curves["dsp-a"].values.tolist() == counts


class TestCovariates:
    def test_matrix_construction(self):
        records = [
            IngestRecord("s1", "a1", "dsp-a", date(2021, 1, 4), 5, date(2021, 1, 4),
                         (("x_radio", 0.3), ("z_social", 0.1))),
            IngestRecord("s1", "a1", "dsp-a", date(2021, 1, 18), 5, date(2021, 1, 4),
                         (("x_radio", 0.6), ("z_social", 0.4))),
        ]
        x, z, x_names, z_names = covariates_from_records(records, horizon=3)
        assert x_names == ["x_radio"]
        assert z_names == ["z_social"]
        assert np.allclose(x[:, 0], [0.3, 0.0, 0.6])
        assert np.allclose(z[:, 0], [0.1, 0.0, 0.4])


class TestParseRows:
    def test_inline_rows(self):
        records, rejects = parse_rows([row(), row(week="2021-01-11")])
        assert len(records) == 2
        assert len(rejects) == 0
