import io
from datetime import date

import pytest

from elomov.data import (
    MatchRecord,
    SeasonDataset,
    load_season,
    parse_season_csv,
    save_season,
    split_seasons,
    write_season_csv,
)
from elomov.errors import DataError
from elomov.model import DiscretizationScheme, ModelCoefficients
from elomov.simulator import SimSpec, generate_league

HEADER = "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG,FTR,HTHG,B365H,B365D,B365A\n"

SAMPLE = HEADER + (
    "E0,15/08/09,Chelsea,Hull,2,1,H,1,1.25,5.50,13.00\n"
    "E0,14/08/09,Aston Villa,Wigan,0,2,A,0,1.67,3.60,5.75\n"
    "E0,15/08/2009,Everton,Arsenal,1,6,A,0,3.20,3.25,2.30\n"
    "E0,15/08/09, Bolton ,Sunderland,0,1,A,0,,,\n"
    ",,,,,,,,,,\n"
)


def season_of(n_games=3):
    ms = [MatchRecord(t, f"A{t}", f"B{t}", t % 3, 1, date(2020, 1, 1 + t), (2.0, 3.0, 4.0))
          for t in range(n_games)]
    return SeasonDataset("x", tuple(ms))


class TestParse:
    def test_away_win_row(self):
        s = parse_season_csv(HEADER + "E0,14/08/09,Aston Villa,Wigan,0,2,A,0,1.67,3.60,5.75\n", "2009-2010")
        m = s.matches[0]
        assert (m.home, m.away, m.d, m.outcome) == ("Aston Villa", "Wigan", -2, "A")
        assert m.date == date(2009, 8, 14)
        assert m.odds == (1.67, 3.60, 5.75)

    def test_sorted_by_date_then_file_order(self):
        s = parse_season_csv(SAMPLE, "2009-2010")
        assert [m.home for m in s.matches] == ["Aston Villa", "Chelsea", "Everton", "Bolton"]
        assert [m.t for m in s.matches] == [0, 1, 2, 3]

    def test_names_trimmed_and_missing_odds(self):
        s = parse_season_csv(SAMPLE, "l")
        bolton = s.matches[3]
        assert bolton.home == "Bolton" and bolton.odds is None

    def test_four_digit_year(self):
        s = parse_season_csv(SAMPLE, "l")
        assert s.matches[2].date == date(2009, 8, 15)

    def test_bad_goals_reports_row(self):
        bad = HEADER + "E0,14/08/09,A,B,1,0,H,0,2,3,4\nE0,14/08/09,C,D,x,0,H,0,2,3,4\n"
        with pytest.raises(DataError) as err:
            parse_season_csv(bad, "l")
        assert err.value.rows == [3]
        assert "row 3" in str(err.value)

    def test_missing_columns(self):
        with pytest.raises(DataError, match="FTAG"):
            parse_season_csv("Date,HomeTeam,AwayTeam,FTHG\n1/1/20,A,B,1\n", "l")

    def test_empty_file(self):
        with pytest.raises(DataError):
            parse_season_csv("", "l")
        with pytest.raises(DataError):
            parse_season_csv(HEADER, "l")

    def test_self_match_rejected(self):
        with pytest.raises(DataError):
            parse_season_csv(HEADER + "E0,14/08/09,A,A,1,0,H,0,2,3,4\n", "l")

    def test_full_round_robin(self):
        coeffs = ModelCoefficients.davidson(1.0, eta=0.1)
        sim = generate_league(SimSpec(coeffs, DiscretizationScheme(), [0.0] * 20, 1, 3))
        buf = io.StringIO()
        write_season_csv(sim, buf)
        s = parse_season_csv(buf.getvalue(), "rr")
        assert len(s) == 380 and len(s.teams) == 20
        s.validate_round_robin()

    def test_round_robin_violation(self):
        with pytest.raises(DataError):
            parse_season_csv(SAMPLE, "l").validate_round_robin()


class TestRoundTrip:
    def test_csv(self):
        s = parse_season_csv(SAMPLE, "l")
        buf = io.StringIO()
        write_season_csv(s, buf)
        assert parse_season_csv(buf.getvalue(), "l") == s

    def test_json(self, tmp_path):
        s = parse_season_csv(SAMPLE, "2009-2010")
        save_season(s, tmp_path / "s.json")
        back = load_season(tmp_path / "s.json")
        assert back == s and back.label == "2009-2010"

    def test_category_override_survives(self, tmp_path):
        m = MatchRecord(0, "A", "B", 5, 0, category=3)
        s = SeasonDataset("x", (m,))
        save_season(s, tmp_path / "s.json")
        assert load_season(tmp_path / "s.json").matches[0].category == 3

    def test_schema_version_checked(self, tmp_path):
        (tmp_path / "s.json").write_text('{"schema_version": 99, "label": "x", "matches": []}')
        with pytest.raises(DataError):
            load_season(tmp_path / "s.json")

    def test_csv_file_label_from_stem(self, tmp_path):
        (tmp_path / "2010-2011.csv").write_text(SAMPLE)
        assert load_season(tmp_path / "2010-2011.csv").label == "2010-2011"


class TestSplit:
    def seasons(self):
        return [SeasonDataset(str(2009 + i), ()) for i in range(10)]

    def test_five_five(self):
        labels = [str(2009 + i) for i in range(10)]
        train, test = split_seasons(self.seasons(), labels[:5], labels[5:])
        assert len(train) == 5 and len(test) == 5
        assert [s.label for s in train] == labels[:5]

    def test_overlap(self):
        with pytest.raises(DataError):
            split_seasons(self.seasons(), ["2009", "2010"], ["2010"])

    def test_missing(self):
        with pytest.raises(DataError):
            split_seasons(self.seasons(), ["1999"])

    def test_empty_test_set(self):
        train, test = split_seasons(self.seasons(), [str(2009 + i) for i in range(10)], [])
        assert (len(train), len(test)) == (10, 0)


def test_match_outcome_and_validation():
    assert MatchRecord(0, "A", "B", 2, 2).outcome == "D"
    assert MatchRecord(0, "A", "B", 3, 1).d == 2
    with pytest.raises(ValueError):
        MatchRecord(0, "A", "B", -1, 0)
