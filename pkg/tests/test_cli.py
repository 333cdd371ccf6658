import csv
import json

import numpy as np
import pytest

from elomov.cli import main, score_positions
from elomov.data import MatchRecord, SeasonDataset, load_season, write_season_csv
from elomov.estimation import closed_form_coefficients
from elomov.model import DiscretizationScheme, ModelCoefficients, expected_score
from elomov.simulator import SimSpec, generate_league, spread_skills
from conftest import EPL_FREQUENCIES


def write_csv(path, season):
    with open(path, "w", newline="") as fh:
        write_season_csv(season, fh)
    return str(path)


def counts_season(label, counts, scheme=DiscretizationScheme()):
    ms, t = [], 0
    for y, n in enumerate(counts):
        d = scheme.representative(y)
        for _ in range(n):
            ms.append(MatchRecord(t, f"T{t % 5}", f"T{(t + 2) % 5}", max(d, 0), max(-d, 0)))
            t += 1
    return SeasonDataset(label, tuple(ms))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def sim_files(tmp_path, coeffs4, scheme4):
    paths = []
    for i in range(3):
        spec = SimSpec(coeffs4, scheme4, spread_skills(6, 400), rounds=4, seed=i)
        paths.append(write_csv(tmp_path / f"200{i}.csv", generate_league(spec, f"200{i}")))
    return paths


@pytest.fixture
def coeff_file(tmp_path, sim_files):
    out = tmp_path / "est"
    assert main(["estimate", *sim_files, "--scheme", "4:2", "--out", str(out)]) == 0
    return str(out / "coefficients.json")


class TestIngest:
    def test_three_files(self, tmp_path, sim_files, capsys):
        out = tmp_path / "json"
        assert main(["ingest", *sim_files, "--out", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["2000.json", "2001.json", "2002.json"]
        assert len(load_season(out / "2001.json")) == 120

    def test_bad_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("Date,HomeTeam,AwayTeam,FTHG,FTAG\n01/01/20,A,B,1,0\n01/01/20,C,D,x,0\n")
        assert main(["ingest", str(bad), "--out", str(tmp_path)]) == 2
        assert "row 3" in capsys.readouterr().err

    def test_duplicate_label(self, tmp_path, sim_files):
        (tmp_path / "dup").mkdir()
        dup = tmp_path / "dup" / "2000.csv"
        dup.write_text(open(sim_files[0]).read())
        assert main(["ingest", sim_files[0], str(dup), "--out", str(tmp_path / "o")]) == 2

    def test_no_inputs(self, tmp_path):
        assert main(["ingest", "--out", str(tmp_path)]) == 1


class TestEstimate:
    def test_j2_freq_report(self, tmp_path, capsys):
        f = EPL_FREQUENCIES["2"]
        path = write_csv(tmp_path / "train.csv",
                         counts_season("train", [round(1000 * x) for x in f]))
        assert main(["estimate", path, "--scheme", "2", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "coefficients.json").read_text())
        assert doc["mode"] == "freq" and doc["scheme"] == "2"
        assert doc["eta"] == pytest.approx(0.11, abs=0.01)
        assert doc["alpha"][1] == pytest.approx(-0.15, abs=0.01)
        assert doc["kappa"] == pytest.approx(10 ** doc["alpha"][1])
        report = (tmp_path / "estimate_report.txt").read_text()
        assert f"{doc['eta']:.4f}" in report and "kappa" in report

    def test_j6(self, tmp_path):
        scheme = DiscretizationScheme((1, 2))
        counts = [round(1000 * x) for x in EPL_FREQUENCIES["6:1,2"]]
        path = write_csv(tmp_path / "train.csv", counts_season("train", counts, scheme))
        assert main(["estimate", path, "--scheme", "6:1,2", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "coefficients.json").read_text())
        assert doc["eta"] == pytest.approx(0.17, abs=0.01)
        assert doc["scores"][1:3] == pytest.approx([0.14, 0.26], abs=0.01)

    def test_zero_frequency(self, tmp_path, capsys):
        path = write_csv(tmp_path / "t.csv", counts_season("t", [5, 0, 7]))
        assert main(["estimate", path, "--out", str(tmp_path)]) == 3
        assert "smoothing" in capsys.readouterr().err

    def test_ml_mode(self, tmp_path, sim_files):
        assert main(["estimate", *sim_files, "--scheme", "4:2", "--mode", "ml",
                     "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "coefficients.json").read_text())
        assert doc["mode"] == "ml" and doc["converged"] is True

    def test_train_labels(self, tmp_path, sim_files):
        assert main(["estimate", *sim_files, "--scheme", "4:2", "--train-labels", "2000,2001",
                     "--test-labels", "2002", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "coefficients.json").read_text())
        assert doc["train_labels"] == ["2000", "2001"] and doc["n_games"] == 240

    def test_bad_scheme(self, tmp_path, sim_files):
        assert main(["estimate", *sim_files, "--scheme", "4:x", "--out", str(tmp_path)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


class TestRateEval:
    def test_rate(self, tmp_path, sim_files, coeff_file):
        out = tmp_path / "rate"
        assert main(["rate", sim_files[0], "--coefficients", coeff_file, "--k", "0.1",
                     "--out", str(out)]) == 0
        traj = read_rows(out / "trajectory_2000.csv")
        assert len(traj) == 121
        ratings = read_rows(out / "ratings_2000.csv")
        assert ratings[0] == ["rank", "team", "theta", "theta_over_sigma"]
        assert sum(float(r[2]) for r in ratings[1:]) == pytest.approx(0.0, abs=1e-9)
        first = (out / "trajectory_2000.csv").read_text()
        assert main(["rate", sim_files[0], "--coefficients", coeff_file, "--k", "0.1",
                     "--out", str(out)]) == 0
        assert (out / "trajectory_2000.csv").read_text() == first

    def test_rate_needs_k(self, tmp_path, sim_files, coeff_file):
        assert main(["rate", sim_files[0], "--coefficients", coeff_file,
                     "--out", str(tmp_path)]) == 1

    def test_eval_with_sweep(self, tmp_path, sim_files, coeff_file):
        out = tmp_path / "ev"
        assert main(["eval", *sim_files, "--coefficients", coeff_file, "--k", "0.1",
                     "--test-labels", "2001,2002", "--k-grid", "0.05:0.2:0.05",
                     "--out", str(out)]) == 0
        doc = json.loads((out / "eval_report.json").read_text())
        assert [s["label"] for s in doc["seasons"]] == ["2001", "2002"]
        assert doc["pooled_baseline_log_score"] is None
        assert len(read_rows(out / "eval_sweep_k.csv")) == 5

    def test_eval_baseline_only_with_odds(self, tmp_path, coeff_file):
        ms = [MatchRecord(t, "A" if t % 2 else "B", "B" if t % 2 else "A", t % 4, 1,
                          odds=(2.0, 3.0, 4.0) if t < 6 else None) for t in range(10)]
        path = write_csv(tmp_path / "odds.csv", SeasonDataset("odds", tuple(ms)))
        assert main(["eval", path, "--coefficients", coeff_file, "--k", "0.1",
                     "--tau", "0", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "eval_report.json").read_text())
        assert doc["seasons"][0]["baseline_games"] == 6
        assert doc["baseline_excluded"] == 4

    def test_sweep(self, tmp_path, sim_files, coeff_file, capsys):
        assert main(["sweep-k", *sim_files, "--coefficients", coeff_file,
                     "--k-grid", "0.02:0.3:0.04", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "sweep_k.csv")
        assert rows[0] == ["k_tilde", "avg_log_score"] and len(rows) == 9
        assert "best K" in capsys.readouterr().out

    def test_sweep_needs_grid(self, tmp_path, sim_files, coeff_file):
        assert main(["sweep-k", *sim_files, "--coefficients", coeff_file,
                     "--out", str(tmp_path)]) == 1


class TestSimulateCurves:
    def test_simulate(self, tmp_path, coeff_file):
        out = tmp_path / "sim"
        args = ["simulate", "--coefficients", coeff_file, "--teams", "4", "--rounds", "2",
                "--seasons", "2", "--seed", "7", "--spread", "1", "--out", str(out)]
        assert main(args) == 0
        a = load_season(out / "sim-7.json")
        assert len(a) == 24 and (out / "sim-8.json").exists()
        assert main(args) == 0
        assert load_season(out / "sim-7.json") == a

    def test_curves(self, tmp_path):
        c = ModelCoefficients.davidson(1.5, eta=0.0)
        doc = {"scheme": "2", **c.to_dict()}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc))
        assert main(["curves", "--coefficients", str(path), "--z-range=-400:400:100",
                     "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "curves.csv")
        assert rows[0] == ["z", "P0", "P1", "P2", "G"]
        assert len(rows) == 10
        mid = rows[5]
        assert float(mid[0]) == 0.0 and float(mid[4]) == pytest.approx(0.5)
        for r in rows[1:]:
            z = float(r[0]) / 400
            x, k = 10 ** z, 1.5
            ph, pd, pa = x / (x + k + 1 / x), k / (x + k + 1 / x), (1 / x) / (x + k + 1 / x)
            assert [float(v) for v in r[1:4]] == pytest.approx([pa, pd, ph], abs=1e-12)

    def test_score_points(self, coeffs4):
        pts = dict((h, z) for h, z, _ in score_positions(coeffs4))
        assert pts[2] == pytest.approx(-coeffs4.eta * coeffs4.sigma, abs=1e-6)
        for h, z, s in score_positions(coeffs4):
            assert expected_score(z, coeffs4, include_hfa=True) == pytest.approx(s, abs=1e-9)


class TestConfig:
    def test_file_and_flag_precedence(self, tmp_path, sim_files, coeff_file):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"# run settings\ncoefficients = {coeff_file}\nk = 0.5\nout = {tmp_path / 'a'}\n")
        assert main(["rate", sim_files[0], "--config", str(cfg)]) == 0
        assert main(["rate", sim_files[0], "--config", str(cfg), "--k", "0.05",
                     "--out", str(tmp_path / "b")]) == 0
        a = read_rows(tmp_path / "a" / "trajectory_2000.csv")
        b = read_rows(tmp_path / "b" / "trajectory_2000.csv")
        ratio = float(a[1][7]) / float(b[1][7])
        assert ratio == pytest.approx(10.0)

    def test_unknown_key(self, tmp_path, sim_files):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        assert main(["rate", sim_files[0], "--config", str(cfg)]) == 1

    def test_bad_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["rate", "--k", "abc"])
        assert exc.value.code == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
