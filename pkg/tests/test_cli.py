import csv
import math
import time

import numpy as np
import pytest

from onebit_dp import cli
from onebit_dp import experiments as ex
from onebit_dp.mechanisms import PrivateResult
from onebit_dp.privacy import PrivacyLedger
from onebit_dp.spg import SolverError


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def without_wall(rows):
    return [r[:-1] for r in rows]


def small_config(tmp_path, **extra):
    lines = ["[dataset]", "d1 = 12", "d2 = 12", "[run]"] + [f"{k} = {v}" for k, v in extra.items()]
    p = tmp_path / "exp.ini"
    p.write_text("\n".join(lines) + "\n")
    return p


@pytest.fixture
def stub_solver(monkeypatch):
    """Replace the solves by instant fakes that still spend the declared budget."""

    def fake(obs, cfg, clean=None):
        led = PrivacyLedger()
        if cfg.privacy.mechanism.value != "clear":
            led.spend("fake", cfg.privacy.epsilon)
        return PrivateResult(np.zeros(obs.shape), [], 0, True, ledger=led,
                             mechanism=cfg.privacy.mechanism)

    monkeypatch.setattr(ex, "run_mechanism", fake)
    monkeypatch.setattr(ex, "run_output_perturbation", fake)


class TestSynth:
    def test_clear_smoke(self, tmp_path):
        cfg = small_config(tmp_path, d1=20, d2=20)
        out = tmp_path / "r.csv"
        t0 = time.perf_counter()
        code = cli.main(["synth", "--config", str(cfg), "--seeds", "0", "--mechanisms", "clear",
                         "--eps", "1", "--out", str(out)])
        assert time.perf_counter() - t0 < 10
        assert code == 0
        rows = read(out)
        assert rows[0] == ex.CSV_HEADER and len(rows) == 2
        assert rows[1][:7] == ["synthetic", "clear", "logistic", "1.0", "0.15", "0", "are"]
        assert math.isfinite(float(rows[1][7]))

    def test_default_grid_row_count(self, tmp_path, stub_solver):
        out = tmp_path / "r.csv"
        assert cli.main(["synth", "--config", str(small_config(tmp_path)), "--out", str(out)]) == 0
        rows = read(out)[1:]
        assert len(rows) == 5 * 10 * 40
        assert {r[1] for r in rows} == {"clear", "inp", "objp", "grap", "outp"}
        assert len({r[3] for r in rows}) == 10 and len({r[5] for r in rows}) == 40

    def test_deterministic(self, tmp_path):
        cfg = small_config(tmp_path)
        args = ["synth", "--config", str(cfg), "--seeds", "0,1", "--eps", "1,5", "--mechanisms",
                "clear,inp,objp,grap,outp", "--link", "gaussian", "--sigma", "1"]
        assert cli.main(args + ["--out", str(tmp_path / "a.csv")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b.csv")]) == 0
        a, b = read(tmp_path / "a.csv"), read(tmp_path / "b.csv")
        assert without_wall(a) == without_wall(b)
        assert (tmp_path / "a.budget.csv").read_text() == (tmp_path / "b.budget.csv").read_text()

    def test_budget_log(self, tmp_path):
        out = tmp_path / "r.csv"
        cli.main(["synth", "--config", str(small_config(tmp_path)), "--seeds", "3", "--eps", "2",
                  "--mechanisms", "clear,grap,objp", "--out", str(out)])
        budget = {(r[1], r[3]): float(r[7]) for r in read(tmp_path / "r.budget.csv")[1:]}
        assert budget == {("clear", "2.0"): 0.0, ("grap", "2.0"): pytest.approx(2.0, abs=1e-12),
                          ("objp", "2.0"): 2.0}

    def test_pool_matches_serial(self, tmp_path):
        cfg = small_config(tmp_path)
        args = ["synth", "--config", str(cfg), "--seeds", "0-2", "--eps", "3", "--mechanisms", "objp"]
        cli.main(args + ["--out", str(tmp_path / "a.csv")])
        cli.main(args + ["--jobs", "2", "--out", str(tmp_path / "b.csv")])
        assert without_wall(read(tmp_path / "a.csv")) == without_wall(read(tmp_path / "b.csv"))


class TestErrors:
    @pytest.mark.parametrize("args", [
        ["--mechanisms", "foo"],
        ["--eps", "0"],
        ["--eps", "abc"],
        ["--seeds", "1,1"],
        ["--ratio", "1.5"],
    ])
    def test_config_errors(self, tmp_path, args, capsys):
        code = cli.main(["synth", "--config", str(small_config(tmp_path)), "--out",
                         str(tmp_path / "r.csv")] + args)
        assert code == cli.EXIT_CONFIG
        assert not (tmp_path / "r.csv").exists()
        assert "config error" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[run]\nfrobnicate = 3\n")
        assert cli.main(["synth", "--config", str(p)]) == cli.EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert cli.main(["synth", "--config", str(tmp_path / "none.ini")]) == cli.EXIT_CONFIG

    def test_missing_data(self, tmp_path):
        assert cli.main(["real", "--dataset", f"ml100k:{tmp_path / 'nothing'}",
                         "--out", str(tmp_path / "r.csv")]) == cli.EXIT_DATA

    def test_bad_data(self, tmp_path):
        p = tmp_path / "u.data"
        p.write_text("1\t1\tfive\t0\n")
        assert cli.main(["real", "--dataset", f"ml100k:{p}", "--out", str(tmp_path / "r.csv")]) == cli.EXIT_DATA

    def test_numerical_failure(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise SolverError("objective became non-finite")

        monkeypatch.setattr(ex, "run_mechanism", boom)
        code = cli.main(["synth", "--config", str(small_config(tmp_path)), "--seeds", "0",
                         "--mechanisms", "objp", "--eps", "1", "--out", str(tmp_path / "r.csv")])
        assert code == cli.EXIT_NUMERICAL

    def test_real_needs_dataset(self, tmp_path):
        assert cli.main(["real", "--dataset", "synthetic"]) == cli.EXIT_CONFIG


def write_ml_split(d, seed=0, users=15, items=12):
    rng = np.random.default_rng(seed)
    pairs = [(u, i) for u in range(1, users + 1) for i in range(1, items + 1) if rng.random() < 0.6]
    rng.shuffle(pairs)
    k = int(0.8 * len(pairs))
    for name, part in (("u1.base", pairs[:k]), ("u1.test", pairs[k:])):
        (d / name).write_text("".join(f"{u}\t{i}\t{rng.integers(1, 6)}\t0\n" for u, i in part))


def write_rc_file(p, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["userID,placeID,rating,food_rating,service_rating"]
    for u in range(10):
        for i in range(8):
            if rng.random() < 0.5:
                lines.append(f"U{u},{100 + i},{rng.integers(0, 3)},0,0")
    p.write_text("\n".join(lines) + "\n")


class TestReal:
    def test_movielens_rows_and_rerun(self, tmp_path):
        write_ml_split(tmp_path)
        args = ["real", "--dataset", f"ml100k:{tmp_path}", "--seeds", "1", "--eps", "4",
                "--mechanisms", "clear,inp,objp,grap,outp"]
        assert cli.main(args + ["--out", str(tmp_path / "a.csv")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b.csv")]) == 0
        a = read(tmp_path / "a.csv")
        assert without_wall(a) == without_wall(read(tmp_path / "b.csv"))
        assert len(a) == 1 + 5
        assert {r[6] for r in a[1:]} == {"acc"}
        assert all(0 <= float(r[7]) <= 1 for r in a[1:])

    def test_rc(self, tmp_path):
        write_rc_file(tmp_path / "rating_final.csv")
        out = tmp_path / "r.csv"
        assert cli.main(["real", "--dataset", f"rc:{tmp_path}", "--seeds", "0,1", "--eps", "1",
                         "--mechanisms", "inp,objp,grap", "--out", str(out)]) == 0
        rows = read(out)[1:]
        assert len(rows) == 6 and {r[0] for r in rows} == {"rc"}


class TestSweepRatio:
    def test_row_count(self, tmp_path, stub_solver):
        out = tmp_path / "r.csv"
        assert cli.main(["sweep-ratio", "--config", str(small_config(tmp_path)), "--eps", "2,6",
                         "--mechanisms", "inp,outp,clear", "--out", str(out)]) == 0
        assert len(read(out)) - 1 == 7 * 2 * 3 * 10

    def test_full_observation(self, tmp_path):
        out = tmp_path / "r.csv"
        assert cli.main(["sweep-ratio", "--config", str(small_config(tmp_path)), "--ratio", "1.0",
                         "--seeds", "0", "--eps", "6", "--mechanisms", "objp", "--out", str(out)]) == 0
        rows = read(out)[1:]
        assert len(rows) == 1 and rows[0][4] == "1.0" and math.isfinite(float(rows[0][7]))


class TestPlotdata:
    def test_figure_one_shape(self, tmp_path, stub_solver):
        out = tmp_path / "r.csv"
        cli.main(["synth", "--config", str(small_config(tmp_path)), "--seeds", "0-2", "--out", str(out)])
        assert cli.main(["plotdata", str(out), "--out", str(tmp_path / "plots")]) == 0
        files = list((tmp_path / "plots").iterdir())
        assert [f.name for f in files] == ["r_synthetic_logistic_are.csv"]
        rows = read(files[0])[1:]
        assert len(rows) == 5 * 10
        assert {r[0] for r in rows} == {"clear", "inp", "objp", "grap", "outp"}

    def test_mean_column(self, tmp_path):
        out = tmp_path / "r.csv"
        cli.main(["synth", "--config", str(small_config(tmp_path)), "--seeds", "0-3", "--eps", "2",
                  "--mechanisms", "objp,outp", "--out", str(out)])
        cli.main(["plotdata", str(out)])
        agg = read(tmp_path / "r_synthetic_logistic_are.csv")[1:]
        raw = read(out)[1:]
        for mech, eps, ratio, mean, std, n in agg:
            vals = [float(r[7]) for r in raw if r[1] == mech and r[3] == eps]
            assert int(n) == len(vals) == 4
            assert abs(float(mean) - math.fsum(vals) / len(vals)) <= 1e-12
            assert float(std) == pytest.approx(np.std(vals, ddof=1), rel=1e-12)

    def test_empty_input(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text(",".join(ex.CSV_HEADER) + "\n")
        assert cli.main(["plotdata", str(p), "--out", str(tmp_path / "plots")]) == cli.EXIT_CONFIG
        assert not (tmp_path / "plots").exists()

    def test_schema_mismatch(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        assert cli.main(["plotdata", str(p)]) == cli.EXIT_CONFIG

    def test_pure_function_of_csv(self, tmp_path, stub_solver):
        out = tmp_path / "r.csv"
        cli.main(["synth", "--config", str(small_config(tmp_path)), "--seeds", "0,1", "--out", str(out)])
        cli.main(["plotdata", str(out), "--out", str(tmp_path / "p1")])
        cli.main(["plotdata", str(out), "--out", str(tmp_path / "p2")])
        for f in (tmp_path / "p1").iterdir():
            assert f.read_text() == (tmp_path / "p2" / f.name).read_text()


def test_config_file_and_overrides(tmp_path):
    p = small_config(tmp_path, eps="1, 2", mechanisms="objp", seeds="0-4")
    cfg = ex.load_config(p, eps="3")
    assert cfg.d1 == 12 and cfg.epsilons == (3.0,) and cfg.mechanisms == ("objp",)
    assert cfg.seeds == (0, 1, 2, 3, 4)
