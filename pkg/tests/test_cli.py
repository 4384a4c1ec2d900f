import csv
import io
import json
import math

import numpy as np
import pytest

from fairalloc.cli import main
from fairalloc.experiments import (OracleCheckConfig, PofPoeConfig, TwoClassConfig, describe,
                                   fmt, nearest_rank, parse_alphas, run_oracle_check,
                                   run_pofpoe, run_twoclass)
from fairalloc.fairness import FairnessParam
from fairalloc.outer import OuterConfig

TWO_USER = {"convention": "plain", "users": [{"q": 1, "b": 3}, {"q": 1, "b": 6}],
            "cost": {"c2": 1, "c1": 0}}


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "two_user.json"
    p.write_text(json.dumps(TWO_USER))
    return p


def _write(tmp_path, doc):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    return p


def test_solve_prints_json(scenario_file, capsys):
    assert main(["solve", "--scenario", str(scenario_file), "--alpha", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["method"] == "grid+inner"
    assert out["x"] == pytest.approx([0.0, 1.5], abs=1e-6)
    assert {"l", "s", "objective"} <= set(out)


def test_solve_several_alphas(scenario_file, capsys):
    assert main(["solve", "--scenario", str(scenario_file), "--alpha", "0,inf"]) == 0
    assert [r["alpha"] for r in json.loads(capsys.readouterr().out)] == ["0.0", "inf"]


def test_solve_bad_input(tmp_path, capsys):
    bad = _write(tmp_path, {"users": [{"q": -1, "b": 3}], "cost": {"c2": 1, "c1": 0}})
    assert main(["solve", "--scenario", str(bad)]) == 1
    assert "users[0].q" in capsys.readouterr().err


def test_missing_file_and_bad_flags(tmp_path):
    assert main(["solve", "--scenario", str(tmp_path / "nope.json")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 1
    assert main(["sweep", "--scenario", str(_write(tmp_path, TWO_USER)), "--alpha", "x"]) == 1


def test_solve_all_priced_out(tmp_path):
    doc = {"users": [{"q": 1, "b": 3}, {"q": 2, "b": 1}], "cost": {"c2": 1, "c1": 5}}
    for alpha in ("0", "1", "inf"):
        assert main(["solve", "--scenario", str(_write(tmp_path, doc)), "--alpha", alpha]) == 2


def test_sweep_csv(scenario_file, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--scenario", str(scenario_file), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["alpha"] for r in rows] == ["0.0", "0.5", "1.0", "2.0", "inf"]
    assert list(rows[0]) == ["alpha", "l", "x_1", "x_2", "s_1", "s_2", "total_surplus",
                             "min_surplus", "pof", "poe"]
    totals = [float(r["total_surplus"]) for r in rows]
    minima = [float(r["min_surplus"]) for r in rows]
    assert all(a > b for a, b in zip(totals, totals[1:]))
    assert all(a < b for a, b in zip(minima, minima[1:]))
    assert abs(float(rows[-1]["s_1"]) - float(rows[-1]["s_2"])) <= 1e-4
    assert float(rows[0]["pof"]) == 0.0


def test_fmt_round_trips():
    rng = np.random.default_rng(0)
    for v in np.concatenate([rng.standard_normal(200) * 10.0 ** rng.integers(-300, 300, 200),
                             [0.1, 1 / 3, 2 / 3, 5e-324]]):
        assert float(fmt(v)) == v
    assert fmt(3) == "3" and fmt("class1") == "class1"


def test_pofpoe_csv_round_trip():
    rep = run_pofpoe(PofPoeConfig(n_users=(2, 3), trials=3, seed=7))
    parsed = list(csv.reader(io.StringIO(rep.csv())))
    assert parsed[0] == ["n_users", "trial", "alpha", "pof", "poe"]
    for rec, row in zip(rep.records, parsed[1:]):
        assert int(row[0]) == rec[0] and int(row[1]) == rec[1] and row[2] == rec[2]
        assert float(row[3]) == rec[3] and float(row[4]) == rec[4]
    assert all(r[3] == 0.0 for r in rep.records if r[2] == "0.0")
    assert all(r[4] == 0.0 for r in rep.records if r[2] == "inf")


def test_summary_recomputable():
    rep = run_pofpoe(PofPoeConfig(n_users=(4,), trials=5, seed=2))
    data = rep.summary_json()
    assert data["schema_version"] == 1 and data["failure_count"] == 0
    for row in data["summary"]:
        vals = [r[3] for r in rep.records if r[0] == row["n_users"] and r[2] == row["alpha"]]
        assert row["pof"]["mean"] == float(np.mean(vals))
        assert row["pof"]["p95"] == nearest_rank(vals, 95)


def test_nearest_rank_and_describe():
    v = list(range(1, 101))
    assert nearest_rank(v, 5) == 5 and nearest_rank(v, 95) == 95 and nearest_rank(v, 0) == 1
    d = describe([1.0, 2.0, 3.0])
    assert d["mean"] == 2.0 and d["std"] == 1.0 and d["stderr"] == pytest.approx(1 / math.sqrt(3))


def test_failures_are_recorded(monkeypatch):
    import fairalloc.experiments as ex

    def boom(*a, **k):
        raise RuntimeError("injected")
    monkeypatch.setattr(ex, "sweep_alpha", boom)
    rep = ex.run_pofpoe(PofPoeConfig(n_users=(2,), trials=2))
    assert rep.records == [] and len(rep.failures) == 2
    assert rep.summary_json()["failure_count"] == 2


def test_twoclass_report():
    rep = run_twoclass(TwoClassConfig(trials=2, seed=3))
    assert len(rep.records) == 40
    for r in rep.records:
        assert r[7] == r[4] - r[3] and r[8] == r[6] - r[5]
    assert rep.summary["trials"]["completed"] == 2


def test_oracle_check_passes_and_is_deterministic():
    cfg = OracleCheckConfig(scenarios=3, seed=11)
    a, b = run_oracle_check(cfg), run_oracle_check(cfg)
    assert a["passed"] and a == b


def test_oracle_check_catches_loose_solver():
    # one coarse grid step and no refinement stands in for a broken solver
    cfg = OracleCheckConfig(scenarios=4, seed=11, alphas=(FairnessParam.alpha(0),),
                            outer=OuterConfig(delta_l=1.0, refine=False))
    rep = run_oracle_check(cfg)
    assert not rep["passed"]
    assert all("scenario_json" in f for f in rep["failures"])


def test_oracle_check_exit_code(monkeypatch, capsys):
    import fairalloc.cli as cli
    monkeypatch.setattr(cli, "run_oracle_check", lambda cfg: {
        "passed": False, "checks": 1, "failure_count": 1, "failures": [{}]})
    assert main(["oracle-check", "--trials", "1"]) == 3


def test_experiment_commands_are_byte_identical(tmp_path):
    for cmd in (["pofpoe", "--n-users", "2,3", "--trials", "3"],
                ["twoclass", "--trials", "2"],
                ["pofpoe", "--n-users", "2", "--trials", "4", "--workers", "2"]):
        outs = []
        for k in range(2):
            out = tmp_path / f"run{k}.csv"
            assert main(cmd + ["--seed", "5", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


def test_worker_pool_matches_serial(tmp_path):
    a = run_pofpoe(PofPoeConfig(n_users=(2,), trials=4, seed=1)).csv()
    b = run_pofpoe(PofPoeConfig(n_users=(2,), trials=4, seed=1, workers=2)).csv()
    assert a == b


def test_parse_alphas():
    assert parse_alphas("0, 1,inf") == [FairnessParam.alpha(0), FairnessParam.alpha(1),
                                        FairnessParam.maxmin()]
    with pytest.raises(ValueError):
        parse_alphas("")
