import csv
import json

import pytest

from codedgrad.cli import main
from codedgrad.config import SCHEMAS, resolve
from codedgrad.errors import ConfigError


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_tables(tmp_path):
    assert main(["tables", "--out", str(tmp_path)]) == 0
    t1 = {r["row"]: r for r in read(tmp_path / "table1.csv") if r["row"] != "-"}
    assert (t1["N5"]["MCC"], t1["N5"]["UC_MMC"], t1["N5"]["CPGC"]) == ("12", "8", "12")
    t2 = {r["row"]: r for r in read(tmp_path / "table2.csv") if r["row"] != "-"}
    assert (t2["N10"]["MCC"], t2["N10"]["UC_MMC"], t2["N10"]["CPGC"]) == ("0", "1", "1")
    diff = (tmp_path / "tables_diff.txt").read_text()
    assert diff.startswith("mismatches: 0")
    assert "N9" in diff
    assert json.loads((tmp_path / "manifest.json").read_text())["subcommand"] == "tables"


def test_analyze(tmp_path):
    assert main(["analyze", "--out", str(tmp_path)]) == 0
    cdf = {n: read(tmp_path / f"cdf_{n}.csv") for n in ("MCC", "UC_MMC", "CPGC")}
    assert len(cdf["CPGC"]) == 50
    for i, row in enumerate(cdf["CPGC"]):
        for other in ("MCC", "UC_MMC"):
            assert float(row["mprime_4"]) >= float(cdf[other][i]["mprime_4"]) - 1e-15
        assert abs(float(row["mprime_3"]) - float(cdf["UC_MMC"][i]["mprime_3"])) <= 1e-12
        if float(row["t"]) < 0.01:
            assert float(row["mprime_4"]) == 0.0
    et = read(tmp_path / "etimes.csv")
    assert len(et) == 6


def test_analyze_budget_error(tmp_path, capsys):
    rc = main(["analyze", "--out", str(tmp_path), "--set", "M=20", "--set", "K=20", "--set", "r=3"])
    assert rc != 0
    assert "budget" in capsys.readouterr().err


def test_simulate_deterministic(tmp_path):
    args = ["simulate", "--trials", "300", "--tolerance-grid", "0,0.1", "--set", "M=8", "--set", "K=8", "--set", "r=2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    for name in ("sweep.csv", "metric_T.csv", "metric_load.csv", "metric_volume.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read(tmp_path / "a" / "sweep.csv")
    mcc = [r for r in rows if r["scheme"] == "MCC"]
    assert mcc[0]["mean_T"] == mcc[1]["mean_T"]


def test_manifest_rerun(tmp_path):
    assert main(["simulate", "--trials", "200", "--set", "schemes=CPGC", "--set", "M=6", "--set", "K=6",
                 "--set", "trace=true", "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert (tmp_path / "b" / "trace_CPGC_tol0.0.csv").exists()


def test_manifest_subcommand_mismatch(tmp_path):
    main(["dump-schedule", "--out", str(tmp_path / "a")])
    assert main(["gd", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")]) != 0


def test_gd_zero_tolerance_matches_reference(tmp_path):
    out = tmp_path / "g"
    assert main(["gd", "--out", str(out), "--set", "tolerance=0", "--set", "iterations=15"]) == 0
    traj = read(out / "gd_trajectory.csv")
    ref = read(out / "gd_reference.csv")
    assert len(traj) == len(ref) == 16
    for a, b in zip(traj, ref):
        assert abs(float(a["loss"]) - float(b["loss"])) <= 1e-9 * abs(float(b["loss"]))


def test_gd_seeds_converge_alike(tmp_path):
    finals = []
    for seed in (1, 2):
        out = tmp_path / str(seed)
        assert main(["gd", "--out", str(out), "--seed", str(seed), "--set", "iterations=40"]) == 0
        rows = read(out / "gd_trajectory.csv")
        finals.append([float(r["loss"]) for r in rows])
    assert finals[0] != finals[1]
    assert abs(finals[0][-1] - finals[1][-1]) <= 0.05 * max(finals[0][-1], finals[1][-1])


def test_missing_key_names_key_and_type(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    full = {k: v for k, (_, v) in SCHEMAS["gd"].items()}
    del full["iterations"]
    cfg.write_text(json.dumps(full))
    assert main(["gd", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    err = capsys.readouterr().err
    assert "iterations" in err and "integer" in err


def test_unknown_and_ill_typed_keys():
    with pytest.raises(ConfigError, match="unknown"):
        resolve("gd", None, {"itrations": "3"})
    with pytest.raises(ConfigError, match="expects an integer"):
        resolve("gd", None, {"iterations": "many"})
    with pytest.raises(ConfigError, match="expects a number"):
        resolve("simulate", {**{k: v for k, (_, v) in SCHEMAS["simulate"].items()}, "mu": "fast"}, {})


def test_flag_not_applicable(tmp_path, capsys):
    assert main(["tables", "--seed", "3", "--out", str(tmp_path)]) != 0
    assert "--seed" in capsys.readouterr().err


def test_dump_schedule(tmp_path):
    assert main(["dump-schedule", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "schedule.json").read_text())
    assert data["scheme"] == "CPGC" and data["rows"] == 3
    text = (tmp_path / "schedule.txt").read_text().splitlines()
    assert text[2].split()[0] == "W3+W4"
    assert text[3].split()[0] == "W10+W11"


def test_unsupported_schedule_exit_code(tmp_path):
    assert main(["dump-schedule", "--out", str(tmp_path), "--set", "M=5", "--set", "K=5"]) != 0


def test_bad_override_syntax(tmp_path):
    assert main(["gd", "--set", "iterations", "--out", str(tmp_path)]) != 0


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="measured CPGC volume at 10% tolerance is about 1.18 against 1.05 for MCC")
def test_cpgc_volume_near_mcc_at_ten_percent(tmp_path):
    assert main(["simulate", "--tolerance-grid", "0,0.05,0.10,0.15", "--out", str(tmp_path)]) == 0
    rows = {(r["scheme"], float(r["tolerance"])): r for r in read(tmp_path / "sweep.csv")}
    gap = abs(float(rows["CPGC", 0.10]["mean_volume"]) - float(rows["MCC", 0.10]["mean_volume"]))
    assert gap <= 0.1
