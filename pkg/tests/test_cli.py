from __future__ import annotations

import csv
import json

import pytest

from pmrhc import simulator as sim
from pmrhc.cli import EXIT_CONFIG, main, parse_range, parse_seeds, UsageError


@pytest.fixture
def short_cfg(tmp_path):
    cfg = sim.generate_config("ring", 4, 2, T=20.0)
    p = tmp_path / "ring4.json"
    p.write_text(json.dumps(cfg))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parsers():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("3,5") == [3, 5]
    assert parse_range("alpha=0.1:0.5:5") == ("alpha", pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5]))
    assert parse_range("R_j0=10:200:1") == ("R_j0", [10.0])
    for bad in ("alpha", "alpha=1:2", "alpha=1:2:0", "alpha=a:b:3"):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_run_writes_outputs(short_cfg, tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--config", str(short_cfg), "--out", str(out), "--sample-dt", "1"]) == 0
    rows = read_csv(out / "metrics.csv")
    assert list(rows[0]) == ["pc", "method", "J_T", "J_e", "J_s", "v_max", "u_max"]
    assert rows[0]["method"] == "SO"
    r = rows[0]
    assert float(r["J_T"]) == pytest.approx(213.3e-6 * float(r["J_e"]) + float(r["J_s"]), rel=1e-15)
    events = [json.loads(line) for line in (out / "events.jsonl").read_text().splitlines()]
    assert events and events[0]["t"] == 0.0 and events[0]["kind"] == "Arrival"
    assert len(read_csv(out / "timeseries.csv")) == 21
    meta = json.loads((out / "meta.json").read_text())
    assert len(meta["config_hash"]) == 16
    assert "J_T=" in capsys.readouterr().out


def test_run_method_override_and_scaling(short_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(short_cfg), "--out", str(a), "--method", "fo3"]) == 0
    assert main(["run", "--config", str(short_cfg), "--out", str(b), "--method", "fo3", "--scale-je"]) == 0
    ra, rb = read_csv(a / "metrics.csv")[0], read_csv(b / "metrics.csv")[0]
    assert ra["method"] == "FO3"
    assert float(rb["J_e"]) == pytest.approx(float(ra["J_e"]) / 10000)
    assert not (a / "timeseries.csv").exists()


def test_compare_marks_best(short_cfg, tmp_path):
    out = tmp_path / "c"
    assert main(["compare", "--config", str(short_cfg), "--methods", "SO", "FO1", "--out", str(out)]) == 0
    rows = read_csv(out / "metrics.csv")
    assert [r["method"] for r in rows] == ["SO", "FO1"]
    assert sum(int(r["best"]) for r in rows) == 1


def test_compare_generated_seeds(tmp_path):
    out = tmp_path / "g"
    assert main(["compare", "--config", "gen:random-geometric:5:2", "--seeds", "1..2", "--methods", "SO", "FO3",
                 "--out", str(out)]) == 0
    rows = read_csv(out / "metrics.csv")
    assert len(rows) == 6 and [r["pc"] for r in rows[-2:]] == ["mean", "mean"]


@pytest.mark.parametrize("argv", [
    ["run", "--config", "does/not/exist.json"],
    ["compare", "--config", "gen:ring:4:2", "--methods", "SO"],
    ["compare", "--config", "gen:ring:4:2", "--methods", "SO", "SO"],
    ["compare", "--config", "gen:ring:4:2", "--methods", "SO", "warp"],
    ["sweep", "alpha=0.1:1"],
    ["sweep", "nonsense=0:1:3"],
    ["generate", "ring", "4", "4"],
])
def test_usage_and_config_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + (["--out", str(tmp_path / "x")] if argv[0] != "generate" else [])) == EXIT_CONFIG
    assert capsys.readouterr().err


def test_sweep_single_decision(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "R_j0=10:200:4", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["value", "rho", "t_o", "v_peak", "u_peak", "J_sH", "J_eH", "J_H"]
    rho = [float(r["rho"]) for r in rows]
    assert rho == sorted(rho, reverse=True)
    one = tmp_path / "one"
    assert main(["sweep", "alpha=0.5:2:1", "--set", "form=RHCP1", "R_i0=80", "--out", str(one)]) == 0
    assert len(read_csv(one / "sweep.csv")) == 1


def test_sweep_setup_file(tmp_path):
    setup = tmp_path / "setup.json"
    setup.write_text(json.dumps({"form": "RHCP1", "R_i0": 50.0}))
    out = tmp_path / "s"
    assert main(["sweep", "R_i0=10:100:3", "--config", str(setup), "--out", str(out)]) == 0
    t_o = [float(r["t_o"]) for r in read_csv(out / "sweep.csv")]
    assert t_o == sorted(t_o)


def test_sweep_full_config(short_cfg, tmp_path):
    out = tmp_path / "f"
    assert main(["sweep", "sim.alpha=0.0001:0.01:2", "--config", str(short_cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert float(rows[1]["J_e"]) < float(rows[0]["J_e"])
    assert main(["sweep", "sim.bogus.x=0:1:2", "--config", str(short_cfg), "--out", str(out)]) == EXIT_CONFIG


def test_generate_and_validate(tmp_path, capsys):
    p = tmp_path / "g.json"
    assert main(["generate", "grid", "6", "2", "--seed", "3", "--out", str(p)]) == 0
    assert main(["validate", "--config", str(p), "--canonical"]) == 0
    assert capsys.readouterr().out == p.read_text()
    assert main(["validate", "--config", str(p)]) == 0
    assert capsys.readouterr().out.startswith("ok ")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"targets": []}))
    assert main(["validate", "--config", str(bad)]) == EXIT_CONFIG
