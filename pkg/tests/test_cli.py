import csv
import json
import subprocess
import sys

import pytest

from nanmac import __version__
from nanmac.cli import main


def rows(path):
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    return lines[0], list(csv.DictReader(lines[1:-1]))


def scenario_file(tmp_path, name="s.json", **raw):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def test_analyze_link(tmp_path):
    out = tmp_path / "link.csv"
    assert main(["analyze", "link", "--out", str(out), "--r-min", "1200", "--r-max", "4500",
                 "--steps", "2"]) == 0
    meta, table = rows(out)
    assert meta == f"# nanmac {__version__} seed=0"
    assert list(table[0]) == ["distance_m", "path_loss_db", "prx_dbw", "snr_db", "rate_bps"]
    assert abs(float(table[0]["prx_dbw"]) + 120.78) < 0.05
    assert float(table[1]["rate_bps"]) > 1e5
    assert b"\r" not in out.read_bytes()


def test_analyze_rejects_single_step(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["analyze", "link", "--out", out, "--steps", "1"]) == 2
    assert main(["analyze", "hidden", "--out", out, "--steps", "1"]) == 2
    assert main(["analyze", "link", "--out", out, "--r-min", "500", "--r-max", "100"]) == 2


def test_analyze_hidden_shape_and_repeatability(tmp_path):
    a, b, lo = (str(tmp_path / n) for n in ("a.csv", "b.csv", "lo.csv"))
    args = ["analyze", "hidden", "--r-min", "1000", "--r-max", "2000", "--steps", "11"]
    assert main(args + ["--out", a]) == 0 and main(args + ["--out", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    col = [float(r["mean_hidden_nodes"]) for r in rows(a)[1]]
    assert all(x <= y for x, y in zip(col, col[1:]))
    assert main(["analyze", "hidden", "--r-min", "200", "--r-max", "990", "--out", lo]) == 0
    assert all(float(r["mean_hidden_nodes"]) == 0 for r in rows(lo)[1])


def test_analyze_uses_config_radio(tmp_path):
    cfg = scenario_file(tmp_path, radio={"tx_power_dbw": 10.0})
    out = str(tmp_path / "l.csv")
    assert main(["analyze", "link", "--config", cfg, "--out", out, "--r-min", "1200",
                 "--r-max", "1300", "--steps", "2"]) == 0
    assert abs(float(rows(out)[1][0]["prx_dbw"]) + 110.78) < 0.05


def test_bad_config_exit_code(tmp_path):
    bad = scenario_file(tmp_path, protocol="dcf", unknown_key=1)
    assert main(["simulate", "--scenario", bad, "--out", str(tmp_path / "r")]) == 2
    assert main(["simulate", "--scenario", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "r")]) == 2


def test_simulate_outputs_repeat_exactly(tmp_path):
    sc = scenario_file(tmp_path, protocol="pcf", duration="5s", topology={"meter_count": 20},
                       traffic=[{"meters": "all", "preset": "billing", "period": "1s"}])
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        assert main(["simulate", "--scenario", sc, "--seed", "9",
                     "--out", str(tmp_path / d / "run")]) == 0
    for suffix in (".summary.json", ".frames.csv", ".cycles.csv"):
        a = (tmp_path / "a" / ("run" + suffix)).read_bytes()
        assert a == (tmp_path / "b" / ("run" + suffix)).read_bytes()
    summary = json.loads((tmp_path / "a" / "run.summary.json").read_text())
    assert summary["meta"] == {"tool": "nanmac", "version": __version__, "seed": 9}
    assert summary["report"]["delivered"] > 0


def test_simulate_empty_cell(tmp_path):
    sc = scenario_file(tmp_path, protocol="dcf", duration="1s")
    prefix = str(tmp_path / "e")
    assert main(["simulate", "--scenario", sc, "--out", prefix]) == 0
    lines = open(prefix + ".frames.csv").read().split("\n")
    assert lines[1] == "meter,class,enqueue_ns,outcome,delay_ns,retries" and lines[2:] == [""]
    assert json.load(open(prefix + ".summary.json"))["report"]["generated"] == 0


def test_duration_flag_overrides(tmp_path):
    sc = scenario_file(tmp_path, protocol="pcf", duration="10s", topology={"meter_count": 3})
    prefix = str(tmp_path / "d")
    assert main(["simulate", "--scenario", sc, "--duration", "200ms", "--out", prefix]) == 0
    starts = [int(r["start_ns"]) for r in rows(prefix + ".cycles.csv")[1]]
    assert starts and max(starts) < 200_000_000


def test_qdcf_reduction_frames_identical(tmp_path):
    base = {"duration": "3s", "seed": 4, "topology": {"meter_count": 15},
            "traffic": [{"meters": "all", "kind": "saturated", "payload_bytes": 60}]}
    a = scenario_file(tmp_path, "a.json", protocol="dcf", **base)
    b = scenario_file(tmp_path, "b.json", protocol="qdcf",
                      qdcf={"contention_factor_q": 1.0, "prohibit_time_ns": 0}, **base)
    assert main(["simulate", "--scenario", a, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--scenario", b, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.frames.csv").read_bytes() == (tmp_path / "b.frames.csv").read_bytes()


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    from nanmac.errors import InvariantViolation
    from nanmac.mac import network

    def broken(self):
        raise InvariantViolation("forced")
    monkeypatch.setattr(network.Network, "_finish", broken)
    sc = scenario_file(tmp_path, protocol="dcf")
    assert main(["simulate", "--scenario", sc, "--out", str(tmp_path / "x")]) == 3


def test_sweep_single_value_matches_simulate(tmp_path):
    sc = scenario_file(tmp_path, protocol="dcf", duration="2s", seed=2,
                       topology={"meter_count": 10},
                       traffic=[{"meters": "all", "preset": "billing", "period": "500ms"}])
    sw = str(tmp_path / "sw.csv")
    assert main(["sweep", "--scenario", sc, "--param", "topology.meter_count",
                 "--values", "10", "--out", sw]) == 0
    row = rows(sw)[1][0]
    prefix = str(tmp_path / "one")
    assert main(["simulate", "--scenario", sc, "--out", prefix]) == 0
    rep = json.load(open(prefix + ".summary.json"))["report"]
    assert int(row["delivered"]) == rep["delivered"]
    assert float(row["collision_ratio"]) == rep["collision_ratio"]


def test_sweep_contention_grows_with_meters(tmp_path):
    sc = scenario_file(tmp_path, protocol="dcf", duration="1s", seed=1,
                       traffic=[{"meters": "all", "kind": "saturated", "payload_bytes": 100}])
    sw = str(tmp_path / "sw.csv")
    assert main(["sweep", "--scenario", sc, "--param", "topology.meter_count",
                 "--values", "100,500,1000", "--out", sw]) == 0
    table = rows(sw)[1]
    assert [r["topology.meter_count"] for r in table] == ["100", "500", "1000"]
    cr = [float(r["collision_ratio"]) for r in table]
    assert cr[0] <= cr[1] <= cr[2]


def test_sweep_unknown_path(tmp_path):
    sc = scenario_file(tmp_path, protocol="dcf")
    assert main(["sweep", "--scenario", sc, "--param", "dcf.cw_mn", "--values", "1",
                 "--out", str(tmp_path / "s.csv")]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nanmac.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
