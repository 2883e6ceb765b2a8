import json
import math
import subprocess
import sys

import pytest

from vcprobe.bounds import classical_risk_bound, estimated_risk_bound
from vcprobe.cli import main
from vcprobe.report import resolve_config, validate_report
from vcprobe.simulation import XiSamples

INTERVAL = {"family": {"name": "interval1d"}, "m": 8, "grid": [4, 8, 16, 32], "master_seed": 3}
SHATTER = {"family": {"name": "shatter"}, "m": 3, "grid": [5, 10, 20], "p": 2}


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_is_reproducible(tmp_path, capsys):
    cfg = write_config(tmp_path, INTERVAL)
    code, first, _ = run(capsys, "estimate", "--config", cfg, "--out", str(tmp_path / "a"))
    assert code == 0
    _, second, _ = run(capsys, "estimate", "--config", cfg)
    assert first == second
    assert (tmp_path / "a" / "report.json").read_text() == first
    report = json.loads(first)
    validate_report(report)
    assert set(report) == {"config", "xi", "fit", "constants", "deviation", "varphi", "version"}


def test_embedded_config_reproduces_report(tmp_path, capsys):
    _, first, _ = run(capsys, "estimate", "--config", write_config(tmp_path, INTERVAL))
    embedded = json.loads(first)["config"]
    _, again, _ = run(capsys, "estimate", "--config", write_config(tmp_path, embedded, "echo.json"))
    assert again == first


def test_estimate_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    run(capsys, "estimate", "--config", write_config(tmp_path, INTERVAL), "--out", str(out))
    report = json.loads((out / "report.json").read_text())
    xi = XiSamples.from_csv((out / "samples.csv").read_text())
    assert [s["mean"] for s in report["xi"]["summary"]] == pytest.approx(list(xi.means), abs=1e-15)
    curve = (out / "curve.csv").read_text().splitlines()
    assert curve[0] == "n,xi,phi,residual" and len(curve) == 5
    timing = json.loads((out / "timing.json").read_text())
    assert timing["wall_clock_seconds"] > 0
    assert report["deviation"]["delta"] == pytest.approx(1.05 * report["deviation"]["delta_min"])


def test_overrides_and_csv_format(tmp_path, capsys):
    cfg = write_config(tmp_path, INTERVAL)
    code, out, _ = run(capsys, "estimate", "--config", cfg, "--m", "4", "--grid", "3,6,9",
                       "--format", "csv")
    assert code == 0
    assert [line.split(",")[0] for line in out.splitlines()] == ["n", "3", "6", "9"]


def test_shatter_saturates_with_warning(tmp_path, capsys, caplog):
    code, out, _ = run(capsys, "estimate", "--config", write_config(tmp_path, SHATTER), "--M", "30")
    report = json.loads(out)
    assert code == 0
    assert report["fit"]["h_hat"] == 30
    assert report["fit"]["boundary_flag"]
    assert any("boundary" in w for w in report["fit"]["warnings"])
    assert any("boundary" in r.message for r in caplog.records)
    assert all(s["mean"] == 1.0 for s in report["xi"]["summary"])


def test_missing_m_is_a_schema_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"family": {"name": "interval1d"}})
    code, _, err = run(capsys, "estimate", "--config", cfg)
    assert code == 2
    assert "'m'" in err


@pytest.mark.parametrize("bad", [{"family": {"name": "forest"}, "m": 3},
                                 {"family": {"name": "interval1d"}, "m": 3, "grid": [5]},
                                 {"family": {"name": "interval1d"}, "m": 3, "colour": "red"},
                                 {"family": {"name": "interval1d"}, "m": 3, "delta_factor": 1.0}])
def test_bad_configs_exit_2(tmp_path, capsys, bad):
    code, _, err = run(capsys, "estimate", "--config", write_config(tmp_path, bad))
    assert code == 2 and err.startswith("error:")


def test_malformed_config_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert run(capsys, "estimate", "--config", str(path))[0] == 2


def test_resolve_config_materialises_defaults():
    cfg = resolve_config({"family": {"name": "halfspace", "p": 3}, "m": 5})
    assert cfg["p"] == 3 and cfg["family"]["restarts"] == 32 and cfg["family"]["epochs"] == 200
    assert cfg["grid"][0] == 5 and cfg["grid"][-1] == 300 and cfg["k"] == 10
    assert cfg["delta_factor"] == 1.05


def test_simulate_and_fit_round_trip(tmp_path, capsys):
    out = tmp_path / "sim"
    code, _, _ = run(capsys, "simulate", "--config", write_config(tmp_path, INTERVAL), "--out", str(out))
    assert code == 0
    code, text, _ = run(capsys, "fit", "--samples", str(out / "samples.csv"))
    fit = json.loads(text)
    _, est, _ = run(capsys, "estimate", "--config", write_config(tmp_path, INTERVAL))
    assert fit["h_hat"] == json.loads(est)["fit"]["h_hat"]


def test_fit_rejects_bad_samples(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text("n,rep,xi,train_risk\n4,0,abc,0\n")
    assert run(capsys, "fit", "--samples", str(path))[0] == 2


def test_bound_vacuous_marker(capsys):
    code, out, _ = run(capsys, "bound", "--h-hat", "2", "--delta", "1", "--varphi", "1",
                       "--n", "50", "--rho", "1")
    res = json.loads(out)
    assert code == 0 and res["vacuous"] is True and res["estimated"]["bound"] == 1.0


def test_bound_reduces_to_classical(capsys):
    # h_hat + delta = 1 with no conceded mass is the known-dimension bound
    code, out, _ = run(capsys, "bound", "--h-hat", "0.5", "--delta", "0.5", "--varphi", "0",
                       "--n", "50", "--rho", "1", "--true-h", "1")
    res = json.loads(out)
    assert res["estimated"]["bound"] == classical_risk_bound(1, 50, 1)
    assert res["classical"]["bound"] == classical_risk_bound(1, 50, 1)
    assert math.isclose(res["estimated"]["bound"], 2.097154265345386e-19, rel_tol=1e-12)


def test_bound_target_round_trip(capsys):
    code, out, _ = run(capsys, "bound", "--h-hat", "3", "--delta", "1", "--varphi", "0.01",
                       "--n", "1000", "--target", "0.05")
    res = json.loads(out)
    rho = res["estimated"]["rho"]
    assert estimated_risk_bound(3, 1, 1000, rho, 0.01).bound <= 0.05
    code, _, err = run(capsys, "bound", "--h-hat", "3", "--delta", "1", "--varphi", "0.1",
                       "--n", "1000", "--target", "0.05")
    assert code == 3 and "varphi" in err


def test_bound_from_report(tmp_path, capsys):
    out = tmp_path / "r"
    run(capsys, "estimate", "--config", write_config(tmp_path, INTERVAL), "--out", str(out))
    code, text, _ = run(capsys, "bound", "--report", str(out / "report.json"), "--n", "500", "--rho", "0.3")
    report = json.loads((out / "report.json").read_text())
    assert code == 0
    assert json.loads(text)["estimated"]["h_hat"] == report["fit"]["h_hat"]
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(capsys, "bound", "--report", str(bad), "--n", "5", "--rho", "1")[0] == 2


def test_sweep_shape_and_shatter_variance(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--config", write_config(tmp_path, INTERVAL), "-R", "5")
    res = json.loads(out)
    assert code == 0 and len(res["h_hats"]) == 5 and len(set(res["seeds"])) == 5
    assert res["exceed_frequency"] <= res["bound"]["prob"]
    _, out, _ = run(capsys, "sweep", "--config", write_config(tmp_path, SHATTER), "-R", "3")
    assert json.loads(out)["std"] == 0


def test_constants_dump(capsys):
    code, first, _ = run(capsys, "constants", "--grid", "10,20,30,40,50,60,70,80,90,100", "--M", "50")
    d = json.loads(first)
    assert code == 0 and d["c3"] == 2304
    assert d["c2"] <= d["c_prime"]
    assert "c1_closed_form" in d and d["c1_discrepancy_reported"]
    assert run(capsys, "constants", "--grid", "10,20,30,40,50,60,70,80,90,100", "--M", "50")[1] == first


def test_constants_degenerate(capsys):
    code, _, err = run(capsys, "constants", "--grid", "1,10", "--h-lo", "3")
    assert code == 3 and "n=1" in err


def test_console_script_exit_code(tmp_path):
    cfg = write_config(tmp_path, {"family": {"name": "interval1d"}})
    proc = subprocess.run([sys.executable, "-m", "vcprobe.cli", "estimate", "--config", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "'m'" in proc.stderr
