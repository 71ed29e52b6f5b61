import csv
import io
import json
import math
import subprocess
import sys

import pytest

from renormlab import cli
from renormlab.annulus import AnnulusLift

GAMMA = (math.sqrt(5) - 1) / 2


def run(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), buf)
    return code, json.loads(buf.getvalue())


def test_cf_golden_prefix():
    code, out = run("cf", "--value", "0.6180339887", "--depth", "8", "--K", "1")
    assert code == 0
    assert out["terms"] == [1] * 8
    assert out["bounded_type"] is True


def test_cf_exact():
    code, out = run("cf", "--value", "0.4")
    assert code == 0
    assert out["terms"] == [2, 2]
    assert out["exact"] is True
    assert out["convergents"][-1] == [2, 5]


def test_cf_alpha_token():
    code, out = run("cf", "--alpha", "silver", "--depth", "5")
    assert code == 0
    assert out["terms"] == [2] * 5


def test_cf_domain_error():
    code, out = run("cf", "--value", "1.5")
    assert code == 2
    assert out["kind"] == "domain"
    assert "error" in out


def test_rho_map_file(tmp_path):
    path = tmp_path / "rot.json"
    path.write_text(AnnulusLift.rotation(GAMMA, 8).dumps())
    code, out = run("rho", "--map", str(path))
    assert code == 0
    assert abs(out["value"] - GAMMA) <= 1e-12
    assert out["prefix"][:10] == [1] * 10


def test_rho_arnold_locked():
    code, out = run("rho", "--family", "arnold", "--t", "0", "--a", "0.3")
    assert code == 0
    assert out["value"] == 0.0
    assert out["prefix"] == []


@pytest.mark.parametrize("acc", ["1e-8", "1e-11"])
def test_rho_accuracy_flag(acc):
    code, out = run("rho", "--family", "arnold", "--t", "0.6", "--a", "0.05", "--accuracy", acc)
    assert code == 0
    assert out["error_bound"] <= float(acc)


def test_rho_orbit_csv(tmp_path):
    path = tmp_path / "orbit.csv"
    code, _ = run("rho", "--family", "rotation", "--t", "0.3", "--orbit-length", "10",
                  "--plot-data", str(path))
    assert code == 0
    assert len(list(csv.reader(open(path)))) == 11


def test_renorm_defects(tmp_path):
    path = tmp_path / "defects.csv"
    code, out = run("renorm", "--family", "rotation", "--t", repr(GAMMA), "--modes", "8",
                    "--levels", "4", "--plot-data", str(path))
    assert code == 0
    assert len(out["levels"]) == 4
    assert max(row["affinity_defect"] for row in out["levels"]) < 1e-12
    rows = list(csv.DictReader(open(path)))
    assert [int(r["k"]) for r in rows] == [1, 2, 3, 4]


def test_spectrum_golden(tmp_path):
    path = tmp_path / "spectrum.csv"
    code, out = run("spectrum", "--alpha", "golden", "--modes", "16", "--steps", "2",
                    "--plot-data", str(path))
    assert code == 0
    assert out["unstable_count"] == 1
    assert out["moduli"][0] == pytest.approx(GAMMA ** -4, rel=0.05)
    assert len(list(csv.DictReader(open(path)))) == 33


def test_linearize_arnold(tmp_path):
    path = tmp_path / "phi.csv"
    code, out = run("linearize", "--family", "arnold", "--a", "0.05", "--alpha", "golden",
                    "--plot-data", str(path))
    assert code == 0
    assert out["residual_at_height"] <= 1e-8
    assert out["shoot"]["t_star"] == pytest.approx(0.618, abs=1e-3)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 256
    assert set(rows[0]) == {"theta", "re_phi", "im_phi"}


def test_shoot_arnold(tmp_path):
    path = tmp_path / "chart.csv"
    code, out = run("shoot", "--family", "arnold", "--a", "0.05", "--alpha", "golden",
                    "--bracket", "0.55", "0.70", "--chart-modes", "1", "--plot-data", str(path))
    assert code == 0
    assert out["t_star"] == pytest.approx(0.6179953548645224, abs=1e-10)
    assert len(list(csv.DictReader(open(path)))) == 2


def test_shoot_parallel_chart_matches_serial(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for jobs, path in zip(("1", "2"), paths):
        code, _ = run("shoot", "--family", "arnold", "--a", "0.05", "--chart-modes", "2",
                      "--jobs", jobs, "--plot-data", str(path))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_shoot_no_crossing_is_numerical_failure():
    code, out = run("shoot", "--family", "arnold", "--a", "0.05", "--bracket", "0.1", "0.2")
    assert code == 3
    assert out["kind"] == "numerical"
    assert out["error"] == "NoCrossing"


@pytest.mark.parametrize("argv", [
    ("rho", "--map", "/nonexistent/map.json"),
    ("rho", "--family", "arnold", "--t", "0.5", "--eps", "-0.1"),
    ("spectrum", "--fd-step", "0"),
    ("linearize", "--family", "arnold", "--tolerance", "0"),
    ("renorm", "--family", "rotation", "--plot-data", "/nonexistent/dir/out.csv"),
    ("herman", "--config", "/nonexistent/family.json"),
    ("shoot", "--alpha", "0.5"),
])
def test_config_errors_exit_2(argv):
    code, out = run(*argv)
    assert code == 2
    assert out["kind"] == "domain"


def test_bad_map_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, out = run("rho", "--map", str(path))
    assert code == 2


def test_herman_failure_has_json(tmp_path):
    cfg = tmp_path / "family.json"
    cfg.write_text(json.dumps({"params": {"t": 0.3}, "slice": {"param": "a", "bracket": [0.0, 0.5]}}))
    code, out = run("herman", "--config", str(cfg))
    assert code == 3
    assert out["error"] == "NoCrossing"


@pytest.fixture(scope="module")
def herman_run(tmp_path_factory):
    path = tmp_path_factory.mktemp("herman") / "attractor.csv"
    code, out = run("herman", "--plot-data", str(path))
    return code, out, path


def test_herman_default(herman_run):
    code, out, path = herman_run
    assert code == 0
    assert out["certificate"]["passes"] is True
    assert out["certificate"]["residual"] <= 1e-6
    assert out["shoot"]["bracket_width"] <= 1e-10
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 4096
    assert set(rows[0]) == {"j", "re_z", "im_z", "re_w", "im_w"}


@pytest.mark.parametrize("argv", [
    ("cf", "--alpha", "golden"),
    ("rho", "--family", "arnold", "--t", "0.6", "--a", "0.05"),
    ("renorm", "--family", "arnold", "--t", "0.6179953548645224", "--levels", "4"),
    ("spectrum", "--modes", "6", "--steps", "1"),
])
def test_outputs_bit_identical(argv):
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        cli.main(list(argv), buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "renormlab", "cf", "--value", "0.4"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert json.loads(res.stdout)["terms"] == [2, 2]
    res = subprocess.run([sys.executable, "-m", "renormlab", "cf", "--value", "1.5"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 2
    assert "error" in json.loads(res.stdout)
