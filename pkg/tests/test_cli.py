import json
import xml.etree.ElementTree as ET
from collections import defaultdict

import numpy as np
import pytest

from sinsbudget import cli, report
from sinsbudget.sins_model import source_partition
from sinsbudget.trajectory import load_trajectory


def write_scenario(path, imu=None, duration="120 s", kind="static", montecarlo=True, N=200, extra_run=None):
    doc = {
        "name": "small",
        "imu": imu if imu is not None else {
            "init_att_err": ["30 arcsec", "30 arcsec", "3 arcmin"],
            "init_vel_err": ["0.2 m/s", "0.2 m/s", "0 m/s"],
            "gyro_bias": "0.01 deg/h",
            "acc_bias": "100 ug",
            "arw": "0.001 deg/sqrt(h)",
            "vrw": "1 ug/sqrt(Hz)",
        },
        "scenario": {"kind": kind, "lat": "34 deg", "duration": duration},
        "run": {"step": "1 s", **(extra_run or {})},
    }  # fmt: skip
    if montecarlo:
        doc["montecarlo"] = {"N": N, "seed": 42}
    path.write_text(json.dumps(doc, indent=2))
    return path


@pytest.fixture(scope="module")
def bundled_budget(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundled")
    assert cli.main(["budget", "--scenario", "bundled:static_navgrade", "--out", str(out)]) == 0
    return out


def test_bundled_budget_csv_shape(bundled_budget):
    rows = report.read_budget_csv(bundled_budget / "budget.csv")
    assert len(rows) == 34 * 7
    by_output = defaultdict(list)
    for r in rows:
        by_output[r["output"]].append(r)
    assert sorted(by_output) == sorted(["phi_E", "phi_N", "phi_U", "dv_E", "dv_N", "dL", "dlambda"])
    initial = [l for l, _ in source_partition().initial_groups]
    for out, rs in by_output.items():
        assert [r["source"] for r in rs][:28] == initial
        assert sum(float(r["share"]) for r in rs) == pytest.approx(1.0, abs=1e-6)
        assert {r["epoch"] for r in rs} == {"3600.000000"}


def test_bundled_budget_artifacts(bundled_budget):
    text = (bundled_budget / "budget.txt").read_text()
    assert "imu.gyro_bias" in text and "'0.01 deg/h'" in text and "-> 4.84813681e-08 rad/s" in text
    for cls in ("attitude", "velocity", "position"):
        root = ET.parse(bundled_budget / f"budget_{cls}.svg").getroot()
        assert root.tag.endswith("svg")
        bars = [e for e in root.iter() if e.tag.endswith("rect") and e.find("{http://www.w3.org/2000/svg}title") is not None]
        assert len(bars) == 34 * {"attitude": 3, "velocity": 2, "position": 2}[cls]


def test_attitude_only_spec_owns_attitude_variance(tmp_path):
    path = write_scenario(tmp_path / "s.json", imu={"init_att_err": ["30 arcsec", "30 arcsec", "3 arcmin"]})
    assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    rows = report.read_budget_csv(tmp_path / "budget.csv")
    att = {"phi_E", "phi_N", "phi_U"}
    for out in att:
        share = sum(float(r["share"]) for r in rows if r["output"] == out and r["source"] in att)
        assert share == pytest.approx(1.0, abs=1e-9)


def test_budget_intermediate_epochs(tmp_path):
    path = write_scenario(tmp_path / "s.json", extra_run={"report_epochs": ["0 s", "60 s", "120 s"]})
    assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    rows = report.read_budget_csv(tmp_path / "budget.csv")
    assert sorted({r["epoch"] for r in rows}) == ["0.000000", "120.000000", "60.000000"]


def test_budget_csv_is_reproducible(tmp_path):
    path = write_scenario(tmp_path / "s.json")
    for sub in ("a", "b"):
        assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path / sub)]) == 0
    assert (tmp_path / "a" / "budget.csv").read_bytes() == (tmp_path / "b" / "budget.csv").read_bytes()


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "imu": {\n    "gyro_bias": 0.01\n  },\n  "scenario": {}\n}\n')
    assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "bad.json:3: imu.gyro_bias" in err


def test_polar_scenario_exit_code(tmp_path, capsys):
    path = tmp_path / "polar.json"
    doc = {"imu": {"gyro_bias": "0.01 deg/h"}, "scenario": {"lat": "89.99 deg", "duration": "10 s"}}
    path.write_text(json.dumps(doc))
    assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path)]) == 3
    assert "initial_covariance" in capsys.readouterr().err


def test_montecarlo_missing_section(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json", montecarlo=False)
    assert cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    assert "montecarlo" in capsys.readouterr().err


def test_montecarlo_small_n_flags_wide_intervals(tmp_path, caplog):
    path = write_scenario(tmp_path / "s.json", N=2, duration="20 s")
    rc = cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path)])
    assert rc in (0, 1)
    assert "WARNING: N is small" in (tmp_path / "mc_compare.txt").read_text()
    assert "little power" in caplog.text


def test_montecarlo_passes_and_seed_override(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json", N=500, duration="60 s")
    assert cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path / "b"), "--seed", "42"]) == 0
    assert (tmp_path / "a" / "mc_compare.csv").read_bytes() == (tmp_path / "b" / "mc_compare.csv").read_bytes()
    assert cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path / "c"), "--seed", "43"]) in (0, 1)
    assert (tmp_path / "a" / "mc_compare.csv").read_bytes() != (tmp_path / "c" / "mc_compare.csv").read_bytes()
    assert "comparisons passed" in capsys.readouterr().out


def test_bad_seed(tmp_path):
    path = write_scenario(tmp_path / "s.json")
    assert cli.main(["montecarlo", "--scenario", str(path), "--out", str(tmp_path), "--seed", str(2**64)]) == 2


@pytest.mark.parametrize("kind", ["static", "single_axis_rotation"])
def test_trajgen_roundtrip_and_force(tmp_path, kind, capsys):
    path = write_scenario(tmp_path / "s.json", kind=kind, duration="400 s")
    out = tmp_path / "out"
    assert cli.main(["trajgen", "--scenario", str(path), "--out", str(out)]) == 0
    samples = load_trajectory(out / "trajectory.csv")
    assert len(samples) == 401
    if kind == "single_axis_rotation":
        np.testing.assert_allclose(samples[60].cbn, samples[0].cbn, atol=1e-9)  # one full turn
    before = (out / "trajectory.csv").read_bytes()
    assert cli.main(["trajgen", "--scenario", str(path), "--out", str(out)]) == 2
    assert "--force" in capsys.readouterr().err
    assert cli.main(["trajgen", "--scenario", str(path), "--out", str(out), "--force"]) == 0
    assert (out / "trajectory.csv").read_bytes() == before


def test_file_scenario_uses_trajectory(tmp_path):
    path = write_scenario(tmp_path / "gen.json", kind="single_axis_rotation", duration="200 s")
    assert cli.main(["trajgen", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    assert cli.main(["budget", "--scenario", str(path), "--out", str(tmp_path / "direct")]) == 0
    doc = json.loads(path.read_text())
    doc["scenario"] = {"kind": "file", "path": "trajectory.csv", "lat": "34 deg", "duration": "200 s"}
    (tmp_path / "file.json").write_text(json.dumps(doc))
    assert cli.main(["budget", "--scenario", str(tmp_path / "file.json"), "--out", str(tmp_path / "viafile")]) == 0
    a = report.read_budget_csv(tmp_path / "direct" / "budget.csv")
    b = report.read_budget_csv(tmp_path / "viafile" / "budget.csv")
    for ra, rb in zip(a, b):
        assert ra["source"] == rb["source"]
        assert float(rb["sigma"]) == pytest.approx(float(ra["sigma"]), rel=1e-9, abs=1e-15)


def test_missing_required_argument():
    with pytest.raises(SystemExit):
        cli.main(["budget"])
