import json

import numpy as np
import pytest

from rwre_boundary.cli import main


def write_config(tmp_path, **overrides):
    cfg = {
        "dimension": 4,
        "alpha": "uniform",
        "eta": {"preset": "two_point"},
        "eps": 0.2,
        "delta": [0.4, 0.3, 0.2, 0.1],
        "n": 4,
        "samples": 200,
        "seed": 5,
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def load(tmp_path, command):
    return json.loads((tmp_path / "out" / f"{command}.json").read_text())


def records_of_kind(doc, kind):
    return [r for r in doc["records"] if r["kind"] == kind]


def test_validate_ok_and_failure(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["validate", "--config", str(cfg)]) == 0
    doc = load(tmp_path, "validate")
    assert doc["records"][0]["ok"] is True
    # singleton support fails with exit code 2
    r = [1.0, 1, 1, 1, -1, -1, -1, -1]
    bad = write_config(tmp_path, eta={"support": [r, r], "weights": [0.5, 0.5]})
    assert main(["validate", "--config", str(bad)]) == 2
    doc = load(tmp_path, "validate")
    assert doc["records"][0]["support_not_singleton"] is False


def test_rate_records_and_bad_delta(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["rate", "--config", str(cfg), "--no-plot"]) == 0
    doc = load(tmp_path, "rate")
    summary = records_of_kind(doc, "face_summary")[0]
    assert summary["min_value"] == pytest.approx(np.log(2))
    tilt = records_of_kind(doc, "legendre_sup")[0]
    rate = records_of_kind(doc, "annealed_rate")[0]
    assert tilt["attained"] is True
    assert tilt["value"] == pytest.approx(rate["value"], abs=1e-8)
    bad = write_config(tmp_path, delta=[0.5, 0.5, 0.5, 0.5])
    assert main(["rate", "--config", str(bad), "--no-plot"]) == 2


def test_rate_facet_flagged(tmp_path):
    cfg = write_config(tmp_path, delta=[0.5, 0.5, 0.0, 0.0])
    assert main(["rate", "--config", str(cfg), "--no-plot"]) == 0
    tilt = records_of_kind(load(tmp_path, "rate"), "legendre_sup")[0]
    assert tilt["attained"] is False
    assert tilt["theta"] is None


def test_exact_records(tmp_path):
    cfg = write_config(tmp_path, eps=0.0, theta=[0.2, -0.1, 0.3])
    assert main(["exact", "--config", str(cfg), "--quantity", "partition"]) == 0
    doc = load(tmp_path, "exact")
    part = records_of_kind(doc, "partition")[0]
    assert abs(part["log_value"]) <= 1e-12
    cfg = write_config(tmp_path, eps=0.3, n=5)
    assert main(["exact", "--config", str(cfg), "--cross-check"]) == 0
    doc = load(tmp_path, "exact")
    for kind in ("quenched_prob", "partition"):
        assert records_of_kind(doc, kind)[0]["oracle"] == "match"
    for rec in doc["records"]:
        assert "config_hash" in rec and "seed" in rec


def test_green_records_and_warnings(tmp_path):
    cfg = write_config(tmp_path, terms_limit=40)
    assert main(["green", "--config", str(cfg), "--no-plot"]) == 0
    doc = load(tmp_path, "green")
    green = records_of_kind(doc, "green")[0]
    assert green["partial_sum"] > 1.0 and green["divergence_warning"] is False
    assert records_of_kind(doc, "l2_threshold")[0]["value"] == pytest.approx(
        1.0 / green["partial_sum"])
    assert records_of_kind(doc, "khasminskii")[0]["bound"] is not None
    assert records_of_kind(doc, "fourier_bound")[0]["bound"] >= green["partial_sum"]
    assert (tmp_path / "out" / "green_terms.csv").exists()
    # high disorder: the L^2 bound is inapplicable, reported not raised
    cfg = write_config(tmp_path, eps=0.95, terms_limit=40)
    assert main(["green", "--config", str(cfg), "--no-plot"]) == 0
    khas = records_of_kind(load(tmp_path, "green"), "khasminskii")[0]
    assert khas["bound"] is None and "inapplicable" in khas["note"]


def test_green_low_dimension_warning(tmp_path):
    cfg = write_config(tmp_path, dimension=2, delta=[0.6, 0.4], terms_limit=30)
    assert main(["green", "--config", str(cfg), "--no-plot"]) == 0
    doc = load(tmp_path, "green")
    assert records_of_kind(doc, "warning")
    assert records_of_kind(doc, "green")[0]["divergence_warning"] is True
    assert not records_of_kind(doc, "fourier_bound")


def test_green_budget_exit_code(tmp_path):
    cfg = write_config(tmp_path, terms_limit=5000)
    assert main(["green", "--config", str(cfg), "--no-plot", "--budget-mb", "0.001"]) == 3


def test_phase_outputs(tmp_path):
    cfg = write_config(tmp_path, n_list=[2, 3], eps_grid=[0.0, 0.3, 0.6], samples=150)
    assert main(["phase", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("phase.json", "phase.csv", "phase_long.csv", "phase_scan.json",
                 "phase.png"):
        assert (out / name).exists()
    table = json.loads((out / "phase_scan.json").read_text())
    assert table["values"][0][0] == 0.0 and table["values"][1][0] == 0.0
    doc = load(tmp_path, "phase")
    bracket = records_of_kind(doc, "eps_c_bracket")[0]
    assert bracket["label"] == "finite-n surrogate"
    assert records_of_kind(doc, "lipschitz")[0]["c_hat"]


def test_simulate_outputs(tmp_path):
    cfg = write_config(tmp_path, replicas=500, n=6)
    assert main(["simulate", "--config", str(cfg), "--record-paths"]) == 0
    doc = load(tmp_path, "simulate")
    rec = records_of_kind(doc, "simulate_summary")[0]
    assert 0 < rec["face_event_rate"] < 1
    assert rec["stderr"] > 0
    lines = (tmp_path / "out" / "trajectories.csv").read_text().strip().splitlines()
    assert lines[0] == "replica,step,x1,x2,x3,x4"
    assert len(lines) == 1 + 500 * 7


def test_csv_format_emission(tmp_path):
    cfg = write_config(tmp_path, format="csv")
    assert main(["rate", "--config", str(cfg), "--no-plot"]) == 0
    text = (tmp_path / "out" / "rate.csv").read_text()
    assert text.splitlines()[0].split(",")[0] == "attained"
    assert len(text.strip().splitlines()) == 4
