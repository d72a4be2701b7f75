import argparse
import csv
import io
import json

import jsonschema
import numpy as np
import pytest

from toralgibbs.cli import (
    CounterexampleConfig,
    emit,
    load_schema,
    main,
    parse_matrix,
    parse_potential,
    parse_t_grid,
    render,
    run_counterexample,
    two_torsion_condition,
)
from toralgibbs.errors import ConditionDegenerate, IoFailure
from toralgibbs.potential import Potential
from toralgibbs.torus import cat_map

COARSE = np.arange(-2.0, 2.01, 0.5)


@pytest.fixture(scope="module")
def default_report():
    return run_counterexample()


@pytest.fixture(scope="module")
def small_cfg():
    return CounterexampleConfig(t_grid=COARSE, orbit_order=12, depth=10)


# -- pipeline --------------------------------------------------------------------------

def test_default_counterexample(default_report):
    r = default_report
    assert r.reproduced and r.reason == ""
    assert r.max_curve_gap <= 5e-3
    w = r.spectrum_witness
    assert w["period"] == 3
    assert w["gap"] == pytest.approx(1.2, abs=1e-9)
    assert r.condition_check == pytest.approx(0.4, abs=1e-12)
    assert len(r.pressure_curve_phi.t_grid) == 81
    assert r.pressure_curve_phi.value_at(1.0) == pytest.approx(0.0, abs=1e-4)


def test_condition_check_values():
    assert two_torsion_condition(Potential.cosine(0.3)) == pytest.approx(0.4)
    assert two_torsion_condition(Potential.const(1.7)) == pytest.approx(0.0, abs=1e-15)


def test_constant_potential_is_degenerate():
    with pytest.raises(ConditionDegenerate):
        run_counterexample(CounterexampleConfig(potential=Potential.const(0.0), t_grid=COARSE))


def test_k_one_is_not_a_counterexample():
    r = run_counterexample(CounterexampleConfig(k=1, t_grid=COARSE, orbit_order=12, depth=10))
    assert not r.reproduced
    np.testing.assert_allclose(r.pressure_curve_phi.values, r.pressure_curve_phi2.values, rtol=0, atol=1e-12)
    assert r.spectrum_witness["period"] is None and "spectra agree" in r.reason


@pytest.mark.parametrize("k", [2, 3, 4])
def test_countable_family(k):
    r = run_counterexample(CounterexampleConfig(k=k, max_period=8, t_grid=COARSE, orbit_order=12, depth=10))
    assert r.reproduced
    assert r.max_curve_gap <= 5e-3
    # M_3 fixes the 2-torsion points, so its first witness is where 3 divides |Fix(L^n)|
    assert r.spectrum_witness["period"] == (8 if k == 3 else 3)


# -- emission ----------------------------------------------------------------------------

def test_json_validates_and_round_trips(default_report, tmp_path):
    path = tmp_path / "report.json"
    text = emit(default_report, "json", path)
    assert path.read_text() == text
    data = json.loads(text)
    jsonschema.validate(data, load_schema())
    assert data["max_curve_gap"] == default_report.max_curve_gap
    assert data["pressure_curve_phi"]["P"] == default_report.pressure_curve_phi.values.tolist()
    assert data["spectrum_witness"]["values_phi"] == default_report.spectrum_witness["values_phi"]
    assert data["verdict"] == "reproduced"


def test_schema_rejects_missing_fields(default_report):
    data = default_report.to_json()
    del data["verdict"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(data, load_schema())


def test_csv_header_and_values(default_report):
    text = render(default_report, "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["t", "P_phi", "P_phi2", "gap"]
    body = np.array(rows[1:], dtype=float)
    assert body.shape == (81, 4)
    np.testing.assert_array_equal(body[:, 1], default_report.pressure_curve_phi.values)
    np.testing.assert_array_equal(body[:, 3], np.abs(body[:, 1] - body[:, 2]))


def test_deterministic_output(small_cfg):
    a = emit(run_counterexample(small_cfg), "json")
    b = emit(run_counterexample(small_cfg), "json")
    assert a == b


def test_io_failure(default_report, tmp_path):
    with pytest.raises(IoFailure):
        emit(default_report, "json", tmp_path / "missing" / "dir" / "r.json")
    with pytest.raises(ValueError):
        render(default_report, "xml")


# -- argument parsing ----------------------------------------------------------------------

def test_parsers(tmp_path):
    assert parse_matrix("1,1,1,0").matrix.tolist() == [[1, 1], [1, 0]]
    L = cat_map()
    assert parse_potential(None, L) == Potential.cosine(0.3)
    assert parse_potential("cos:0.2:0,1", L) == Potential.cosine(0.2, (0, 1))
    assert parse_potential("const:1.5", L) == Potential.const(1.5)
    assert parse_potential("geometric", L).constant < 0
    p = Potential.cosine(0.1, (1, 1))
    assert parse_potential(json.dumps(p.to_json()), L) == p
    f = tmp_path / "p.json"
    f.write_text(json.dumps(p.to_json()))
    assert parse_potential(str(f), L) == p
    with pytest.raises(IoFailure):
        parse_potential(str(tmp_path / "nope.json"), L)
    assert len(parse_t_grid("0:1:0.25")) == 5
    with pytest.raises(argparse.ArgumentTypeError):
        parse_t_grid("1:0:0.1")


# -- main / exit codes -------------------------------------------------------------------

def test_main_counterexample_exit_codes(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["counterexample", "--t-grid=-1:1:0.5", "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "t,P_phi,P_phi2,gap"
    assert main(["counterexample", "--k", "1", "--t-grid=-1:1:0.5", "--depth", "8"]) == 2
    assert main(["counterexample", "--potential", "const:0", "--t-grid=-1:1:0.5"]) == 1
    assert main(["counterexample", "--matrix", "1,1,0,1"]) == 1
    err = capsys.readouterr().err
    assert "not reproduced" in err and "error:" in err


def test_main_pressure_and_curve(tmp_path, capsys):
    assert main(["pressure", "--potential", "const:0", "--method", "ratio", "--order", "14"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["pressure"] == pytest.approx(0.4812118, abs=1e-4)
    assert data["cross_method"] == "transfer_operator"
    out = tmp_path / "curve.csv"
    assert main(["curve", "--t-grid", "0:1:0.5", "--depth", "8", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "P", "method", "order", "residual"]
    assert len(rows) == 4 and rows[1][2] == "transfer_operator" and rows[1][3] == "8"


def test_main_spectrum_and_coding(tmp_path, capsys):
    assert main(["spectrum", "--potential", "cos:1.0", "--max-period", "3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert sorted(data["3"]) == pytest.approx([-1, -1, -1, 3])
    dump = tmp_path / "coding.json"
    assert main(["coding", "--dump", str(dump), "--order", "6"]) == 0
    c = json.loads(dump.read_text())
    assert len(c["rectangles"]) == 13
    assert all(0 <= t - f <= 2 for t, f in c["trace_vs_fix"].values())


def test_main_realize(tmp_path):
    rep = tmp_path / "realize.json"
    assert main(["realize", "--depth", "8", "--order", "4", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert set(data) >= {"livsic_M", "cohomology_residual", "lebesgue_calibration", "expansion", "xi_samples"}
    cal = data["lebesgue_calibration"]
    assert cal["livsic_M_error"] < 1e-3 and cal["cohomology_residual"] < 1e-3
