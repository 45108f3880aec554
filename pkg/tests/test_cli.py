import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from strominger_forms.cli import evaluate, main, parse_point
from strominger_forms.suites import Report, Row, SuiteConfig, format_complex, render, run_suite


@pytest.fixture
def specs(tmp_path):
    files = {
        "hopf3": {"family": "hopf", "n": 3},
        "hopf2": {"family": "hopf", "n": 2},
        "quadric": {"family": "quadric", "n": 2, "A": [[[0.1, 0], [0, 0]], [[0, 0], [0, 0]]]},
        "constant": {"family": "constant", "n": 2, "value": 3.0},
        "iwasawa": {"n": 3, "C": [{"j": 3, "i": 1, "k": 2, "re": 1.0, "im": 0.0}], "D": []},
        "abelian": {"catalog": "abelian", "n": 3},
    }
    out = {}
    for name, spec in files.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(spec))
        out[name] = str(p)
    return out


def run_cli(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.mark.parametrize(
    "tokens, expected",
    [(["0", "1", "1"], [0, 1, 1]), (["1+2i", "-3j"], [1 + 2j, -3j]), (["0.5,1i"], [0.5, 1j])],
)
def test_parse_point(tokens, expected):
    np.testing.assert_array_equal(parse_point(tokens), expected)


def test_parse_point_error():
    with pytest.raises(ValueError, match="complex"):
        parse_point(["x"])


def test_format_complex():
    assert format_complex(0.5 - 2j) == "0.5-2.0i"
    assert format_complex(1) == "1.0+0.0i"


def test_eval_strominger_entry(capsys, specs):
    code, out, _ = run_cli(capsys, "eval", "--input", specs["hopf3"], "--z", "0", "1", "1", "--what", "strominger")
    assert code == 0
    entry = next(e for e in json.loads(out)["entries"] if e["index"] == [1, 1, 2, 3])
    assert entry["re"] == pytest.approx(0.5) and entry["im"] == 0


def test_eval_hss(capsys, specs):
    code, out, _ = run_cli(capsys, "eval", "--input", specs["quadric"], "--z", "1", "0", "--what", "hss")
    data = json.loads(out)
    assert code == 0
    assert data["hss"] == pytest.approx(-0.2) and data["hss_closed_form"] == pytest.approx(-0.2)


def test_eval_torsion_of_constant_metric(capsys, specs):
    code, out, _ = run_cli(capsys, "eval", "--input", specs["constant"], "--z", "0.3", "1+1i", "--what", "torsion")
    assert code == 0
    assert all(e["re"] == 0 and e["im"] == 0 for e in json.loads(out)["entries"])


@pytest.mark.parametrize("what", ["eta", "chern", "weyl"])
def test_eval_other_quantities(capsys, specs, what):
    code, out, _ = run_cli(capsys, "eval", "--input", specs["hopf2"], "--z", "1", "1i", "--what", what)
    assert code == 0
    data = json.loads(out)
    if what == "weyl":
        assert abs(complex(*data["W1"])) < 1e-12 and data["sigma"][0] == pytest.approx(3)


def test_eval_lie_structure(capsys, specs):
    code, out, _ = run_cli(capsys, "eval", "--input", specs["iwasawa"], "--what", "hss", "--direction", "1", "0", "1")
    assert code == 0 and json.loads(out)["hss"] == pytest.approx(-0.25)
    with pytest.raises(ValueError, match="not available"):
        evaluate({"catalog": "iwasawa"}, None, "weyl")


def test_eval_errors(capsys, specs, tmp_path):
    code, _, err = run_cli(capsys, "eval", "--input", specs["hopf2"], "--z", "0", "0", "--what", "torsion")
    assert code == 2 and "origin" in err
    code, _, err = run_cli(capsys, "eval", "--input", specs["hopf2"], "--z", "1", "--what", "torsion")
    assert code == 2 and "C^2" in err
    code, _, err = run_cli(capsys, "eval", "--input", specs["hopf2"], "--what", "torsion")
    assert code == 2 and "--z" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  'family': 1}")
    code, _, err = run_cli(capsys, "eval", "--input", str(bad), "--z", "1", "--what", "torsion")
    assert code == 2 and "line 2" in err


def test_run_hopf_suite(capsys):
    code, out, _ = run_cli(capsys, "run", "--suite", "hopf", "--n", "2", "--samples", "100")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert rep["rows"][0]["value"] < 1e-10 and rep["rows"][0]["anchor"]


def test_run_admissible_with_hopf_input(capsys, specs, tmp_path):
    weyl = tmp_path / "weyl.csv"
    code, out, _ = run_cli(capsys, "run", "--suite", "admissible", "--input", specs["hopf2"], "--weyl-out", str(weyl))
    rows = json.loads(out)["rows"]
    assert code == 0
    assert not any(r["check"].endswith("_f_varies") for r in rows)
    table = list(csv.DictReader(io.StringIO(weyl.read_text())))
    assert len(table) == 50 and set(table[0]) >= {"point", "W1", "W2", "W3", "sigma", "max_residual"}


def test_run_lie_suite_on_iwasawa(capsys, specs):
    code, out, _ = run_cli(capsys, "run", "--suite", "lie", "--input", specs["iwasawa"])
    rows = {r["check"]: r for r in json.loads(out)["rows"]}
    assert code == 0
    assert rows["iwasawa_deviation_floor"]["value"] >= 0.25 - 1e-12
    assert rows["iwasawa_hss_e1_e3"]["status"] == "pass"


def test_run_failure_sets_exit_code(capsys, specs):
    code, out, err = run_cli(capsys, "run", "--suite", "hopf", "--n", "3", "--samples", "5", "--tol", "1e-300")
    assert code == 1
    assert json.loads(out)["passed"] is False and "FAIL" in err


def test_run_csv_is_rfc4180(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, _, _ = run_cli(capsys, "run", "--suite", "lie", "--samples", "10", "--format", "csv", "--out", str(out))
    raw = out.read_bytes()
    assert code == 0 and b"\r\n" in raw
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert {r["status"] for r in rows} == {"pass"}


@pytest.mark.parametrize("argv", [["run", "--suite", "hopf", "--samples", "0"], ["run", "--suite", "hopf", "--tol", "-1"]])
def test_run_rejects_bad_config(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2 and "error" in err


def test_suite_config_validation():
    with pytest.raises(ValueError, match="unknown suite"):
        SuiteConfig("nope")
    with pytest.raises(ValueError, match="format"):
        SuiteConfig("hopf", fmt="xml")


def test_row_relations():
    assert Row("a", "", 0.1, 1.0).passed
    assert not Row("a", "", float("nan"), 1.0).passed
    assert Row("a", "", 2.0, 1.0, ">").passed
    assert Row("a", "", 1.0, 1.0, ">=").passed and not Row("a", "", 1.0, 1.0, ">").passed


def test_empty_report_renders():
    rep = Report(SuiteConfig("hopf"))
    assert rep.passed and render(rep, "csv") == ""
    assert json.loads(render(rep, "json"))["rows"] == []


@pytest.mark.parametrize("suite", ["hopf", "pipeline", "conformal", "lie"])
def test_reports_are_byte_identical(suite):
    cfg = SuiteConfig(suite, seed=11, samples=20)
    assert render(run_suite(cfg), "json") == render(run_suite(cfg), "json")
    assert render(run_suite(cfg), "csv") == render(run_suite(cfg), "csv")


def test_console_entry_point(specs):
    proc = subprocess.run(
        [sys.executable, "-m", "strominger_forms.cli", "eval", "--input", specs["abelian"], "--what", "torsion"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["n"] == 3
