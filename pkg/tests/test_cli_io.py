import csv
import io
import json
import re
import subprocess
import sys

import numpy as np
import pytest

from rankme.asymptotics import AsymptoticSummary, summarize
from rankme.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from rankme.config import RunConfig, parse_config
from rankme.distributions import Distribution
from rankme.errors import ConfigError, MalformedCsv
from rankme.estimators import EstimateResult, r_estimate
from rankme.io import read_csv, read_csv_text, read_report, round_sig, write_report
from rankme.rankcore import Sample
from rankme.simulation import MonteCarloReport, run_experiment, spec_from_literals
from rankme.tables import LINE_V_LAWS, reproduce_table

# -- config -------------------------------------------------------------------------


def test_minimal_estimate_config():
    cfg = parse_config('command = "estimate"\ninput = "data.csv"\nestimator = "r"\n')
    assert cfg.command == "estimate" and cfg.input == "data.csv" and cfg.estimator == "r"
    assert cfg.seed == 15 and cfg.reps == 2000


def test_full_simulate_config():
    text = """
command = "simulate"
seed = 7
reps = 300
estimators = ["r", "l1"]
score = "vdw"

[scenario]
n = 50
beta = [2.0]
v = "normal(0,2)"
design = "deterministic"
"""
    cfg = parse_config(text)
    spec = cfg.scenario.to_spec()
    assert spec.v_law == Distribution("normal", (0.0, 2.0))
    assert spec.v_law.variance() == pytest.approx(4.0)
    assert spec.design_mode == "deterministic" and cfg.estimators == ("r", "l1")


@pytest.mark.parametrize(
    "text, field",
    [
        ("reps = 0\n", "reps"),
        ("reps = 1.5\n", "reps"),
        ("seed = -1\n", "seed"),
        ("jobs = 0\n", "jobs"),
        ('score = "savage"\n', "score"),
        ('estimators = ["r", "ols"]\n', "estimators"),
        ('table = "t9"\n', "table"),
        ('format = "xml"\n', "format"),
        ("[scenario]\nn = 2\n", "scenario.n"),
        ('[scenario]\nv = "gamma(2)"\n', "scenario"),
        ('[scenario]\ndesign = "fixed"\n', "scenario.design"),
        ('[diag]\nkind = "power"\n', "diag.kind"),
        ("[diag]\nns = [100, 2]\n", "diag.ns"),
    ],
)
def test_config_field_errors(text, field):
    with pytest.raises(ConfigError, match=re.escape(field)):
        parse_config(text)


@pytest.mark.parametrize("text", ["repz = 10\n", "[scenario]\nbeta0x = 1\n", "[diag]\nkinds = 1\n", "[extra]\na = 1\n"])
def test_config_strict_unknown_keys(text):
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(text)


def test_config_syntax_error_has_position():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('seed = 1\nreps = = 3\n')


def test_config_hash_ignores_output_and_jobs():
    a = parse_config("seed = 3\n")
    assert a.hash() == a.with_overrides(out="x.json", jobs=4, format="csv").hash()
    assert a.hash() != a.with_overrides(seed=4).hash()
    assert re.fullmatch(r"[0-9a-f]{16}", a.hash())


def test_config_zero_law_means_none():
    cfg = parse_config("[scenario]\nv = 0\n")
    assert cfg.scenario.to_spec().v_law is None


# -- CSV input -----------------------------------------------------------------------


def test_read_csv_three_rows(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,w1\n1,0\n2,1\n4,2\n")
    s = read_csv(path)
    assert s.n == 3 and s.p == 1 and s.latent is None
    np.testing.assert_array_equal(s.ystar, [1, 2, 4])


def test_read_csv_scientific_notation():
    s = read_csv_text("w1,y\n1e-3,1\n2,2\n3,5\n")
    assert s.W[0, 0] == 0.001


def test_read_csv_column_order_and_p2():
    s = read_csv_text("w2,y,w1\n1,10,4\n2,20,5\n3,31,6\n0,1,1\n")
    np.testing.assert_array_equal(s.W[0], [4, 1])


@pytest.mark.parametrize(
    "text, msg",
    [
        ("x,w1\n1,2\n", "'y'"),
        ("y,w1\n1,2\n2,x\n3,4\n", "row 3"),
        ("y,w1\n1,2\n2\n3,4\n", "row 3"),
        ("y,w1\n1,2\n2,nan\n3,4\n", "non-finite"),
        ("y,w1\n1,2\n2,inf\n3,4\n", "non-finite"),
        ("y,w2\n1,2\n2,3\n3,4\n", "w1"),
        ("y,z\n1,2\n", "unexpected column"),
        ("y,w1\n1,2\n2,3\n", "at least 3"),
        ("", "empty"),
    ],
)
def test_read_csv_malformed(text, msg):
    with pytest.raises(MalformedCsv, match=re.escape(msg)):
        read_csv_text(text)


# -- reports -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def mc_report():
    spec = spec_from_literals(30, 2.0, "logistic(0,1)", "uniform(-3,9)", v="uniform(-3,9)")
    return run_experiment(spec, ("r", "ls"), reps=20, seed=5)


def test_json_byte_identical(mc_report):
    assert write_report(mc_report) == write_report(mc_report)


def test_json_round_trip(mc_report):
    back = read_report(write_report(mc_report))
    assert isinstance(back, MonteCarloReport)
    assert back.as_dict() == mc_report.as_dict()
    assert write_report(back) == write_report(mc_report)


def test_json_cells_rounded(mc_report):
    doc = json.loads(write_report(mc_report))
    cell = doc["cells"]["estimators"]["r"]["bias"][0]
    raw = doc["raw"]["estimators"]["r"]["bias"][0]
    assert cell == float(f"{raw:.6g}")
    assert list(doc) == sorted(doc)


def test_round_sig():
    assert round_sig(1.23456789) == 1.23457
    assert round_sig({"a": [0.000123456789, 3]}) == {"a": [0.000123457, 3]}
    assert round_sig(float("nan")) != round_sig(float("nan"))


def test_asymptotic_and_estimate_round_trip():
    summ = summarize([[12.0]], [[12.0]], [2.0], Distribution("logistic", (0.0, 1.0)))
    back = read_report(write_report(summ))
    assert isinstance(back, AsymptoticSummary) and back.bias[0] == summ.bias[0]
    r = np.random.default_rng(0)
    w = r.normal(size=20)
    est = r_estimate(Sample(w, 2 * w + r.logistic(size=20)))
    back = read_report(write_report(est))
    assert isinstance(back, EstimateResult) and back.beta_hat[0] == est.beta_hat[0]


def test_t1_csv_one_row_per_cell():
    reports = reproduce_table("t1", reps=100, seed=15, ns=(20, 50))
    rows = list(csv.DictReader(io.StringIO(write_report(reports, "csv").decode())))
    assert len(rows) == len(LINE_V_LAWS) * 2
    cells = {(row["v"], row["n"]) for row in rows}
    assert len(cells) == len(rows)
    first = rows[0]
    assert first["table"] == "t1" and first["estimator"] == "r" and first["theoretical_bias"] == "0"


def test_asymptotic_csv_layout():
    summ = summarize([[12.0]], [[0.0]], [2.0], Distribution("logistic", (0.0, 1.0)))
    text = write_report(summ, "csv").decode()
    assert text.splitlines() == ["coef,bias,attenuation_diag,asym_var", "1,0,1,0.25"]


# -- CLI ---------------------------------------------------------------------------


def run_cli(args, capsysbinary):
    code = main(args)
    out = capsysbinary.readouterr()
    return code, out.out, out.err.decode()


def test_cli_estimate(tmp_path, capsysbinary):
    path = tmp_path / "d.csv"
    r = np.random.default_rng(1)
    w = r.uniform(-3, 9, 40)
    y = 1 + 2 * w + r.logistic(size=40)
    path.write_text("y,w1\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(y, w)))
    code, out, err = run_cli(["estimate", "--input", str(path), "--estimator", "l1"], capsysbinary)
    assert code == EXIT_OK
    assert re.search(r"seed=15 config_hash=[0-9a-f]{16}", err)
    doc = json.loads(out)
    assert doc["kind"] == "estimate" and abs(doc["raw"]["beta_hat"][0] - 2) < 0.3


def test_cli_asym_table(capsysbinary):
    code, out, _ = run_cli(["asym", "--table", "t1"], capsysbinary)
    assert code == EXIT_OK
    rows = json.loads(out)["raw"]["rows"]
    got = [round(row["bias"][0], 3) for row in rows]
    assert got == [0.0, -0.296, -0.72, -1.0, -0.154, -0.5, -0.857]


def test_cli_simulate_out_csv(tmp_path, capsysbinary):
    cfg = tmp_path / "run.toml"
    cfg.write_text('command = "simulate"\nestimators = ["ls"]\n[scenario]\nn = 20\n')
    out = tmp_path / "rep.csv"
    code, _, err = run_cli(["simulate", "--config", str(cfg), "--reps", "10", "--out", str(out)], capsysbinary)
    assert code == EXIT_OK
    assert out.read_text().startswith("table,scenario_id,")
    again = tmp_path / "rep2.csv"
    seed_hash = re.search(r"seed=(\d+) config_hash=(\w+)", err).groups()
    code, _, err2 = run_cli(["simulate", "--config", str(cfg), "--reps", "10", "--seed", seed_hash[0], "--out", str(again)], capsysbinary)
    assert re.search(r"seed=(\d+) config_hash=(\w+)", err2).groups() == seed_hash
    assert again.read_bytes() == out.read_bytes()


def test_cli_diag_fisher(capsysbinary):
    code, out, _ = run_cli(["diag", "fisher"], capsysbinary)
    assert code == EXIT_OK
    assert json.loads(out)["raw"]["fisher_information"] == pytest.approx(1 / 3, abs=1e-6)


@pytest.mark.parametrize(
    "args",
    [
        ["simulate", "--reps", "0"],
        ["simulate", "--score", "savage"],
        ["table", "--id", "t9"],
        ["estimate"],
        ["estimate", "--input", "/nonexistent/file.csv"],
        ["nonsense"],
    ],
)
def test_cli_config_errors_exit_2(args, capsysbinary):
    with pytest.raises(SystemExit) as exc_info:
        code = main(args)
        raise SystemExit(code)
    assert exc_info.value.code == EXIT_CONFIG


def test_cli_bad_config_file(tmp_path, capsysbinary):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("reps = 10\nbogus = 1\n")
    code, _, err = run_cli(["simulate", "--config", str(cfg)], capsysbinary)
    assert code == EXIT_CONFIG and "bogus" in err


def test_cli_malformed_csv_exit_2(tmp_path, capsysbinary):
    path = tmp_path / "bad.csv"
    path.write_text("y,w1\n1,2\n2,abc\n3,4\n")
    code, _, err = run_cli(["estimate", "--input", str(path)], capsysbinary)
    assert code == EXIT_CONFIG and "row 3" in err


def test_cli_runtime_error_exit_3(tmp_path, capsysbinary):
    # a heavy-tailed regressor law has no theoretical column
    cfg = tmp_path / "c.toml"
    cfg.write_text('[scenario]\nx = "cauchy(0,1)"\n')
    code, _, err = run_cli(["asym", "--config", str(cfg)], capsysbinary)
    assert code == EXIT_RUNTIME and "UnsupportedLaw" in err


def test_cli_runtime_error_degenerate_design(tmp_path, capsysbinary):
    path = tmp_path / "flat.csv"
    path.write_text("y,w1\n1,2\n2,2\n3,2\n4,2\n")
    code, _, _ = run_cli(["estimate", "--input", str(path)], capsysbinary)
    assert code == EXIT_RUNTIME


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "rankme.cli", "asym"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "config_hash=" in proc.stderr
    assert json.loads(proc.stdout)["kind"] == "asymptotic"


def test_default_run_config_valid():
    RunConfig().with_overrides()


def test_cli_csv_unavailable_for_diagnostics(capsysbinary):
    code, _, err = run_cli(["diag", "fisher", "--format", "csv"], capsysbinary)
    assert code == EXIT_CONFIG and "no CSV layout" in err
