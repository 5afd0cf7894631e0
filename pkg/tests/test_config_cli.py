import json
import subprocess
import sys

import pytest

from kwlab import __version__
from kwlab.cli import main
from kwlab.config import SCHEMA, defaults, parse_config, parse_lines
from kwlab.errors import BadValue, ParseError, UnknownKey
from kwlab.report import Report


def test_defaults_cover_schema():
    cfg = defaults()
    assert set(cfg.values) == set(SCHEMA)
    assert cfg["model.m"] == 1 and cfg["family.kind"] == "model"
    assert cfg.family.label == "model(m=1)"
    assert cfg.grid.shape == (33, 33, 33)


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment line\n\nmodel.m = 2   # trailing comment\nmodel.m = 3\n"
                 "imposter.w = 0.5+0.1i\nflux.radii = 1, 2 4\n", encoding="utf-8")
    cfg = parse_config(p, ["model.m=0", "run.seed=9"])
    assert cfg["model.m"] == 0
    assert cfg["imposter.w"] == complex(0.5, 0.1)
    assert cfg["flux.radii"] == (1.0, 2.0, 4.0)
    assert cfg["run.seed"] == 9
    assert cfg.explicit["model.m"] == "0"


def test_config_errors():
    with pytest.raises(ParseError) as info:
        parse_lines(["model.m = 1", "this is not a setting"])
    assert info.value.line_no == 2
    with pytest.raises(UnknownKey):
        parse_lines(["model.q = 1"])
    with pytest.raises(BadValue):
        parse_lines(["model.m = -2"])
    with pytest.raises(BadValue):
        parse_lines(["model.m = two"])
    with pytest.raises(BadValue):
        parse_lines(["imposter.w = 2"])
    with pytest.raises(BadValue):
        parse_config(overrides=["grid.t_min=3", "grid.t_max=1"]).grid


def test_echo_is_json_friendly():
    cfg = parse_config(overrides=["imposter.w=0.5i"])
    json.dumps(cfg.echo())
    assert cfg.echo()["imposter.w"] == "0.5j"


def test_report_formats():
    r = Report("x", {"a": 1})
    r.add("ok", True, 1.0, 2.0, "s")
    r.add("bad", False, float("nan"), None)
    r.add("list", "pass", [1.0, 2.5], (3.2, 4.8))
    assert not r.ok
    d = json.loads(r.to_json())
    assert set(d) == {"version", "command", "config", "records"}
    assert d["records"][1] == {"name": "bad", "status": "fail", "value": "nan", "threshold": None,
                               "units": ""}
    lines = r.to_csv().splitlines()
    assert lines[0] == "name,status,value,threshold,units"
    assert lines[3] == "list,pass,1.0 2.5,3.2 4.8,"
    r.stamp()
    assert "timestamp" in json.loads(r.to_json())


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_cli_exit_codes(capsys):
    assert run(["model-eval"], capsys)[0] == 0
    assert run(["model-table", "--set", "model.m=2"], capsys)[0] == 0
    assert run(["asym"], capsys)[0] == 0
    assert run(["ode", "--set", "ode.y0=-1.5"], capsys)[0] == 0
    code, out = run(["flux"], capsys)
    assert code == 1 and '"fail"' in out.out
    assert run([], capsys)[0] == 2
    assert run(["nope"], capsys)[0] == 2
    code, out = run(["ode", "--set", "ode.k=-1"], capsys)
    assert code == 2 and "ode.k" in out.err
    assert run(["ode", "--set", "nokey"], capsys)[0] == 2
    assert run(["ode", "--config", "/nonexistent/file"], capsys)[0] == 2


def test_cli_module_error_becomes_failed_record(capsys):
    code, out = run(["flux", "--set", "family.kind=abelian", "--format", "csv"], capsys)
    assert code == 1
    assert "constraints.set1.phi_nonzero,fail" in out.out


def test_cli_out_dir_and_byte_stability(tmp_path, capsys):
    args = ["solve-w", "--set", "relax.nt=17", "--set", "relax.nrho=17", "--seed", "4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    for name in ("report.json", "solution.csv", "convergence_log.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rep = json.loads((a / "report.json").read_text())
    assert rep["version"] == __version__ and rep["command"] == "solve-w"
    assert rep["config"]["run.seed"] == 4
    assert {r["name"] for r in rep["records"]} == {"uniqueness.sup_u", "uniqueness.sweeps"}
    assert "timestamp" not in rep
    run(args + ["--out", str(a), "--set", "report.timestamp=true"], capsys)
    assert "timestamp" in json.loads((a / "report.json").read_text())


def test_cli_csv_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["model-table", "--out", str(out), "--format", "csv"], capsys)[0] == 0
    assert (out / "report.csv").read_text().startswith("name,status,value,threshold,units")
    header = (out / "model_table.csv").read_text().splitlines()[0]
    assert header == "t,rho,alpha,phi_norm,w,triple_product,closed_form"
    assert run(["ode", "--out", str(out)], capsys)[0] == 0
    assert (out / "trajectory.csv").read_text().startswith("tau,y")


def test_cli_residual_writes_study_table(tmp_path, capsys):
    out = tmp_path / "r"
    code, _ = run(["residual", "--set", "family.kind=imposter", "--set", "grid.nt=17",
                   "--set", "grid.nx=17", "--out", str(out)], capsys)
    assert code == 0
    rows = (out / "residual_study.csv").read_text().splitlines()
    assert rows[0] == "equation,grid_h,max_abs,l2,excluded,ratio_vs_previous"
    assert len(rows) == 1 + 3 * 8


def test_python_dash_m():
    res = subprocess.run([sys.executable, "-m", "kwlab", "asym", "--format", "csv"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("name,status")
