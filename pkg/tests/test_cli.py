import csv
import dataclasses
import re
from pathlib import Path

import numpy as np
import pytest

from landscape_lab import pde_grid
from landscape_lab.cli import main, shipped_configs
from landscape_lab.config import JobConfig, parse_config, parse_string, to_dict, write_config
from landscape_lab.critical import CriticalClass, CriticalPoint
from landscape_lab.errors import ConfigParseError, ConfigValidationError
from landscape_lab.render import render_svg
from landscape_lab.report import Report, export_csv, run
from landscape_lab.topology import GridField

CONFIGS = {p.stem: p for p in shipped_configs()}

ORACLE_RL = """
schema = 1
kind = "rl"
name = "probe"
grid_n = 128
[params]
nodes = [[1.0, 0.0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]
weights = [0.75, 0.75, 0.75]
T = 0.5
"""


def data_rows(path):
    rows = list(csv.reader(open(path, newline="", encoding="utf-8")))
    header, body = rows[0], rows[1:]
    end = body.index([]) if [] in body else len(body)
    return header, body[:end], body[end:]


# --- configuration -------------------------------------------------------------------


def test_all_expected_configs_shipped():
    assert set(CONFIGS) == {
        "fig1_left", "fig1_right", "fig2", "rhie_n4", "oval_sub", "oval_super", "oval_critical",
        "quad_identity", "quad_t04", "neck_02", "neck_01", "neck_005", "dumbbell", "chain3",
    }


def test_fig1_left_parses():
    job = parse_config(CONFIGS["fig1_left"])
    assert job.kind == "rl"
    np.testing.assert_allclose(job.params["nodes"], np.exp(2j * np.pi * np.arange(3) / 3), atol=1e-15)
    assert job.params["weights"] == [0.75] * 3
    assert job.params["T"] == 0.5


def test_empty_file_is_parse_error(tmp_path):
    (tmp_path / "e.toml").write_text("")
    with pytest.raises(ConfigParseError):
        parse_config(tmp_path / "e.toml")


def test_syntax_error_has_location():
    with pytest.raises(ConfigParseError) as info:
        parse_string('schema = 1\nkind = "rl\n')
    assert info.value.line == 2


def test_complex_weight_rejected():
    text = ORACLE_RL.replace("weights = [0.75, 0.75, 0.75]", "weights = [[0.75, 0.1], 0.75, 0.75]")
    with pytest.raises(ConfigValidationError) as info:
        parse_string(text)
    assert "weights" in info.value.key


@pytest.mark.parametrize(
    "edit,key",
    [
        (("grid_n = 128", "grid_n = 128\ngrdi_n = 4"), "grdi_n"),
        (("T = 0.5", "T = 0.5\nTT = 1"), "TT"),
        (('kind = "rl"', 'kind = "circle"'), "kind"),
        (("schema = 1", "schema = 2"), "schema"),
        (("T = 0.5", ""), "T"),
    ],
)
def test_validation_names_key(edit, key):
    with pytest.raises(ConfigValidationError) as info:
        parse_string(ORACLE_RL.replace(*edit))
    assert key in info.value.key


def test_negative_tolerance_rejected():
    with pytest.raises(ConfigValidationError):
        parse_string(ORACLE_RL.replace("grid_n = 128", "grid_n = 128\ntol = -1.0"))


@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_round_trip(name, tmp_path):
    job = parse_config(CONFIGS[name])
    write_config(job, tmp_path / "copy.toml")
    again = parse_config(tmp_path / "copy.toml")
    assert to_dict(again) == to_dict(job)
    assert dataclasses.replace(again, source=None) == dataclasses.replace(job, source=None)


# --- reports -------------------------------------------------------------------------


def test_fig1_left_report(tmp_path):
    rep = run(parse_config(CONFIGS["fig1_left"]))
    assert rep.ok
    assert rep.counts == {"M": 4, "S": 6, "degenerate": 0, "N": 10}
    assert rep.bounds.all_pass and rep.bounds.attains_upper_bound()
    export_csv(rep, tmp_path / "r.csv")
    header, rows, rest = data_rows(tmp_path / "r.csv")
    assert header == ["re", "im", "class", "multiplier", "v", "residual"]
    assert len(rows) == 10
    assert ["census", "global", "4", "6", "4", "0", "True"] in rest


def test_oval_super_single_row(tmp_path):
    rep = run(parse_config(CONFIGS["oval_super"]))
    assert rep.ok and len(rep.points) == 1
    export_csv(rep, tmp_path / "o.csv")
    _, rows, _ = data_rows(tmp_path / "o.csv")
    assert len(rows) == 1 and rows[0][2] == "maximum"


def test_neck_report():
    rep = run(parse_config(CONFIGS["neck_01"]))
    assert rep.ok
    assert rep.extras["sup_mid"] <= rep.extras["bound"]
    assert rep.extras["bound"] == pytest.approx(0.02553, abs=1e-5)


def test_empty_point_set_csv(tmp_path):
    rep = Report(parse_string(ORACLE_RL))
    export_csv(rep, tmp_path / "e.csv")
    header, rows, rest = data_rows(tmp_path / "e.csv")
    assert rows == [] and rest[0] == []
    assert rest[1][0] == "census"


def test_csv_quoting_and_line_ends(tmp_path):
    rep = run(parse_string(ORACLE_RL))
    export_csv(rep, tmp_path / "q.csv")
    raw = (tmp_path / "q.csv").read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n")
    assert raw.startswith(b"re,im,class,multiplier,v,residual\r\n")


# --- SVG ----------------------------------------------------------------------------


def test_constant_field_frame_only():
    fld = GridField.from_mask(np.zeros((64, 64), dtype=bool), (0, 1, 0, 1), values=np.full((64, 64), 0.3))
    svg = render_svg(fld, [])
    assert "<polyline" not in svg and "<circle" not in svg
    assert svg.count("<rect") == 1


def test_disk_concentric_contours():
    sol = pde_grid.solve(pde_grid.disk_problem(129))
    top = CriticalPoint(0j, CriticalClass.MAXIMUM, 0.0, 0.0, 0.5)
    svg = render_svg(sol, [top])
    assert svg.count('fill="#c0282d"') == 1
    lines = re.findall(r'points="([^"]+)"', svg)
    assert len(lines) == 12  # one closed curve per level
    m = re.search(r'<rect x="(\S+)" y="(\S+)" width="(\S+)" height="(\S+)"', svg)
    x0, y0, w, h = map(float, m.groups())
    cx, cy = x0 + w / 2, y0 + h / 2
    for pts in lines:
        xy = np.array([list(map(float, p.split(","))) for p in pts.split()])
        r = np.hypot(xy[:, 0] - cx, xy[:, 1] - cy)
        assert r.std() < 0.01 * r.mean() + 0.5


def test_svg_written_and_deterministic(tmp_path):
    sol = pde_grid.solve(pde_grid.disk_problem(65))
    a = render_svg(sol, [], path=tmp_path / "a.svg")
    b = render_svg(sol, [], path=tmp_path / "b.svg")
    assert a == b == (tmp_path / "a.svg").read_text()


# --- command line -------------------------------------------------------------------


def test_run_pass_writes_outputs(tmp_path, capsys):
    code = main(["run", str(CONFIGS["fig1_right"]), "--out", str(tmp_path), "--csv", "--svg", "--grid", "256"])
    assert code == 0
    assert (tmp_path / "fig1_right.csv").exists() and (tmp_path / "fig1_right.svg").exists()
    assert "PASS" in capsys.readouterr().out


def test_outputs_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", str(CONFIGS["fig1_left"]), "--out", str(tmp_path / d), "--csv", "--svg", "--grid", "256", "--seed", "3"]) == 0
    for ext in ("csv", "svg"):
        assert (tmp_path / "a" / f"fig1_left.{ext}").read_bytes() == (tmp_path / "b" / f"fig1_left.{ext}").read_bytes()


def test_failed_expectation_exits_nonzero(tmp_path):
    text = Path(CONFIGS["oval_super"]).read_text().replace("M = 1", "M = 2")
    (tmp_path / "bad.toml").write_text(text)
    assert main(["run", str(tmp_path / "bad.toml")]) == 1


def test_warnings_only_exit_zero(capsys):
    assert main(["run", str(CONFIGS["oval_critical"])]) == 0
    assert "warning:" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["run", "/nonexistent.toml"], ["run", "--grid", "32", "x.toml"]])
def test_usage_errors_exit_two(argv, capsys):
    assert main(argv) == 2


def test_bad_config_exit_two(tmp_path, capsys):
    (tmp_path / "x.toml").write_text(ORACLE_RL.replace("T = 0.5", "T = 0.5\nbogus = 1"))
    assert main(["run", str(tmp_path / "x.toml")]) == 2
    assert "bogus" in capsys.readouterr().err


def test_list(capsys):
    assert main(["list"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == len(CONFIGS)


@pytest.mark.slow
def test_verify_all(tmp_path, capsys):
    assert main(["verify-all", "--out", str(tmp_path)]) == 0
    assert f"{len(CONFIGS)}/{len(CONFIGS)} configurations pass" in capsys.readouterr().out
