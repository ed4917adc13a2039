import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcz import __version__, cli
from weakcz.dyadic import DyadicCube
from weakcz.grid import GridFunction, GridSpec
from weakcz.io import (cubes_from_json, cubes_to_json, distribution_csv, dumps_function,
                       function_from_text, function_to_text, grid_from_json, grid_to_json,
                       loads_function, operator_csv)
from weakcz.verify.ledger import InequalityLedger


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=4, max_size=4),
       st.integers(-3, 3))
def test_function_round_trips(vals, lo):
    g = GridSpec(2, 0.125, (lo, 0), (lo + 2, 2))
    F = GridFunction(g, vals)
    assert loads_function(dumps_function(F)).equals(F)
    assert function_from_text(function_to_text(F)).equals(F)
    assert grid_from_json(grid_to_json(g)) == g


def test_text_header_required():
    with pytest.raises(ValueError):
        function_from_text("1.0\n2.0\n")


def test_cubes_and_csv():
    cubes = [DyadicCube(2, (1,)), DyadicCube(-1, (-3,))]
    assert cubes_from_json(json.loads(json.dumps(cubes_to_json(cubes)))) == cubes
    assert distribution_csv([(0.5, 2.0)]) == "t,measure\n0.5,2.0\n"
    text = operator_csv(np.array([[0.1], [0.2]]), [1.0, 2.0])
    assert text.splitlines() == ["x1,value,tail_bound", "0.1,1.0,nan", "0.2,2.0,nan"]


def _run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"weakcz {__version__}"


@pytest.mark.parametrize("cmd", list(cli.COMMANDS))
def test_help(cmd, capsys):
    assert cli.main([cmd, "--help"]) == 0
    assert "--config" in capsys.readouterr().out


def test_parse_h():
    assert cli.parse_h("2^-8") == 2.0 ** -8
    assert cli.parse_h("2**-3") == 0.125
    assert cli.parse_h("0.5") == 0.5
    with pytest.raises(cli.ConfigError):
        cli.parse_h("0.3")


def test_kernel_check(tmp_path):
    assert _run(tmp_path, "kernel-check", "--kernel", "homogeneous", "--samples", "128") == 0
    text = (tmp_path / "kernel_check.json").read_text()
    rep = json.loads(text)
    assert rep["C_K"] == 1.0
    assert rep["size_estimate"] == pytest.approx(1.0, rel=1e-12)
    assert rep["smoothness"]["delta"] == pytest.approx(1.0, abs=0.05)
    assert _run(tmp_path, "kernel-check", "--kernel", "homogeneous", "--samples", "128") == 0
    assert (tmp_path / "kernel_check.json").read_text() == text


def test_config_errors(tmp_path, capsys):
    assert _run(tmp_path, "kernel-check", "--kernel", "nope") == 1
    assert "unknown kernel" in capsys.readouterr().err
    assert _run(tmp_path, "verify", "--scenario", "theorem1", "--t-count", "0") == 1
    assert _run(tmp_path, "verify", "--scenario", "bogus") == 1
    assert _run(tmp_path, "whitney", "--h", "0.3") == 1
    assert _run(tmp_path, "whitney", "--eps", "0.0001") == 1
    assert _run(tmp_path, "apply", "--inputs", "zero") == 1
    assert cli.main(["whitney", "--no-such-flag"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": 1}')
    assert cli.main(["whitney", "--config", str(bad)]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"h": "2^-6", "box": [-2.0, 3.0], "set": [[0.0, 1.0]],
                               "out": str(tmp_path / "a")}))
    assert cli.main(["whitney", "--config", str(cfg)]) == 0
    assert cli.main(["whitney", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "cubes.json").read_text()
    assert a == (tmp_path / "b" / "cubes.json").read_text()


def test_whitney(tmp_path):
    assert _run(tmp_path, "whitney", "--h", "2^-6", "--box=-2,3", "--set", "0,1") == 0
    cubes = cubes_from_json(json.loads((tmp_path / "cubes.json").read_text()))
    chk = json.loads((tmp_path / "whitney_check.json").read_text())
    assert len(cubes) == chk["cube_count"] > 0
    assert 2.0 <= chk["min_ratio"] and chk["max_ratio"] <= 8.0
    assert chk["disjoint"] and chk["inside"]
    assert chk["covered_measure"] + chk["remainder_cells"] * 2.0 ** -6 == chk["set_measure"]


def test_maximal(tmp_path):
    assert _run(tmp_path, "maximal", "--h", "2^-5", "--box=-2,3",
                "--inputs", "indicator:0,1") == 0
    Mf = function_from_text((tmp_path / "maximal.txt").read_text())
    assert Mf.values.max() == 1.0


def test_apply_zero_input(tmp_path):
    assert _run(tmp_path, "apply", "--h", "2^-4", "--box=-1,1", "--inputs", "zero|zero") == 0
    rows = (tmp_path / "apply.csv").read_text().splitlines()
    assert rows[0] == "x1,value,tail_bound" and len(rows) == 33
    assert all(float(r.split(",")[1]) == 0.0 for r in rows[1:])


def test_apply_from_file(tmp_path):
    g = GridSpec.from_box([-1], [1], 2.0 ** -4)
    path = tmp_path / "f.txt"
    path.write_text(function_to_text(GridFunction.indicator(g, [0], [0.5])))
    assert _run(tmp_path, "apply", "--h", "2^-4", "--box=-1,1", "--inputs",
                f"{path}|atoms:-0.5:2", "--targets", "0.75") == 0
    rows = (tmp_path / "apply.csv").read_text().splitlines()
    assert len(rows) == 2 and float(rows[1].split(",")[1]) > 0


def test_exit_codes_budget_and_evaluator(tmp_path):
    assert _run(tmp_path, "apply", "--h", "2^-4", "--box=-1,1",
                "--inputs", "indicator:0,1|indicator:0,1", "--budget", "10") == 4
    assert _run(tmp_path, "apply", "--inputs", "atoms:0:1|atoms:0:1", "--targets", "0") == 2


def test_ball_system(tmp_path):
    assert _run(tmp_path, "ball-system", "--atoms", "0:1|0:1", "--t", "4", "--box=-8,8") == 0
    js = json.loads((tmp_path / "ball_system.json").read_text())
    assert js["slots"][0]["radii"] == [0.25]
    assert _run(tmp_path, "ball-system", "--atoms", "7.9:1", "--t", "4", "--box=-8,8") == 1


def test_verify_theorem2(tmp_path):
    assert _run(tmp_path, "verify", "--scenario", "theorem2", "--atoms", "0:1|0:1",
                "--t", "4", "--box=-8,8", "--h", "2^-6") == 0
    led = json.loads((tmp_path / "ledger_theorem2.json").read_text())
    (e,) = [e for e in led["entries"] if e["name"] == "E_star"]
    assert e["rhs"] == 2.0 and e["pass"]


def test_verify_lemma1(tmp_path):
    assert _run(tmp_path, "verify", "--scenario", "lemma1", "--kernel", "tensor-hilbert",
                "--m", "1", "--c", "3.141592653589793", "--set=-1,1", "--box=-64,64",
                "--h", "2^-6") == 0
    led = json.loads((tmp_path / "ledger_lemma1.json").read_text())
    assert led["constants"]["sum"] == pytest.approx(2.7726, rel=0.05)


def test_verify_theorem1(tmp_path):
    assert _run(tmp_path, "verify", "--scenario", "theorem1", "--kernel", "tensor-hilbert",
                "--h", "2^-5", "--t-min", "0.125", "--t-max", "2", "--t-count", "3",
                "--N", "2,4") == 0
    rows = (tmp_path / "distribution.csv").read_text().splitlines()
    assert rows[0] == "t,measure" and len(rows) == 4


def test_failed_entry_exit_code(tmp_path, monkeypatch):
    def failing(*a, **kw):
        led = InequalityLedger()
        led.check("E_star", "E_star", 3.0, 2.0)
        return led
    monkeypatch.setattr(cli, "theorem2_ledger", failing)
    assert _run(tmp_path, "verify", "--scenario", "theorem2", "--atoms", "0:1|0:1") == 3
