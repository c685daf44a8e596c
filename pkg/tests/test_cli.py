import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from hartogs import cli
from hartogs.errors import SceneError
from hartogs.scene import load_scene, parse_modulus_predicate, scene_from_dict

from oracles import angle_winding

SCENES = Path(__file__).resolve().parent.parent / "scenes"

SMALL = {
    "n": 2,
    "omega": {"kind": "polydisc", "center": [0, 0], "radius": 1.5},
    "hole": {"kind": "closed_polydisc", "center": [0, 0], "radius": 0.5},
    "i": 2,
    "function": "1/(z2-3)",
    "reference": "1/(z2-3)",
    "grid": {"counts": [3, 3, 5, 5], "ranges": [[-1.5, 1.5], [-0.3, 0.3], [-1, 1], [-1, 1]]},
    "eps": 0.4,
}


def write_scene(tmp_path, name="scene.json", **changes):
    data = {**SMALL, **changes}
    data = {k: v for k, v in data.items() if v is not None}
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def run(args, capsys):
    code = cli.run([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


# -- contour ---------------------------------------------------------------------

def test_contour_polydisc(tmp_path, capsys):
    out_path = tmp_path / "contour.json"
    code, out, _ = run(["contour", "--scene", SCENES / "polydisc.json", "--base", "0", "--out", out_path], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["loops"] == 1 and report["passed"]
    assert report["winding"]["inside"]["count"] > 0 and report["winding"]["outside"]["count"] > 0
    doc = json.loads(out_path.read_text())
    assert abs(angle_winding(doc["loops"], 0) - 1) < 1e-9


def test_contour_hartogs_figure(tmp_path, capsys):
    out_path = tmp_path / "contour.json"
    code, out, _ = run(["contour", "--scene", SCENES / "hartogs_figure.json", "--base", "0.7", "--out", out_path],
                       capsys)
    assert code == 0 and json.loads(out)["loops"] == 1
    loops = json.loads(out_path.read_text())["loops"]
    for w in 0.5 * np.exp(2j * np.pi * np.arange(12) / 12):
        assert abs(angle_winding(loops, w) - 1) < 1e-9
    assert abs(angle_winding(loops, 0.98)) < 1e-9


def test_contour_outside_projection(capsys):
    code, _, err = run(["contour", "--scene", SCENES / "polydisc.json", "--base", "0.9"], capsys)
    assert code == 3 and "empty fiber" in err and "contour" in err


# -- extend ----------------------------------------------------------------------

def test_extend_small_grid(tmp_path, capsys):
    scene = write_scene(tmp_path)
    out_path = tmp_path / "grid.csv"
    code, _, err = run(["extend", "--scene", scene, "--out", out_path], capsys)
    assert code == 0
    summary = json.loads(err)
    assert summary["passed"] and summary["max_ref_dev"] <= 1e-6
    rows = list(csv.reader(io.StringIO(out_path.read_text())))
    assert rows[0] == ["re_z1", "im_z1", "re_z2", "im_z2", "re_val", "im_val", "err_est", "provenance", "ref_dev"]
    body = rows[1:]
    assert len(body) == 3 * 3 * 5 * 5
    codes = {r[7].split(":")[0] for r in body}
    assert "excluded_outside" in codes and "passthrough" in codes and "glued_chain" in codes
    for r in body:
        if r[7].startswith("excluded"):
            assert r[4:7] == ["", "", ""]
        else:
            assert float(r[8]) <= 1e-6


def test_extend_is_byte_identical(tmp_path, capsys):
    scene = write_scene(tmp_path)
    outs = []
    for k, workers in enumerate((1, 1, 4)):
        path = tmp_path / f"grid{k}.csv"
        code, _, _ = run(["extend", "--scene", scene, "--out", path, "--workers", workers, "--no-verify"], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_extend_to_stdout(tmp_path, capsys):
    code, out, _ = run(["extend", "--scene", write_scene(tmp_path), "--no-verify"], capsys)
    assert code == 0 and out.startswith("re_z1,")


def test_extend_reference_mismatch_exits_4(tmp_path, capsys):
    scene = write_scene(tmp_path, reference="1/(z2-3) + 0.001")
    code, _, err = run(["extend", "--scene", scene, "--no-verify"], capsys)
    assert code == 4 and json.loads(err.split("\n", 0)[0])["passed"] is False


def test_extend_tolerance_flag(tmp_path, capsys):
    scene = write_scene(tmp_path, reference="1/(z2-3) + 1e-9")
    assert run(["extend", "--scene", scene, "--no-verify"], capsys)[0] == 0
    assert run(["extend", "--scene", scene, "--no-verify", "--tolerance", "1e-10"], capsys)[0] == 4


def test_extend_one_variable(tmp_path, capsys):
    scene = write_scene(tmp_path, n=1, omega={"kind": "polydisc", "radius": 1.5},
                        hole={"kind": "closed_polydisc", "radius": 0.5}, i=None, function="1/(z1-3)",
                        reference=None, grid=None)
    code, _, err = run(["extend", "--scene", scene], capsys)
    assert code == 3 and "n >= 2" in err


def test_internal_error_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "cmd_extend", boom)
    code, _, err = run(["extend", "--scene", write_scene(tmp_path)], capsys)
    assert code == 5 and "internal error" in err


# -- verify ----------------------------------------------------------------------

def _statuses(report):
    return {p["name"]: p["status"] for p in report["properties"]}


def test_verify_polydisc(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, out, _ = run(["verify", "--scene", SCENES / "polydisc.json", "--out", out_path], capsys)
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report == json.loads(out)
    assert set(_statuses(report).values()) == {"pass"}
    for p in report["properties"]:
        if "worst" in p and "tolerance" in p and p["name"] != "dimension":
            assert p["worst"] <= p["tolerance"]


def test_verify_conj_aborts_before_integration(tmp_path, capsys, monkeypatch):
    def forbidden(*a, **k):
        raise AssertionError("integration ran")

    monkeypatch.setattr(cli, "build_lattice_contour", forbidden)
    code, out, _ = run(["verify", "--scene", write_scene(tmp_path, function="conj(z1)")], capsys)
    assert code == 3
    report = json.loads(out)
    st = _statuses(report)
    assert st["input_wirtinger"] == "fail"
    worst = next(p for p in report["properties"] if p["name"] == "input_wirtinger")["worst"]
    assert abs(worst - 1) <= 1e-4
    assert all(v == "skipped" for k, v in st.items() if k not in ("dimension", "input_wirtinger"))


def test_verify_eps_too_large(tmp_path, capsys):
    code, out, _ = run(["verify", "--scene", write_scene(tmp_path, eps=1.5)], capsys)
    st = _statuses(json.loads(out))
    assert code == 3 and st["separation"] == "error"
    after = list(st)[list(st).index("separation") + 1:]
    assert all(st[k] == "skipped" for k in after)


# -- scenes ----------------------------------------------------------------------

def test_scene_unknown_key(tmp_path, capsys):
    code, _, err = run(["verify", "--scene", write_scene(tmp_path, colour="red")], capsys)
    assert code == 2 and "colour" in err


def test_scene_json_syntax_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2,\n  "omega": }')
    code, _, err = run(["extend", "--scene", bad], capsys)
    assert code == 2 and "line 2, column 12" in err


def test_scene_missing_file(tmp_path, capsys):
    assert run(["extend", "--scene", tmp_path / "nope.json"], capsys)[0] == 2


def test_scene_expression_error_offset(tmp_path, capsys):
    code, _, err = run(["extend", "--scene", write_scene(tmp_path, function="1/(z2-")], capsys)
    assert code == 2 and "byte offset 6" in err


def test_scene_hole_outside_omega(tmp_path, capsys):
    scene = write_scene(tmp_path, hole={"kind": "closed_polydisc", "center": [1.2, 0], "radius": 0.5})
    code, _, err = run(["extend", "--scene", scene], capsys)
    assert code == 2 and "not contained" in err


def test_scene_complement_needs_hartogs_omega(tmp_path, capsys):
    code, _, _ = run(["extend", "--scene", write_scene(tmp_path, hole={"kind": "hartogs_complement"})], capsys)
    assert code == 2


def test_scene_defaults():
    data = {k: v for k, v in SMALL.items() if k not in ("i", "grid", "eps")}
    scene = scene_from_dict(data)
    assert scene.slot == 2 and scene.eps == 0.2 and scene.grid_counts == (9, 9, 9, 9)
    assert scene.grid_ranges[0] == (-1.5, 1.5)
    hf = load_scene(SCENES / "hartogs_figure.json")
    assert hf.slot == 1 and hf.figure is not None


def test_predicate_hole(tmp_path, capsys):
    hole = {"kind": "predicate_expr", "expr": "|z1| <= 0.5 and (|z2| <= 0.5 or not |z2| > 0.5)", "radius": 0.5}
    scene = write_scene(tmp_path, hole=hole)
    code, _, err = run(["extend", "--scene", scene, "--no-verify"], capsys)
    assert code == 0 and json.loads(err)["passed"]


def test_modulus_predicate_semantics():
    pred = parse_modulus_predicate("|z1| <= 0.5 and not (|z2| < 0.2 or 0.4 < |z2|)", 2)
    pts = np.array([[0.5, 0.3], [0.5, 0.1], [0.6, 0.3], [0.0, 0.4], [0.0, 0.41j]])
    assert pred(pts).tolist() == [True, False, False, True, False]


@pytest.mark.parametrize("text, offset", [("|z1| <=", 7), ("|z3| < 1", 0), ("|z1| < 1 and", 12), ("|z1| ~ 1", 5)])
def test_modulus_predicate_errors(text, offset):
    with pytest.raises(SceneError) as info:
        parse_modulus_predicate(text, 2)
    assert info.value.offset == offset
