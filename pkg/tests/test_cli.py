from __future__ import annotations

import json

import pytest

from fanomom import __version__
from fanomom.cli import dump_json, fmt, main, parse_grid, ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_body(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# fanomom {__version__} config=")
    return lines[1].split(","), [line.split(",") for line in lines[2:]]


def test_openness_positive_margins(capsys):
    code, out, _ = run(capsys, "openness", "--exponents", "2", "--A", "16")
    cols, rows = csv_body(out)
    assert code == 0 and cols == ["gamma", "Z", "g", "rhs", "margin"]
    assert rows and all(float(r[-1]) > 0 for r in rows)


def test_malformed_grid_names_key(capsys):
    code, _, err = run(capsys, "openness", "--exponents", "2", "--gamma-grid", "0.1:x:3")
    assert code == 1 and "gamma-grid" in err


def test_out_of_range_grid(capsys):
    code, _, err = run(capsys, "openness", "--exponents", "2", "--gamma-grid", "0.1:0.7:3")
    assert code == 1 and "gamma-grid" in err


def test_verify_all_broken_tolerance(capsys):
    code, _, err = run(capsys, "verify-all", "--only", "7", "--tolerance", "7.c_error=1e-15")
    assert code == 2 and "criterion 7" in err


def test_verify_all_summary(capsys):
    code, out, _ = run(capsys, "verify-all", "--only", "4,7,11")
    summary = json.loads(out.splitlines()[1])
    assert code == 0 and set(summary["criteria"]) == {"4", "7", "11"}
    assert all(set(v) == {"name", "status", "measured", "bound"} for v in summary["criteria"].values())


def test_unknown_tolerance_key(capsys):
    code, _, err = run(capsys, "verify-all", "--only", "7", "--tolerance", "7.nope=1")
    assert code == 1 and "tolerance" in err


def test_config_file_and_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"exponents": "3,1", "gamma-grid": "0.01:0.3:4"}))
    code, out, _ = run(capsys, "openness", "--config", str(cfg), "--B", "2")
    header = json.loads(out.splitlines()[0].split("config=", 1)[1])
    assert code == 0 and header["B"] == 2 and header["gamma_grid"] == "0.01:0.3:4"
    cfg.write_text(json.dumps({"exponents": "3,1", "bogus": 1}))
    code, _, err = run(capsys, "openness", "--config", str(cfg))
    assert code == 1 and "bogus" in err


def test_deterministic_files(tmp_path, capsys):
    args = ["dh", "--preset", "p2-tent", "--k", "12", "--out"]
    assert main(args + [str(tmp_path / "a")]) == 0
    assert main(args + [str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "dh.csv").read_text().splitlines()
    b = (tmp_path / "b" / "dh.csv").read_text().splitlines()
    assert a[1:] == b[1:]


def test_no_writes_outside_out_dir(tmp_path, capsys):
    code, _, err = run(capsys, "dh", "--out", str(tmp_path), "--output", "../escape.csv")
    assert code == 1 and not (tmp_path.parent / "escape.csv").exists()


def test_zeta_monomial(capsys):
    code, out, _ = run(capsys, "zeta", "--exponents", "3,1", "--gamma-grid", "0.05,0.2")
    cols, rows = csv_body(out)
    assert code == 0 and float(rows[1][1]) == pytest.approx(1 / (0.4 * 0.8))


def test_lift_verify_jsonl(capsys):
    code, out, _ = run(capsys, "lift-verify", "--space", "proj", "--potential", "capped:1,3", "--gamma-grid", "0.3")
    rec = json.loads(out.splitlines()[1])
    assert code == 0 and rec["success"] is True and rec["rel_error"] <= 1e-5


def test_dh_table(capsys):
    code, out, _ = run(capsys, "dh", "--preset", "p1-linear", "--k", "40", "--p", "1,2,4,8")
    cols, rows = csv_body(out)
    assert code == 0 and cols == ["p", "uncentered", "centered", "ratio", "flag_nplus1", "flag_logconcave"]
    assert [r[0] for r in rows] == ["1", "2", "4", "8"]


def test_normal_cone_json(capsys):
    code, out, _ = run(capsys, "normal-cone", "--format", "json")
    rec = json.loads(out.splitlines()[1])
    assert code == 0 and rec["logconcave"] is False and rec["N_k"] == 1891


def test_radial_ma_fit_and_potential_files(tmp_path, capsys):
    code = main(["radial-ma", "--space", "ball", "--n", "1", "--gamma-grid", "1.5:1.9:3", "--fit-slope",
                 "--emit-potentials", "--out", str(tmp_path)])
    assert code == 0
    fit = json.loads((tmp_path / "radial-ma.fit.json").read_text().splitlines()[1])
    assert set(fit) >= {"slope", "intercept", "r2"}
    from fanomom.model import RadialPotential
    u = RadialPotential.from_csv((tmp_path / "radial-ma.u_1.5.csv").read_text())
    assert u.geometry.kind == "ball"


def test_kk_envelope(capsys):
    code, out, _ = run(capsys, "kk", "--count", "5", "--centered", "--p", "2")
    _, rows = csv_body(out)
    assert code == 0 and all(float(r[2]) <= 2 for r in rows)


def test_seventeen_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert dump_json({"x": 1 / 3, "y": float("inf")}) == '{"x": 0.33333333333333331, "y": "inf"}'


def test_parse_grid():
    assert list(parse_grid("0:1:3", "g")) == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError, match="g:"):
        parse_grid("1:0:3", "g")
