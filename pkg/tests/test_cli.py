import csv
import io
import json
import subprocess
import sys

import pytest

from snowdyn import __version__, cli


def run(argv, tmp_path, name="out.csv"):
    path = tmp_path / name
    code = cli.main([*argv, "--out", str(path)])
    return code, path.read_text() if path.exists() else ""


def table(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def header(text):
    return [line[2:] for line in text.splitlines() if line.startswith("# ")]


def test_header_contents(tmp_path):
    code, text = run(["classify", "--map", "lattes_2222"], tmp_path)
    assert code == 0
    h = "\n".join(header(text))
    assert f"snowdyn {__version__}" in h
    assert "config_hash=" in h and "rng=philox4x64" in h and "\nargs " in h
    assert "\r" not in text


def test_config_hash_tracks_arguments(tmp_path):
    a = header(run(["classify", "--map", "rhat"], tmp_path, "a.csv")[1])
    b = header(run(["classify", "--map", "lattes_2222"], tmp_path, "b.csv")[1])
    ha = next(line for line in a if "config_hash" in line)
    hb = next(line for line in b if "config_hash" in line)
    assert ha != hb


def test_classify(tmp_path):
    code, text = run(["classify", "--map", "lattes_2222"], tmp_path)
    (row,) = table(text)
    assert row["signature"] == "(2,2,2,2)"
    assert (row["euler_char_num"], row["euler_char_den"]) == ("0", "1")
    code, text = run(["classify", "--map", "rhat"], tmp_path)
    (row,) = table(text)
    assert row["signature"] == "(2,60,60)"
    assert float(row["euler_char_num"]) < 0


def test_lyapunov_detail(tmp_path):
    detail = tmp_path / "detail.csv"
    code, text = run(
        ["lyapunov", "--map", "lattes_2222", "--seeds", "4", "--n", "500", "--detail", str(detail)], tmp_path
    )
    assert code == 0
    (row,) = table(text)
    assert abs(float(row["mean_dim"]) - 2) < 0.05
    assert len(table(detail.read_text())) == 4


def test_table1_default_maps(tmp_path):
    code, text = run(["table1", "--seeds", "3", "--n", "300"], tmp_path)
    assert code == 0
    assert [r["map"] for r in table(text)] == ["rhat", "rhat_sym", "lattes_2222"]


def test_pcf_check_pass_and_fail(tmp_path):
    code, text = run(["pcf-check", "--map", "rhat", "--tol", "2e-2"], tmp_path)
    assert code == 0
    assert all(r["within_tol"] == "true" for r in table(text))
    code, text = run(["pcf-check", "--map", "rhat", "--tol", "1e-9"], tmp_path)
    assert code == 3
    assert any(r["within_tol"] == "false" for r in table(text))


def test_density_grid(tmp_path):
    code, text = run(["density", "--map", "lattes_2222", "--level", "1", "--grid", "6"], tmp_path)
    assert code == 0
    rows = table(text)
    assert 0 < len(rows) <= 36
    assert all(r["fiber_count"] == "4" and float(r["kappa"]) > 0 for r in rows)


def test_blowup(tmp_path):
    code, text = run(["blowup", "--map", "lattes_2222", "--point", "1", "--level", "2"], tmp_path)
    assert code == 0
    rows = table(text)
    assert abs(float(rows[0]["slope"]) + 1) < 0.15


def test_snow_levels(tmp_path):
    code, text = run(["snow", "--generator", "main_29", "--level", "2"], tmp_path)
    assert code == 0
    rows = table(text)
    assert [int(r["cylinders"]) for r in rows] == [6, 174, 5046]
    assert all(int(r["annulus_min"]) >= 5 for r in rows[:-1])
    assert "embeddable=true" in text


def test_snow_pairs(tmp_path):
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("# comment\n0.1.2 0.1.2\n0.1.2 1.5.7\n")
    summary = tmp_path / "summary.csv"
    code, text = run(
        ["snow", "--generator", "main_29", "--level", "2", "--pairs", str(pairs), "--summary", str(summary)],
        tmp_path,
    )
    assert code == 0
    rows = table(text)
    assert len(rows) == 6
    same = [float(r["d_j"]) for r in rows[:3]]
    assert same == [1.0, 0.2, 0.04]
    assert len(table(summary.read_text())) == 3


def test_snow_pairs_errors(tmp_path):
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("0.1 0.2\n")
    assert run(["snow", "--generator", "main_29", "--level", "2", "--pairs", str(pairs)], tmp_path)[0] == 2
    pairs.write_text("0.1.99 0.1.2\n")
    assert run(["snow", "--generator", "main_29", "--level", "2", "--pairs", str(pairs)], tmp_path)[0] == 2


def test_holder_probe(tmp_path):
    code, text = run(
        ["holder-probe", "--map", "lattes_2222", "--samples", "40", "--radii", "1e-4,1e-8", "--chi", "0.6931471805599453"],
        tmp_path,
    )
    assert code == 0
    rows = table(text)
    assert [float(r["radius"]) for r in rows] == [1e-4, 1e-8]
    assert abs(float(rows[-1]["median_ratio"]) - 1) < 0.1


def test_config_errors(tmp_path):
    assert run(["classify", "--map", "no_such_map"], tmp_path)[0] == 2
    assert run(["snow", "--generator", "no_such_generator"], tmp_path)[0] == 2
    assert run(["snow", "--generator", "main_29", "--level", "9"], tmp_path)[0] == 2
    assert run(["density", "--map", "lattes_2222", "--grid", "0"], tmp_path)[0] == 2
    assert run(["lyapunov", "--map", "rhat", "--expansion", "1"], tmp_path)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 5, "faces": [{"anchor": [0, 0, 0], "axes": "xy"}]}))
    assert run(["snow", "--generator", str(bad)], tmp_path)[0] == 2


def test_numerical_failure(tmp_path):
    square = tmp_path / "square.json"
    square.write_text(json.dumps({"numerator": [0, 0, 1], "denominator": [1, 0, 0]}))
    code, _ = run(["lyapunov", "--map", str(square), "--expansion", "2", "--seeds", "2", "--n", "200"], tmp_path)
    assert code == 3


def test_argparse_errors():
    with pytest.raises(SystemExit) as info:
        cli.main(["lyapunov"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "snowdyn", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
