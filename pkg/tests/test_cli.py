import csv
import io
import math

import pytest

from tfqkd.cli import BOUNDS_COLUMNS, FLUCT_COLUMNS, SWEEP_COLUMNS, main

FIXED_100KM = """\
[channel]
distance_km = 100.0

[sweep]
distances_km = [100.0]
optimize = false
"""


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_conservative_point_gives_zero_rate(tmp_path, capsys):
    code, out, _ = run(["sweep-distance", "--config", write(tmp_path, FIXED_100KM)], capsys)
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == 1
    assert float(rows[0]["R_coh"]) == 0.0
    assert float(rows[0]["plob"]) == pytest.approx(0.0145, abs=5e-5)
    assert float(rows[0]["log10_eps_coh"]) == pytest.approx(-10.0)


def test_constant_plugin_positive_and_fluct_columns(tmp_path, capsys):
    cfg = FIXED_100KM + '\n[protocol]\nplugin = "constant:0"\n\n[fluctuation]\ndelta_minus = -0.2\ndelta_plus = 0.2\n'
    code, out, _ = run(["sweep-distance", "--config", write(tmp_path, cfg)], capsys)
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == SWEEP_COLUMNS + FLUCT_COLUMNS
    assert float(rows[0]["R_coh"]) > 0.0
    assert float(rows[0]["delta_plus"]) == 0.2


def test_rerun_is_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, """\
[protocol]
plugin = "constant:0.05"

[sweep]
distances_km = [0.0, 100.0]

[optimizer]
particles = 6
iterations = 4
""")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep-distance", "--config", cfg, "--seed", "5", "--out", str(a)]) == 0
    assert main(["sweep-distance", "--config", cfg, "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = rows_of(a.read_text())
    assert math.isinf(float(rows[0]["plob"]))


def test_sweep_n(tmp_path, capsys):
    cfg = FIXED_100KM + "N_values = [1e10, 1e12]\n"
    code, out, _ = run(["sweep-n", "--config", write(tmp_path, cfg)], capsys)
    assert code == 0
    assert [int(r["N"]) for r in rows_of(out)] == [10**10, 10**12]


@pytest.mark.parametrize("text, line", [
    ("[channel]\ndistance_km = 10\nbogus = 1\n", 3),
    ("[channel]\ndistance_km = = 10\n", 2),
    ("[protocol]\nN = 1e12\neps_coh = 2.0\n", 3),
    ("\n[channel]\nmisalignment = 0.7\n", 3),
    ("[nonsense]\n", 1),
])
def test_config_errors_exit_2_with_location(tmp_path, capsys, text, line):
    path = write(tmp_path, text)
    code, out, err = run(["sweep-distance", "--config", path], capsys)
    assert code == 2
    assert out == ""
    assert f"{path}:{line}:" in err


def test_missing_config_exit_2(tmp_path, capsys):
    code, _, err = run(["bounds-table", "--config", str(tmp_path / "none.toml")], capsys)
    assert code == 2 and "none.toml" in err


def test_infeasible_exit_3(tmp_path, capsys):
    cfg = FIXED_100KM + "\n[fluctuation]\ndelta_minus = -0.9\ndelta_plus = 0.9\n"
    code, out, err = run(["sweep-distance", "--config", write(tmp_path, cfg)], capsys)
    assert code == 3
    assert rows_of(out)[0]["status"] == "infeasible"
    assert "infeasible" in err


def test_bounds_table(capsys):
    code, out, _ = run(["bounds-table"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == BOUNDS_COLUMNS
    r = next(r for r in rows if float(r["delta_plus"]) == 0.2 and r["n"] == "0")
    assert float(r["naive_lower"]) == pytest.approx(math.exp(-0.6), abs=1e-12)
    assert float(r["naive_upper"]) == pytest.approx(math.exp(-0.4), abs=1e-12)
    assert f"{float(r['naive_lower']):.6f}" == "0.548812"
    assert f"{float(r['naive_upper']):.6f}" == "0.670320"
    for r in rows:
        ref = float(r["refined_upper"]) - float(r["refined_lower"])
        nai = float(r["naive_upper"]) - float(r["naive_lower"])
        assert ref <= nai + 1e-15
    assert not any(r["delta_minus"].startswith("-0.0") and float(r["delta_minus"]) == 0 for r in rows)


def test_mc_validate(tmp_path, capsys):
    cfg = write(tmp_path, "[mc]\nscenarios = 2\ntrials = 20000\n")
    code, out, err = run(["mc-validate", "--config", cfg, "--seed", "1"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 2 * 10
    assert "within 3 sigma" in err


def test_optimize_single_point(tmp_path, capsys):
    cfg = write(tmp_path, '[protocol]\nplugin = "constant:0"\n\n[optimizer]\nparticles = 5\niterations = 3\n')
    code, out, _ = run(["optimize", "--config", cfg], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 1 and float(rows[0]["R_coh"]) > 0.0


def test_json_output(tmp_path, capsys):
    import json

    code, out, _ = run(["sweep-distance", "--config", write(tmp_path, FIXED_100KM), "--format", "json"], capsys)
    assert code == 0
    rows = json.loads(out)
    assert list(rows[0]) == SWEEP_COLUMNS
    assert rows[0]["R_coh"] == 0.0 and rows[0]["status"] == "ok"
    code, out, _ = run(["sweep-distance", "--config",
                        write(tmp_path, "[sweep]\ndistances_km = [0.0]\noptimize = false\n"),
                        "--format", "json"], capsys)
    assert json.loads(out)[0]["plob"] == "inf"
