import json
import shutil
import subprocess
import sys

import pytest

from lattice_angles.cli import load_manifest, m2plus1_primes, main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def read_json(path):
    return json.loads(path.read_text())


def test_gen_circle(tmp_path):
    code, out = run(tmp_path, "gen-circle", "--primes", "5,13", "--widths", "1,0.5")
    assert code == 0
    lines = (out / "angles.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "angle" and len(lines) == 6
    m = load_manifest(out / "manifest.json")
    assert m["command"] == "gen-circle" and m["n"] == "65"
    assert set(m["outputs"]) == {"angles.csv", "windows.csv", "summary.json"}
    assert read_json(out / "summary.json")["config_hash"] == m["config_hash"]


def test_gen_circle_integer_and_gnuplot(tmp_path):
    code, out = run(tmp_path, "gen-circle", "--integer", "1105", "--gnuplot")
    assert code == 0
    assert (out / "windows.gp").exists()
    assert read_json(out / "summary.json")["N"] == 8


def test_spacing_equally_spaced(tmp_path):
    code, out = run(tmp_path, "spacing", "--equally-spaced", "100")
    assert code == 0
    rep = read_json(out / "spacing.json")
    assert rep["ks"] == pytest.approx(0.6321205588285577, abs=1e-12)
    assert rep["atypical"] is True


def test_spacing_from_angle_file(tmp_path):
    _, out1 = run(tmp_path, "gen-circle", "--primes", "5,13,17,29,37,41,53")
    out2 = tmp_path / "sp"
    assert main(["spacing", "--angles", str(out1 / "angles.csv"), "--out", str(out2)]) == 0
    rep = read_json(out2 / "spacing.json")
    assert rep["N"] == 128


def test_correlate_methods_agree(tmp_path):
    vals = {}
    for method in ("direct", "fourier"):
        out = tmp_path / method
        assert main(["correlate", "--primes", "5,13,17", "--r", "3", "--kernel", "fejer",
                     "--method", method, "--out", str(out)]) == 0
        vals[method] = read_json(out / "correlation.json")["value"]
    assert vals["direct"] == pytest.approx(vals["fourier"], rel=1e-9)


def test_random_model_lambda(tmp_path):
    code, out = run(tmp_path, "random-model", "--M", "3", "--statistic", "lambda", "--k", "1",
                    "--samples", "2000", "--seed", "1")
    assert code == 0
    mc = read_json(out / "mc.json")
    assert mc["expected"] == 8
    assert abs(mc["mean"] - 8) < 5 * mc["stderr"]


def test_random_model_threads_identical(tmp_path):
    texts = []
    for t in (1, 3):
        out = tmp_path / f"t{t}"
        assert main(["random-model", "--M", "7", "--statistic", "Rstar", "--samples", "60",
                     "--seed", "5", "--threads", str(t), "--out", str(out)]) == 0
        texts.append((out / "mc.json").read_text())
    assert texts[0] == texts[1]


def test_family(tmp_path):
    code, out = run(tmp_path, "family", "--x", "1e5", "--M", "2", "--k", "1", "--prime-cutoff", "1e5",
                    "--dump-terms")
    assert code == 0
    rec = read_json(out / "lsd.json")
    assert rec["family_size"] > 1000
    assert (out / "terms.csv").read_text().splitlines()[1] == "n,lambda_product"


def test_family_refuses_large(tmp_path, capsys):
    code, _ = run(tmp_path, "family", "--x", "1e12", "--M", "2")
    assert code == 3
    assert "members" in capsys.readouterr().err
    assert run(tmp_path, "family", "--x", "1e6", "--M", "4")[0] == 3


def test_cells(tmp_path, capsys):
    code, out = run(tmp_path, "cells", "--r", "3")
    assert code == 0
    assert "5 cells" in capsys.readouterr().out
    assert len(read_json(out / "cells.json")["cells"]) == 5
    assert run(tmp_path, "cells", "--r", "7")[0] == 3


def test_repulsion(tmp_path):
    code, out = run(tmp_path, "repulsion", "--primes", "5,13", "--coeffs", "1,-1")
    assert code == 0
    rep = read_json(out / "repulsion.json")
    assert rep["holds"] and rep["precision_bits"] == 256
    assert rep["ratio"] == pytest.approx(1.00194, abs=1e-5)
    assert run(tmp_path, "repulsion", "--primes", "5,13", "--coeffs", "1,-1", "--precision-bits", "8")[0] == 4


def test_bad_input_exit_codes(tmp_path):
    assert run(tmp_path, "gen-circle", "--primes", "5,5")[0] == 2
    assert run(tmp_path, "gen-circle", "--integer", "21")[0] == 2
    assert run(tmp_path, "random-model")[0] == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('M = 3\nstatistic = "lambda"\nsamples = 100\n')
    code, out = run(tmp_path, "random-model", "--config", str(cfg))
    assert code == 0
    assert read_json(out / "mc.json")["M"] == 3
    cfg.write_text("bogus = 1\n")
    assert run(tmp_path, "random-model", "--config", str(cfg))[0] == 2


def test_m2plus1_primes():
    ps = m2plus1_primes(4)
    assert ps == [2917, 3137, 4357, 5477]


def test_console_script(tmp_path):
    exe = shutil.which("lattice-angles")
    cmd = [exe] if exe else [sys.executable, "-m", "lattice_angles.cli"]
    res = subprocess.run([*cmd, "cells", "--r", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert "2 cells" in res.stdout
