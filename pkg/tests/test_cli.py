import importlib.util
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from curvemag import cli
from curvemag.config import load_config
from curvemag.errors import ConfigError


def run(tmp_path, command, toml, *extra):
    cfg = tmp_path / "run.toml"
    cfg.write_text(toml)
    out = tmp_path / "out"
    return cli.main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


RING16 = """
[curve]
kind = "ring"
radius = 1.0
[grid]
n = 16
"""


def test_frame_ring(tmp_path):
    code, out = run(tmp_path, "frame", RING16)
    assert code == 0
    rows = read_csv(out / "frame.csv")
    assert rows.shape == (17, 12)
    assert np.allclose(rows[:, 10], 1.0) and np.allclose(rows[:, 11], 0.0, atol=1e-12)


def test_frame_helix(tmp_path):
    code, out = run(tmp_path, "frame", """
[curve]
kind = "helix"
a = 1.0
b = 1.0
turns = 1.0
[grid]
n = 64
""")
    assert code == 0
    rows = read_csv(out / "frame.csv")
    assert np.allclose(rows[:, 10], 0.5) and np.allclose(rows[:, 11], 0.5)


def test_unknown_key_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "frame", "[curve]\nkind = \"ring\"\nradiuss = 1.0\n")
    assert code == 2
    assert "curve.radiuss" in capsys.readouterr().err


def test_bad_value_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "frame", "[grid]\nn = 2\n")
    assert code == 2
    assert "grid.n" in capsys.readouterr().err


def test_missing_polygon_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "demag", """
[cross_section]
kind = "polygon"
path = "nowhere.csv"
""")
    assert code == 2
    assert "nowhere.csv" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert cli.main(["frame", "--config", str(tmp_path / "absent.toml")]) == 2


def test_demag_disk(tmp_path):
    code, out = run(tmp_path, "demag", "[cross_section]\nkind = \"disk\"\n")
    assert code == 0
    d = json.loads((out / "demag.json").read_text())
    M = np.array(d["demag"]["matrix"])
    assert M[0, 0] == pytest.approx(1 / (2 * np.pi), abs=1e-5)
    assert len(d["convergence"]) >= 2


def test_demag_square_offdiagonal(tmp_path):
    code, out = run(tmp_path, "demag", "[cross_section]\nkind = \"square\"\n")
    assert code == 0
    M = np.array(json.loads((out / "demag.json").read_text())["demag"]["matrix"])
    assert abs(M[0, 1]) < 1e-10


def test_minimize_single_iteration_reports_not_converged(tmp_path, capsys):
    code, out = run(tmp_path, "minimize", RING16 + """
[perturbation]
kind = "dmi"
kappa = 1.0
[boundary]
kind = "periodic"
[minimize]
max_iters = 1
""")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["converged"] is False
    assert "NOT converged" in capsys.readouterr().out


RING_MIN = """
seed = 3
[curve]
kind = "ring"
radius = 1.0
[grid]
n = 128
[perturbation]
kind = "dmi"
kappa = 1.0
[cross_section]
kind = "none"
[boundary]
kind = "periodic"
[minimize]
demag = false
"""


def test_minimize_ring_finds_constant_minimizer(tmp_path):
    code, out = run(tmp_path, "minimize", RING_MIN)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["converged"] and rep["energy"]["total"] <= 1e-8
    f = read_csv(out / "field.csv")
    assert f.shape == (129, 4)
    assert np.allclose(np.linalg.norm(f[:, 1:], axis=1), 1.0, atol=1e-12)


def test_rerun_is_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _, out_a = run(a, "minimize", RING_MIN)
    _, out_b = run(b, "minimize", RING_MIN)
    assert (out_a / "field.csv").read_bytes() == (out_b / "field.csv").read_bytes()


def test_seed_flag_changes_result(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _, out_a = run(a, "minimize", RING_MIN, "--seed", "1")
    _, out_b = run(b, "minimize", RING_MIN, "--seed", "2")
    assert (out_a / "field.csv").read_bytes() != (out_b / "field.csv").read_bytes()


def test_environment_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CURVEMAG_GRID__N", "24")
    code, out = run(tmp_path, "frame", RING16)
    assert code == 0
    assert read_csv(out / "frame.csv").shape[0] == 25
    # explicit overrides beat the environment
    cfg = load_config(tmp_path / "run.toml", overrides={"grid": {"n": 8}},
                      environ={"CURVEMAG_GRID__N": "24"})
    assert cfg.grid.n == 8


def test_load_config_errors(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[curve\n")
    with pytest.raises(ConfigError, match="TOML"):
        load_config(p)
    with pytest.raises(ConfigError, match="perturbation.kind"):
        load_config(None, overrides={"perturbation": {"kind": "heisenberg"}})


def test_analytic_ring_family(tmp_path):
    code, out = run(tmp_path, "analytic", """
[curve]
kind = "ring"
radius = 1.0
[grid]
n = 512
[perturbation]
kind = "dmi"
kappa = 1.7320508075688772
[minimize]
demag = false
[analytic]
oracle = "ring_family"
amplitude = 0.6
""")
    assert code == 0
    d = json.loads((out / "analytic.json").read_text())
    assert d["omega"] == pytest.approx(2.0)
    assert d["discrete_energy"]["total"] < 1e-7


def test_analytic_non_integer_omega_is_numeric_failure(tmp_path, capsys):
    code, _ = run(tmp_path, "analytic", """
[curve]
kind = "ring"
[perturbation]
kind = "dmi"
kappa = 1.0
[analytic]
oracle = "ring_family"
amplitude = 0.5
""")
    assert code == 3
    assert "not an integer" in capsys.readouterr().err


def test_analytic_ring_demag_zero_kappa_exits_2(tmp_path):
    code, _ = run(tmp_path, "analytic", """
[curve]
kind = "ring"
[perturbation]
kind = "dmi"
kappa = 0.0
[analytic]
oracle = "ring_demag"
""")
    assert code == 2


def test_gamma_command(tmp_path):
    code, out = run(tmp_path, "gamma", """
[curve]
kind = "ring"
radius = 1.0
[perturbation]
kind = "dmi"
kappa = 0.5
[cross_section]
kind = "disk"
[gamma]
epsilons = [0.2, 0.1]
v0 = "ring_minimizer"
""")
    assert code == 0
    rows = read_csv(out / "gamma.csv")
    assert rows.shape == (2, 5)
    assert rows[1, 4] < rows[0, 4]
    assert json.loads((out / "gamma.json").read_text())["strictly_decreasing"]


def test_minimize_wall_writes_fit_and_plot(tmp_path):
    pytest.importorskip("matplotlib")
    code, out = run(tmp_path, "minimize", """
[curve]
kind = "line"
length = 30.0
[grid]
n = 300
[perturbation]
kind = "dmi"
kappa = 0.36
[cross_section]
kind = "disk"
panels = 512
[boundary]
kind = "pinned"
left = [-1.0, 0.0, 0.0]
right = [1.0, 0.0, 0.0]
[minimize]
init = "wall_ansatz"
init_width = 2.0
[output]
plot = true
""")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert "wall_fit" in rep and rep["converged"]
    assert (out / "field.svg").read_text().lstrip().startswith("<?xml")


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "curvemag.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("curvemag ")


CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.output.dir.startswith("out/")


def test_benchmark_quick_run(capsys):
    spec = importlib.util.spec_from_file_location(
        "bench_kernels", Path(__file__).parent.parent / "benchmarks" / "bench_kernels.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--quick", "--repeat", "1"]) == 0
    assert "chain_dmi" in capsys.readouterr().out
