import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ihosim import ConfigError
from ihosim.cli import fmt, main
from ihosim.config import apply_override, build_config, parse_config, read_sections

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

GOLDEN = {
    "otoc_n0.csv": "t_dimless,C_over_x0sq,C_SI_m2",
    "scatter_density.csv": "x_dimless,density_T,density_R",
    "scatter_transmission.csv": "eps0,P_T,P_R,P_T_analytic",
    "squeeze.csv": "n,P_squeezed,P_thermal",
    "measure_signal.csv": "t,P_down_phase0,P_down_phase90",
    "measure_density.csv": "x_dimless,density_reconstructed,density_true",
    "smatrix.csv": "eps,T2,R2",
    "duality.csv": "fprime,gprime,kappa,T_hawking",
}

QUICK = {
    "otoc": "[numerics]\ndim = 120\ntimes = 0:1:11\n[otoc]\nlevels = 0\n",
    "squeeze": "[numerics]\ndim = 120\n",
    "smatrix": "[smatrix]\neps = -1:1:5\n",
    "duality": "[duality]\nfprime = 1, 2\ngprime = 1, 0.5\n",
    "measure": "[numerics]\nx_max = 40\nn_points = 4096\n[measure]\nt_max = 4\nn_times = 401\n",
    "rwa": "[numerics]\ndim = 40\n[rwa]\nlambda_t_max = 0.2\nn_samples = 5\n",
}


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(tmp_path, experiment, text, *extra):
    out = tmp_path / f"out_{experiment}"
    code = main([experiment, "--config", _write(tmp_path, text, f"{experiment}.ini"), "--out", str(out),
                 *extra])
    return code, out


def _header(path):
    return path.read_text().splitlines()[0]


@pytest.mark.parametrize("experiment", sorted(QUICK))
def test_quick_runs_write_artifacts(tmp_path, experiment):
    code, out = _run(tmp_path, experiment, QUICK[experiment])
    assert code == 0
    for name in ("manifest.json", "summary.json", "summary.txt"):
        assert (out / name).exists()
    for csv in out.glob("*.csv"):
        if csv.name in GOLDEN:
            assert _header(csv) == GOLDEN[csv.name]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["software"]["kernel_backend"] in ("numba", "numpy")
    assert manifest["config"]["derived"]["T_dimless"] == pytest.approx(1 / (2 * np.pi))


@pytest.mark.slow
def test_scatter_headers(tmp_path):
    code, out = _run(tmp_path, "scatter", (CONFIGS / "scatter.ini").read_text())
    assert code == 0
    for name in ("scatter_density.csv", "scatter_transmission.csv"):
        assert _header(out / name) == GOLDEN[name]
    assert _header(out / "scatter_probe.csv") == "t_dimless,density"


def test_output_is_deterministic(tmp_path):
    a = _run(tmp_path, "otoc", QUICK["otoc"])[1]
    b_dir = tmp_path / "again"
    b_dir.mkdir()
    b = _run(b_dir, "otoc", QUICK["otoc"])[1]
    for f in sorted(a.iterdir()):
        if f.name == "manifest.json":
            ma, mb = (json.loads(p.read_text()) for p in (f, b / f.name))
            ma.pop("config_source"), mb.pop("config_source")
            assert ma == mb
        else:
            assert f.read_bytes() == (b / f.name).read_bytes()


def test_csv_number_format():
    assert fmt(0.1) == "0.1"
    assert fmt(np.float64(1 / 3)) == "0.333333333333333"
    assert fmt(np.int64(7)) == "7"


def test_json_format(tmp_path):
    code, out = _run(tmp_path, "smatrix", QUICK["smatrix"] + "[output]\nformat = json\n")
    assert code == 0
    data = json.loads((out / "smatrix.json").read_text())
    assert data["columns"] == ["eps", "T2", "R2"] and len(data["rows"]) == 5


def test_sweep_creates_subdirectories(tmp_path, capsys):
    code, out = _run(tmp_path, "squeeze", QUICK["squeeze"], "--sweep", "lambda_t=0.3,0.6")
    assert code == 0
    for v in ("0.3", "0.6"):
        summary = json.loads((out / f"lambda_t={v}" / "summary.json").read_text())
        assert summary["lambda_t"] == float(v)


@pytest.mark.parametrize("text, needle", [
    ("[numerics]\ndim = 1\n", "dim"),
    ("[physical]\nxi = 1.5\n[numerics]\ndim = 50\n", "ξ must be in (0,1)"),
    ("[numerics]\n", "missing required key 'dim'"),
    ("[numerics]\ndim = 50\nbogus = 3\n", "unknown key"),
    ("[numerics]\ndim = 50\n[scatter]\neps0 = 1\n", "foreign section"),
    ("[numerics]\ndim = 50\n[squeeze]\nlambda_t = abc\n", "lambda_t"),
    ("not a config", "malformed"),
])
def test_config_errors_exit_2(tmp_path, capsys, text, needle):
    code, _ = _run(tmp_path, "squeeze", text)
    assert code == 2
    assert needle in capsys.readouterr().err


def test_numerical_guard_exit_3(tmp_path, capsys):
    code, _ = _run(tmp_path, "squeeze", "[numerics]\ndim = 10\n[squeeze]\nlambda_t = 3\n")
    assert code == 3
    assert "dim" in capsys.readouterr().err


def test_io_errors_exit_4(tmp_path):
    assert main(["smatrix", "--config", str(tmp_path / "missing.ini")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = _write(tmp_path, QUICK["smatrix"])
    assert main(["smatrix", "--config", cfg, "--out", str(blocker / "sub")]) == 4


def test_apply_override_resolution():
    sec = {"numerics": {"dim": "10"}}
    assert apply_override(sec, "dim", "20")["numerics"]["dim"] == "20"
    assert sec["numerics"]["dim"] == "10"
    with pytest.raises(ConfigError):
        apply_override(sec, "levels", "1")
    assert apply_override(sec, "otoc.levels", "1")["otoc"]["levels"] == "1"
    with pytest.raises(ConfigError):
        apply_override(sec, "nope", "1")


def test_parse_config_reads_run_section(tmp_path):
    p = _write(tmp_path, "[run]\nexperiment = smatrix\n[smatrix]\neps = 0, 1  # two points\n")
    cfg = parse_config(p)
    assert cfg.experiment == "smatrix" and cfg.params["eps"] == [0.0, 1.0]
    with pytest.raises(ConfigError):
        parse_config(p, "duality")


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.ini")):
        experiment = path.stem.split("_")[0]
        build_config(experiment, read_sections(path), str(path))


def test_console_script_entry_point(tmp_path):
    cfg = _write(tmp_path, QUICK["smatrix"])
    res = subprocess.run([sys.executable, "-m", "ihosim.cli", "smatrix", "--config", cfg, "--out",
                          str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0 and "max_unitarity_defect" in res.stdout
