import json
import subprocess
import sys

import numpy as np
import pytest

from kitaevlab import cli, io


def run(tmp_path, *args):
    return cli.main(list(args) + ["--output-dir", str(tmp_path)])


def test_spectrum_values(tmp_path):
    code = run(tmp_path, "spectrum", "--L", "4", "--U", "1", "--sector", "staggered-A", "--no-plot")
    assert code == cli.EXIT_OK
    header, rows = io.read_csv(tmp_path / "spectrum.csv")
    assert header == ["k", "Lambda"]
    lam = [float(r[1]) for r in rows]
    np.testing.assert_allclose(lam, [2 * (np.sqrt(2) + 1), 2, 2, 2 * (np.sqrt(2) - 1)], rtol=1e-14)
    meta = json.loads((tmp_path / "spectrum.json").read_text())
    assert meta["config"]["L"] == 4 and meta["results"]["sector"] == [1, -1, -1, 1]
    first = (tmp_path / "spectrum.csv").read_text().splitlines()[0]
    assert first.startswith("# ") and json.loads(first[2:])["config"]["sector"] == "staggered-A"


def test_png_written_by_default(tmp_path):
    assert run(tmp_path, "spectrum", "--L", "6", "--U", "0.5") == 0
    assert (tmp_path / "spectrum.png").stat().st_size > 1000


@pytest.mark.parametrize("args", [
    ["spectrum", "--L", "5"],
    ["spectrum", "--boundary", "twisted"],
    ["spectrum", "--L", "4", "--sector", "1,1,1"],
    ["phase-scan", "--u-step", "0"],
    ["ramp", "--method", "euler"],
    ["oracle", "--L", "8"],
    ["quench", "--U", "abc"],
])
def test_invalid_input_exit_code(tmp_path, args, capsys):
    assert run(tmp_path, *args) == cli.EXIT_INVALID
    assert "error" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


def test_missing_command_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_audit_failure_exit_code(tmp_path):
    code = run(tmp_path, "oracle", "--L", "2", "--U", "0.8", "--tol", "0")
    assert code == cli.EXIT_AUDIT
    header, rows = io.read_csv(tmp_path / "oracle.csv")
    assert any(r[3] == "0" for r in rows)


def test_oracle_passes(tmp_path, capsys):
    assert run(tmp_path, "oracle", "--L", "2", "--U", "0.8", "--lambda", "0.3") == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_config_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[model]\nL = 6\nU = 0.5\n\n[spectrum]\nU = 2.0\n")
    cfg = cli.parse_config(["spectrum", "--config", str(ini), "--L", "8"], environ={})
    assert cfg.values["L"] == 8 and cfg.sources["L"] == "flag"
    assert cfg.values["U"] == [2.0] and cfg.sources["U"] == "file"
    assert cfg.values["t"] == 1.0 and cfg.sources["t"] == "default"


@pytest.mark.parametrize("text", ["[spectrum]\nbogus = 1\n", "[nonsense]\nL = 4\n", "[spectrum]\nL = four\n"])
def test_config_errors(tmp_path, text):
    ini = tmp_path / "bad.ini"
    ini.write_text(text)
    assert cli.main(["spectrum", "--config", str(ini), "--output-dir", str(tmp_path)]) == cli.EXIT_INVALID


def test_output_dir_from_environment(tmp_path):
    target = tmp_path / "envout"
    cfg = cli.parse_config(["majorana-number", "--U-values", "1,3"], environ={cli.ENV_OUTPUT: str(target)})
    assert cli.run(cfg) == 0
    _, rows = io.read_csv(target / "majorana-number.csv")
    assert [int(r[1]) for r in rows] == [-1, 1]


def test_global_options_after_command(tmp_path):
    assert cli.main(["majorana-number", "--no-plot", "--prefix", "mn", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "mn.csv").exists()


def test_outputs_independent_of_workers(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ["phase-scan", "--L", "8", "--u-step", "0.5", "--lambda-step", "0.1", "--no-plot"]
    assert cli.main(common + ["--output-dir", str(a), "--workers", "1"]) == 0
    assert cli.main(common + ["--output-dir", str(b), "--workers", "4"]) == 0
    for name in ("phase-scan.csv", "phase-scan.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_cleanup_on_failure(tmp_path, monkeypatch):
    def broken(cfg, out):
        io.write_csv(out.path(".csv"), ["x"], [(1,)])
        raise cli.ModelError("late failure")

    monkeypatch.setitem(cli.DISPATCH, "spectrum", broken)
    assert run(tmp_path, "spectrum") == cli.EXIT_INVALID
    assert not (tmp_path / "spectrum.csv").exists()


def test_quench_at_zero_interaction_flagged(tmp_path):
    code = run(tmp_path, "quench", "--L", "20", "--U", "0", "--tau-max", "1", "--dtau", "0.25", "--no-plot")
    assert code == 0
    res = json.loads((tmp_path / "quench.json").read_text())["results"]["U=0"]
    assert res["flagged_zero"] and res["v_C_final"] == 0.0


def test_quench_velocity_curve(tmp_path):
    code = run(tmp_path, "quench", "--L", "40", "--U", "0.5,1.5", "--tau-max", "3", "--dtau", "0.5")
    assert code == 0
    for name in ("quench.csv", "quench.png", "quench_U0.5_trajectory.csv", "quench_U1.5_velocity.csv",
                 "quench_U1.5_trajectory.png"):
        assert (tmp_path / name).exists(), name


def test_small_ramp(tmp_path):
    code = run(tmp_path, "ramp", "--L", "20", "--tau-Q", "2,4", "--U-end", "1", "--n-out", "5")
    assert code == 0
    header, rows = io.read_csv(tmp_path / "ramp_summary.csv")
    assert header[0] == "tau_Q" and len(rows) == 2
    assert "exponent_excitation" in json.loads((tmp_path / "ramp.json").read_text())["results"]
    assert (tmp_path / "ramp.png").exists()


def test_beta_scan_and_correlators(tmp_path):
    assert run(tmp_path, "beta-scan", "--N-values", "2,4", "--no-plot") == 0
    _, rows = io.read_csv(tmp_path / "beta-scan.csv")
    assert float(rows[0][1]) == pytest.approx(0.5 ** 0.5 / 2, rel=1e-3)
    assert run(tmp_path, "correlators", "--L", "8", "--U", "-3", "--no-plot") == 0
    _, pairs = io.read_csv(tmp_path / "correlators_pairs.csv")
    assert len(pairs) == 7


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kitaevlab", "spectrum", "--L", "2", "--no-plot",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
