import json
import shutil
import subprocess
import sys

import pytest

from toa_lab import bundle
from toa_lab.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main

FAST = {
    "grid": {"n": 1024},
    "tau": {"points": 60},
    "eeqt_kappas": [4.0, 8.0],
    "kappas": [4.0, 8.0, 16.0],
    "horizon": 1.5,
    "times": [0.0, 1.0],
    "lindblad": {"n": 64, "steps": 1500},
    "geometry": {"points": [5, 7]},
}

EXPECTED = {
    "evolve": ["fig1"],
    "momentum": ["fig2"],
    "kijowski": ["fig3-fig4"],
    "eeqt": ["fig5", "fig7"],
    "sweep": ["fig6"],
    "compare": ["fig8"],
    "lindblad": ["lindblad"],
    "geometry": ["geometry"],
}


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.json"
    path.write_text(json.dumps(FAST))
    return str(path)


@pytest.mark.parametrize("experiment", sorted(EXPECTED))
def test_every_experiment_writes_its_bundles(experiment, fast_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main([experiment, "--config", fast_config, "--out", str(out)]) == EXIT_OK
    written = sorted(p.stem for p in out.iterdir())
    assert written == sorted(EXPECTED[experiment])
    for name in written:
        b = bundle.read(out / f"{name}.csv")
        assert b.metadata["experiment"] == experiment
        assert b.metadata["config"]["grid"]["n"] == 1024
        assert "code_version" in b.metadata and "backend" in b.metadata
        assert b.data.shape[0] > 0


def test_reruns_are_byte_identical(fast_config, tmp_path):
    # the output path is part of the recorded config, so reuse it
    out = tmp_path / "out"
    assert main(["compare", "--config", fast_config, "--out", str(out)]) == EXIT_OK
    first = (out / "fig8.csv").read_bytes()
    assert main(["compare", "--config", fast_config, "--out", str(out)]) == EXIT_OK
    assert (out / "fig8.csv").read_bytes() == first


def test_json_to_stdout(fast_config, capsys):
    assert main(["kijowski", "--config", fast_config, "--out", "-", "--format", "json"]) == EXIT_OK
    b = bundle.from_json(capsys.readouterr().out)
    assert b.figure_id == "fig3-fig4"
    assert b.metadata["tau_points"] == 60


def test_flags_override_config(fast_config, capsys):
    args = ["sweep", "--config", fast_config, "--kappa", "2", "8", "--horizon", "1.0", "--out", "-"]
    assert main(args) == EXIT_OK
    b = bundle.from_csv(capsys.readouterr().out)
    assert list(b.column("kappa")) == [2.0, 8.0]
    assert b.metadata["horizon"] == 1.0


def test_validate_only(capsys):
    assert main(["kijowski", "--validate"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "config OK"


def test_invalid_config_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dt": 0, "grid": {"n": 1000}}))
    assert main(["evolve", "--config", str(path)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "dt must be positive" in err
    assert "grid.n must be a power of two >= 2 (got 1000)" in err


@pytest.mark.parametrize("argv", [["evolve", "--dt", "-1"], ["compare", "--kappa", "4", "8"],
                                  ["evolve", "--config", "/nonexistent/cfg.json"]])
def test_bad_arguments_exit_one(argv):
    assert main(argv) == EXIT_INVALID


def test_unknown_config_key_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"grid": {"size": 5}}))
    assert main(["evolve", "--config", str(path)]) == EXIT_INVALID
    assert "grid.size: unknown key" in capsys.readouterr().err


def test_oversized_density_matrix_exits_two(fast_config, tmp_path, capsys):
    path = tmp_path / "big.json"
    path.write_text(json.dumps({**FAST, "lindblad": {"n": 512, "steps": 10}}))
    assert main(["lindblad", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME
    assert "exceeds" in capsys.readouterr().err


def test_unwritable_output_exits_two(fast_config, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["geometry", "--config", fast_config, "--out", str(blocker / "sub")]) == EXIT_RUNTIME


def test_usage_errors_come_from_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["teleport"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["evolve", "--config", "a.json", "--paper-defaults"])


def test_console_script_installed():
    exe = shutil.which("toa-lab")
    cmd = [exe] if exe else [sys.executable, "-m", "toa_lab.cli"]
    proc = subprocess.run([*cmd, "geometry", "--validate"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "config OK"
