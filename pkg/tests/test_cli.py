import json
from pathlib import Path

import numpy as np
import pytest

from northeast import cli, manifest
from northeast.lattice import read_pgm


def _run(argv):
    return cli.main(argv)


def _only_run_dir(out: Path, experiment: str) -> Path:
    dirs = sorted((out / experiment).iterdir())
    assert dirs, f"no runs under {out / experiment}"
    return dirs[-1]


def _load(run_dir: Path) -> manifest.RunManifest:
    return manifest.load_manifest(run_dir / manifest.MANIFEST_NAME)


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        _run(["simulate", "--p", "1.5", "--window", "8x8", "--t", "5"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        _run(["simulate", "--window", "0x8"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        _run(["experiment", "nonsense"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        _run(["simulate", "--sample-times", "5,2", "--t", "9"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_simulate_outputs_and_manifest(tmp_path):
    out = tmp_path / "runs"
    code = _run(["simulate", "--p", "0.8", "--window", "16x16",
                 "--t", "5", "--seed", "11",
                 "--sample-times", "2", "--out", str(out)])
    assert code == 0
    run_dir = _only_run_dir(out, "simulate-graphical")
    man = _load(run_dir)
    assert man.command == "simulate"
    assert man.seed == 11
    assert set(man.outputs) == {"snapshot-2.pgm", "snapshot-5.pgm",
                                "resets.csv"}
    assert manifest.verify_outputs(man, run_dir) == []
    data, comment = read_pgm(run_dir / "snapshot-5.pgm")
    assert data.shape == (16, 16)
    assert "t=5.0" in comment
    assert man.summary["resets"] > 0


def test_simulate_engines_agree_on_final_snapshot(tmp_path):
    out = tmp_path / "runs"
    args = ["--p", "0.8", "--window", "12x12", "--t", "6",
            "--seed", "4", "--out", str(out)]
    assert _run(["simulate", *args]) == 0
    assert _run(["simulate", *args, "--engine", "backward"]) == 0
    a = _only_run_dir(out, "simulate-graphical") / "snapshot-6.pgm"
    b = _only_run_dir(out, "simulate-backward") / "snapshot-6.pgm"
    assert a.read_bytes() == b.read_bytes()


def test_simulate_backward_budget_exhaustion_exits_1(tmp_path, capsys):
    out = tmp_path / "runs"
    code = _run(["simulate", "--p", "0.8", "--window", "12x12",
                 "--t", "6", "--seed", "4", "--engine", "backward",
                 "--node-budget", "5", "--out", str(out)])
    assert code == 1
    assert "budget" in capsys.readouterr().err


def test_replay_reproduces_and_detects_tampering(tmp_path, capsys):
    out = tmp_path / "runs"
    _run(["simulate", "--p", "0.7", "--window", "10x10", "--t", "4",
          "--seed", "9", "--out", str(out)])
    run_dir = _only_run_dir(out, "simulate-graphical")
    man_path = run_dir / manifest.MANIFEST_NAME
    assert _run(["replay", str(man_path), "--out", str(out)]) == 0

    # corrupt the recorded digest: replay must notice
    data = json.loads(man_path.read_text())
    data["outputs"]["resets.csv"] = "0" * 64
    man_path.write_text(json.dumps(data))
    assert _run(["replay", str(man_path), "--out", str(out)]) == 1
    assert "mismatch" in capsys.readouterr().err


def test_experiment_replay_and_config_file(tmp_path):
    out = tmp_path / "runs"
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("p=0.7\nwindow=8x8\nt=3\nsample_times=1,3\n"
                   "replicas=40\n# comment\n")
    code = _run(["experiment", "mixing", "--config", str(cfg),
                 "--seed", "2", "--out", str(out)])
    assert code == 0
    run_dir = _only_run_dir(out, "mixing")
    man = _load(run_dir)
    assert man.config["p"] == 0.7          # file value applied
    assert man.config["replicas"] == 40
    assert {"mixing.csv", "patterns.csv"} <= set(man.outputs)
    assert _run(["replay", str(run_dir / manifest.MANIFEST_NAME),
                 "--out", str(out)]) == 0


def test_config_file_flags_win(tmp_path):
    out = tmp_path / "runs"
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("p=0.7\nseed=5\n")
    _run(["experiment", "freeze", "--config", str(cfg), "--p", "0.3",
          "--window", "6x6", "--t", "2", "--replicas", "5",
          "--out", str(out)])
    man = _load(_only_run_dir(out, "freeze"))
    assert man.config["p"] == 0.3          # explicit flag beats the file
    assert man.seed == 5                   # file default still applies


def test_config_file_unknown_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("pp=0.7\n")
    with pytest.raises(SystemExit) as exc:
        _run(["experiment", "freeze", "--config", str(cfg)])
    assert exc.value.code == 2
    capsys.readouterr()


def test_experiment_beta_c_summary(tmp_path):
    out = tmp_path / "runs"
    code = _run(["experiment", "beta-c", "--trials", "1000",
                 "--depth", "100", "--tolerance", "0.1",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    man = _load(_only_run_dir(out, "beta-c"))
    s = man.summary
    assert s["beta_c_high"] - s["beta_c_low"] <= 0.1 + 1e-12
    assert "probes.csv" in man.outputs


def test_validate_fast_passes_and_fault_injection_fails(capsys):
    assert cli.run_validate("fast") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert cli.run_validate("fast", inject_fault=True) == 1
    out = capsys.readouterr().out
    assert "FAIL cross-engine-equality" in out


def test_shape_experiment_raster_outputs(tmp_path):
    out = tmp_path / "runs"
    code = _run(["experiment", "shape", "--p", "0.8",
                 "--window", "40x40", "--t", "20",
                 "--sample-times", "10,20", "--seed", "7",
                 "--out", str(out)])
    assert code == 0
    run_dir = _only_run_dir(out, "shape")
    man = _load(run_dir)
    assert {"r-10.pgm", "r-20.pgm", "composite.pgm",
            "shape-hausdorff.csv"} <= set(man.outputs)
    assert man.summary["sizes"] == sorted(man.summary["sizes"])
