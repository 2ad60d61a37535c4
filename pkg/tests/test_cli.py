import json
import subprocess
import sys

import pytest

from funcgeom.cli import SCENARIOS, ConfigError, RunConfig, main


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "funcgeom", *args], capture_output=True, text=True, cwd=cwd)


def test_list():
    p = run("--list")
    assert p.returncode == 0
    assert [line.split()[0] for line in p.stdout.splitlines()] == list(SCENARIOS)


def test_curvature_prints_values(tmp_path):
    p = run("curvature", "--out", str(tmp_path))
    assert p.returncode == 0, p.stderr
    assert "sectional curvature 1.0" in p.stdout
    assert "radius 1" in p.stdout
    assert (tmp_path / "curvature.json").exists()


def test_invariants_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "invariants", "seed": 7}))
    for d in ("a", "b"):
        assert run("invariants", "--config", str(cfg), "--out", str(tmp_path / d)).returncode == 0
    assert (tmp_path / "a" / "invariants.json").read_bytes() == (tmp_path / "b" / "invariants.json").read_bytes()
    assert (tmp_path / "a" / "invariants_invariants.csv").read_bytes() == \
        (tmp_path / "b" / "invariants_invariants.csv").read_bytes()


def test_tolerance_failure_exit_code(tmp_path):
    p = run("geodesic-check", "--tolerance", "geodesic.fd=1e-12", "--out", str(tmp_path))
    assert p.returncode == 1
    err = json.loads(p.stderr.strip().splitlines()[-1])
    assert err["error"] == "tolerance"
    assert [c["name"] for c in err["failed"]] == ["geodesic.fd"]


@pytest.mark.parametrize("args", [
    ["curvature", "--tolerance", "bogus=1"],
    ["curvature", "--tolerance", "curvature.value=-1"],
    ["curvature", "--tolerance", "curvature.value"],
    ["spectrometer", "--n", "2"],
    ["no-such-scenario"],
    [],
])
def test_config_errors(args, tmp_path):
    p = run(*args, "--out", str(tmp_path)) if args else run()
    assert p.returncode == 2
    err = json.loads(p.stderr.strip().splitlines()[-1])
    assert err["error"] == "config"


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": "pauli", "colour": "blue"}')
    assert main(["pauli", "--config", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["pauli", "--config", str(bad)]) == 2
    assert main(["pauli", "--config", str(tmp_path / "missing.json")]) == 2
    bad.write_text('{"scenario": "curvature"}')
    assert main(["pauli", "--config", str(bad)]) == 2
    bad.write_text('{"scenario": "pauli", "params": {"mu_b0": 1.0, "field": 2}}')
    assert main(["pauli", "--config", str(bad)]) == 2


def test_full_config(tmp_path):
    cfg = {"scenario": "embed-metric", "grid": {"dim": 1, "n": 16, "extent": 8.0, "periodic": True},
           "kernel": {"family": "gaussian", "alpha": 2.0}, "tolerances": {"embed.fd": 1e-3},
           "output_dir": str(tmp_path / "o"), "seed": 4, "params": {"points": 3}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["embed-metric", "--config", str(path)]) == 0
    data = json.loads((tmp_path / "o" / "embed_metric.json").read_text())
    assert data["passed"]
    assert {c["name"]: c["tolerance"] for c in data["checks"]}["embed.fd"] == 1e-3


@pytest.mark.parametrize("name", ["spectrometer", "two-slit", "pauli", "delta-scan", "eigen-covariance"])
def test_scenarios_pass(name, tmp_path):
    assert main([name, "--out", str(tmp_path)]) == 0


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"grid": {"dim": 2}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"kernel": {"family": "laplace"}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"seed": -1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])
    assert RunConfig.from_dict({"scenario": "curvature"}).seed == 0
