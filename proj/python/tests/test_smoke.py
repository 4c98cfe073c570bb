import math
import os
import subprocess
from pathlib import Path

import pytest

import fracwave

ROOT = Path(__file__).resolve().parents[2]


def test_caputo_exact_on_linear():
    dt = 1.0 / 64
    history = [k * dt for k in range(65)]
    got = fracwave.caputo_apply(history, 0.5, dt)
    assert got == pytest.approx(fracwave.caputo_monomial_reference(1, 0.5, 1.0), abs=1e-12)


def test_forward_matches_standing_wave():
    cfg = "[run]\nkind = forward\n[mesh]\nn_cells = 100\n[time]\nT = 1\n[initial]\nu0 = sin:1\n"
    nodes, dt, rows = fracwave.solve_forward(cfg)
    t = dt * (len(rows) - 1)
    mid = len(nodes) // 2
    assert rows[-1][mid] == pytest.approx(math.sin(math.pi * nodes[mid]) * math.cos(math.pi * t), abs=1e-3)


def test_bad_config_raises():
    with pytest.raises(fracwave.ConfigError):
        fracwave.solve_forward("[run]\nkind = nonsense\n")


def test_run_and_report(tmp_path):
    artifacts = fracwave.run(ROOT / "configs" / "forward.ini", tmp_path)
    assert "field.csv" in artifacts
    assert (tmp_path / "manifest.json").exists()
    assert isinstance(fracwave.report(tmp_path), list)


def test_cli_version():
    binary = os.environ.get("FRACWAVE_BIN")
    if not binary:
        pytest.skip("FRACWAVE_BIN not set")
    out = subprocess.run([binary, "--version"], capture_output=True, text=True, check=True)
    assert fracwave.__version__ in out.stdout
