"""Generates a fresh dtnlab run directory once per session via the CLI.

The plotting package is exercised strictly through the artifacts the dtnlab
command writes; nothing here imports the numerical package.
"""
import subprocess

import pytest

FAST = """
[geometry]
n_theta = 64
n_r = 32
n_modes = 8

[evolution]
variant = "as-printed"
"""

ORACLE = """
[psi]
kind = "fourier"
modes = [[3, 0.5, 0.0], [-3, 0.5, 0.0]]

[oracle]
n_r = 128
"""


def _run(args, cwd):
    proc = subprocess.run(
        ["dtnlab", *args], cwd=cwd, capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("dtnlab-run")
    out = root / "run"
    fast = root / "fast.toml"
    fast.write_text(FAST)
    oracle = root / "oracle.toml"
    oracle.write_text(ORACLE)
    _run(["--out", str(out), "validate"], root)
    _run(["--config", str(fast), "--out", str(out), "spectrum"], root)
    _run(["--config", str(fast), "--out", str(out), "evolve-linear"], root)
    _run(["--config", str(oracle), "--out", str(out), "shape-derivative-check"],
         root)
    return out
