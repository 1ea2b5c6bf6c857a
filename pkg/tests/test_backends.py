import os
import subprocess
import sys

import pytest

from cachesig import _kernels


def run_cli(backend, args):
    env = dict(os.environ, CACHESIG_BACKEND=backend)
    out = subprocess.run([sys.executable, "-m", "cachesig.cli", *args],
                         capture_output=True, text=True, env=env, check=True)
    return out.stdout


def test_backend_name_reports_choice():
    assert _kernels.backend_name() in ("numba", "python")


@pytest.mark.parametrize("args", [
    ["amp-sweep", "--iterations", "500", "--trials", "30", "--seed", "13"],
    ["counter", "--sizes", "16", "--trials", "20", "--seed", "13"],
])
def test_backends_bit_identical(args):
    """Both kernel backends consume the same pre-drawn uniforms, so any
    experiment output matches byte for byte."""
    assert run_cli("python", args) == run_cli("numba", args)


def test_bad_backend_env_rejected():
    env = dict(os.environ, CACHESIG_BACKEND="cuda")
    out = subprocess.run([sys.executable, "-c", "import cachesig._kernels"],
                         capture_output=True, text=True, env=env)
    assert out.returncode != 0
    assert "CACHESIG_BACKEND" in out.stderr
