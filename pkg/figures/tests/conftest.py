import subprocess
import sys

import pytest


def cli(args):
    """Drive the experiment CLI; the figure layer consumes only its outputs."""
    proc = subprocess.run(
        [sys.executable, "-m", "roughfem.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def galerkin_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "galerkin"
    cli(["galerkin-1d", "--M", "16", "--h", "6", "--fine", "10",
         "--seed", "5", "--out", str(out)])
    return out


@pytest.fixture(scope="session")
def quadrature_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "quadrature"
    cli(["quadrature-1d", "--M", "16", "--h", "4", "5", "6", "--fine", "10",
         "--seed", "6", "--out", str(out)])
    return out


@pytest.fixture(scope="session")
def field_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "field"
    cli(["sample-field", "--level", "5", "--seed", "7", "--out", str(out)])
    return out


@pytest.fixture(scope="session")
def rate_run_2d(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "g2d"
    cli(["galerkin-2d", "--M", "2", "--h", "3", "4", "--field-level", "6",
         "--ref-level", "5", "--seed", "8", "--out", str(out)])
    return out
