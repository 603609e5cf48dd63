"""Shared pytest fixtures."""

import numpy as np
import pytest

from src.basis import ModelDomain
from src.basis import build_basis
from src.functional import SystemProblem
from src.functional import default_grid_size


def make_problem(s: float = 0.5, p: float = 3.0, q: float = 3.0, **kwargs) -> SystemProblem:
    """Factory for SystemProblem on the unit interval with sensible defaults."""
    truncation = kwargs.pop("truncation", 32)
    defaults = {
        "domain": ModelDomain.interval(1.0, grid_size=default_grid_size(max(truncation, 1))),
        "operator": "spectral",
        "lam": 0.0,
        "mu": 0.0,
        "alpha": s,
    }
    return SystemProblem(s=s, p=p, q=q, truncation=truncation, **{**defaults, **kwargs})


@pytest.fixture
def interval():
    """Unit interval with 129 grid points."""
    return ModelDomain.interval(1.0, grid_size=129)


@pytest.fixture
def basis(interval):
    """First 32 Dirichlet sine modes of the unit interval."""
    return build_basis(interval, 32)


@pytest.fixture
def reference_problem():
    """s = 1/2, p = q = 3, lam = mu = 0, K = 32 on the unit interval."""
    return make_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def run_toml(tmp_path):
    """Writes a minimal TOML run configuration and returns its path."""

    def _write(body: str = "", command: str = "solve") -> object:
        path = tmp_path / "run.toml"
        path.write_text(
            f'command = "{command}"\nseed = 0\n\n'
            '[problem]\ndomain = "interval"\nextents = [1.0]\noperator = "spectral"\n'
            f"s = 0.5\np = 3\nq = 3\n{body}",
            encoding="utf-8",
        )
        return path

    return _write
