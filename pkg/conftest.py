"""Shared pytest fixtures; the repository root is put on sys.path for the flat packages."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from splat.gaussian import GaussianScene  # noqa: E402
from splat.procedural import generate_blob  # noqa: E402

MINIMAL_SCENE = """
[materials.jelly]
youngs_modulus = 1e4

[[objects]]
name = "blob"
material = "jelly"

[objects.procedural]
count = 20
size = 0.2
seed = 3
"""

# ~1000 Gaussians dropped onto a sticky floor for 120 frames on a 64^3 grid
DROP_SCENE = """
[simulation]
frame_rate = 48.0
duration = 2.5
kernel = "quadratic"
deterministic = true
damping = 3.0

[grid]
resolution = 64
lower = [-0.6, -0.6, -0.1]
upper = [0.6, 0.6, 1.1]

[materials.jelly]
youngs_modulus = 1e4

[[objects]]
name = "blob"
material = "jelly"

[objects.procedural]
count = 1000
center = [0.0, 0.0, 0.6]
size = 0.2
seed = 11

[[colliders]]
kind = "halfspace"
point = [0.0, 0.0, 0.0]
normal = [0.0, 0.0, 1.0]
surface = "sticky"
"""


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_scene() -> GaussianScene:
    return generate_blob(50, shape="sphere", size=0.3, seed=1)


@pytest.fixture
def output_dir(tmp_path: Path) -> Path:
    out = tmp_path / "out"
    out.mkdir()
    return out


@pytest.fixture
def write_toml(tmp_path: Path):
    """Write a TOML document to a temporary file and return its path."""

    def _write(text: str, name: str = "scene.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write