"""Small builders shared by the tests."""

from pathlib import Path

import numpy as np
import pandas as pd

from splat.gaussian import GaussianScene, SceneMetadata


def random_rotations(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniformly random proper rotations."""
    q, r = np.linalg.qr(rng.normal(size=(n, 3, 3)))
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    q[np.linalg.det(q) < 0, :, 0] *= -1.0
    return q


def random_flat_scene(rng: np.random.Generator, n: int, eps: float = 1e-6, sh_rest: int = 0) -> GaussianScene:
    scales = np.empty((n, 3))
    scales[:, 0] = eps
    scales[:, 1:] = rng.uniform(0.05, 1.0, size=(n, 2))
    return GaussianScene(
        means=rng.normal(size=(n, 3)),
        rotations=random_rotations(rng, n),
        scales=scales,
        opacities=rng.uniform(0.05, 0.95, size=n),
        sh_dc=rng.normal(size=(n, 3)),
        sh_rest=rng.normal(size=(n, sh_rest)),
        normals=np.zeros((n, 3)),
        metadata=SceneMetadata(epsilon=eps, sh_degree=0),
    )


def read_manifest(path) -> pd.DataFrame:
    """Load a run manifest (jsonl, csv or parquet) as a DataFrame."""
    path = Path(path)
    if path.suffix == ".jsonl":
        return pd.read_json(path, orient="records", lines=True)
    if path.suffix == ".csv":
        return pd.read_csv(path)
    return pd.read_parquet(path, engine="pyarrow")
