"""Synthetic flat-Gaussian assets for scenes without trained checkpoints."""

from typing import Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from config.settings import settings
from splat.gaussian import GaussianScene, SceneMetadata

SHAPE_BOX = "box"
SHAPE_SPHERE = "sphere"


def generate_blob(
    count: int,
    shape: str = SHAPE_SPHERE,
    center: Sequence[float] = (0.0, 0.0, 0.0),
    size: float = 0.5,
    scale_range: Sequence[float] = (0.01, 0.04),
    color: Optional[Sequence[float]] = None,
    seed: int = 0,
    eps: Optional[float] = None,
) -> GaussianScene:
    """
    Random flat Gaussians filling a sphere or an axis-aligned cube.

    Args:
        count: Number of Gaussians
        shape: "sphere" (size is the radius) or "box" (size is the half edge)
        center: World-space centre
        size: Radius or half edge length
        scale_range: Uniform range for the two in-plane scales
        color: Optional degree-0 SH colour shared by all Gaussians
        seed: Random seed
        eps: Flatness constant

    Returns:
        GaussianScene with `count` flat Gaussians
    """
    eps = settings.flat_epsilon if eps is None else eps
    rng = np.random.default_rng(seed)

    if shape == SHAPE_BOX:
        offsets = rng.uniform(-size, size, size=(count, 3))
    elif shape == SHAPE_SPHERE:
        direction = rng.normal(size=(count, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = size * rng.uniform(0.0, 1.0, size=count) ** (1.0 / 3.0)
        offsets = direction * radius[:, None]
    else:
        raise ValueError(f"unknown procedural shape '{shape}'")

    scales = np.empty((count, 3))
    scales[:, 0] = eps
    scales[:, 1:] = rng.uniform(scale_range[0], scale_range[1], size=(count, 2))

    if color is None:
        sh_dc = rng.normal(scale=0.5, size=(count, 3))
    else:
        sh_dc = np.tile(np.asarray(color, dtype=np.float64), (count, 1))

    return GaussianScene(
        means=np.asarray(center, dtype=np.float64) + offsets,
        rotations=Rotation.random(count, random_state=seed).as_matrix().reshape(count, 3, 3),
        scales=scales,
        opacities=rng.uniform(0.5, 1.0, size=count),
        sh_dc=sh_dc,
        sh_rest=np.zeros((count, 0)),
        normals=np.zeros((count, 3)),
        metadata=SceneMetadata(source=f"procedural:{shape}", epsilon=eps, sh_degree=0, already_flat=count),
    )
