"""
Conversion between flat Gaussians and soup triangles.

A flat Gaussian with mean m, rotation columns (r1, r2, r3) and scales
(eps, s2, s3) maps to the triangle [m, m + s2*r2, m + s3*r3]. The inverse
recovers the frame with a cross product and one Gram-Schmidt step.
All functions are pure; the *_arrays forms operate on whole scenes.
"""

from typing import Optional, Tuple

import numpy as np

from config.settings import settings
from splat.gaussian import (
    FlatGaussian,
    Gaussian3D,
    GaussianScene,
    SceneMetadata,
    SoupTriangle,
    TriangleSoup,
)
from utils.error_handler import DegenerateGaussianError, DegenerateTriangleError

# Residual norm below which a vector counts as lying in span{r1, r2}
SPAN_TOLERANCE = 1e-9

# Column order that moves axis k to slot 1 and keeps the rest in order
_FLATTEN_PERMUTATIONS = np.array([[0, 1, 2], [1, 0, 2], [2, 0, 1]])


def flatten_arrays(
    rotations: np.ndarray,
    scales: np.ndarray,
    eps: Optional[float] = None,
    index_offset: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Flatten general Gaussians along their smallest axis.

    Args:
        rotations: (N, 3, 3) orthonormal matrices
        scales: (N, 3) positive scales
        eps: Flatness constant written into slot 1
        index_offset: Added to row numbers in error messages

    Returns:
        Tuple of (rotations, scales, already_flat mask)
    """
    eps = settings.flat_epsilon if eps is None else eps
    rotations = np.asarray(rotations, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)

    vanishing = np.count_nonzero(scales <= np.finfo(np.float64).eps, axis=1)
    bad = np.flatnonzero(vanishing >= 2)
    if bad.size:
        raise DegenerateGaussianError(int(bad[0]) + index_offset, "two or more vanishing scales")

    already_flat = scales.min(axis=1) <= 10.0 * eps

    # argmin keeps the lowest axis on ties
    perm = _FLATTEN_PERMUTATIONS[np.argmin(scales, axis=1)]
    flat_rot = np.take_along_axis(rotations, perm[:, None, :], axis=2).copy()
    flat_scales = np.take_along_axis(scales, perm, axis=1).copy()
    flat_scales[:, 0] = eps

    flip = np.linalg.det(flat_rot) < 0
    flat_rot[flip, :, 0] *= -1.0
    return flat_rot, flat_scales, already_flat


def flatten(g: Gaussian3D, eps: Optional[float] = None, index: int = 0) -> FlatGaussian:
    """
    Turn a general Gaussian into a flat one.

    Args:
        g: Gaussian with three positive scales
        eps: Flatness constant
        index: Gaussian index reported on error

    Returns:
        FlatGaussian with the smallest axis in slot 1
    """
    rot, scales, _ = flatten_arrays(
        np.asarray(g.rotation)[None], np.asarray(g.scales)[None], eps, index_offset=index
    )
    return FlatGaussian(
        mean=np.asarray(g.mean, dtype=np.float64).copy(),
        rotation=rot[0],
        scales=scales[0],
        opacity=g.opacity,
        sh_coeffs=g.sh_coeffs,
    )


def gauss_to_triangle_arrays(means: np.ndarray, rotations: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """
    Vertices [m, m + s2*r2, m + s3*r3] for every Gaussian.

    Returns:
        (N, 3, 3) array indexed as (triangle, slot, coordinate)
    """
    means = np.asarray(means, dtype=np.float64)
    vertices = np.empty((means.shape[0], 3, 3))
    vertices[:, 0] = means
    vertices[:, 1] = means + scales[:, 1:2] * rotations[:, :, 1]
    vertices[:, 2] = means + scales[:, 2:3] * rotations[:, :, 2]
    return vertices


def gauss_to_triangle(g: FlatGaussian, source_index: int = 0) -> SoupTriangle:
    """Forward parametrization of a single flat Gaussian."""
    v = gauss_to_triangle_arrays(
        np.asarray(g.mean)[None], np.asarray(g.rotation)[None], np.asarray(g.scales)[None]
    )[0]
    return SoupTriangle.from_vertices(
        v[0], v[1], v[2], source_index=source_index, opacity=g.opacity, sh_coeffs=g.sh_coeffs
    )


def orth_step_arrays(w: np.ndarray, r1: np.ndarray, r2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    One Gram-Schmidt step for many vectors.

    Returns:
        Tuple of (unit residuals, residual norms); rows whose residual norm is
        at most SPAN_TOLERANCE are returned as zero vectors
    """
    w = np.asarray(w, dtype=np.float64)
    residual = (
        w
        - np.sum(w * r1, axis=-1, keepdims=True) * r1
        - np.sum(w * r2, axis=-1, keepdims=True) * r2
    )
    norm = np.linalg.norm(residual, axis=-1)
    safe = norm > SPAN_TOLERANCE
    unit = np.zeros_like(residual)
    unit[safe] = residual[safe] / norm[safe, None]
    return unit, norm


def orth_step(w: np.ndarray, r1: np.ndarray, r2: np.ndarray, index: int = 0) -> np.ndarray:
    """
    Normalized component of w orthogonal to the orthonormal pair (r1, r2).

    Raises:
        DegenerateTriangleError: w lies within SPAN_TOLERANCE of span{r1, r2}
    """
    unit, norm = orth_step_arrays(np.asarray(w)[None], np.asarray(r1)[None], np.asarray(r2)[None])
    if norm[0] <= SPAN_TOLERANCE:
        raise DegenerateTriangleError(index, "vector lies in span of r1, r2")
    return unit[0]


def triangle_to_gauss_arrays(
    vertices: np.ndarray, eps: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Inverse parametrization for a stack of triangles.

    Args:
        vertices: (N, 3, 3) triangle vertices
        eps: Flatness constant for slot 1

    Returns:
        Tuple of (means, rotations, scales, degenerate mask). Degenerate rows
        carry an identity rotation and eps scales; callers decide what to do.
    """
    eps = settings.flat_epsilon if eps is None else eps
    vertices = np.asarray(vertices, dtype=np.float64)
    n = vertices.shape[0]
    v1 = vertices[:, 0]
    e2 = vertices[:, 1] - v1
    e3 = vertices[:, 2] - v1

    normal = np.cross(e2, e3)
    normal_len = np.linalg.norm(normal, axis=1)
    len2 = np.linalg.norm(e2, axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = normal / normal_len[:, None]
        r2 = e2 / len2[:, None]
    degenerate = ~((normal_len > 0.0) & (len2 > 0.0))
    r1[degenerate] = 0.0
    r2[degenerate] = 0.0

    r3, residual = orth_step_arrays(e3, r1, r2)
    degenerate |= residual <= SPAN_TOLERANCE

    rotations = np.stack([r1, r2, r3], axis=2)
    scales = np.empty((n, 3))
    scales[:, 0] = eps
    scales[:, 1] = len2
    scales[:, 2] = np.sum(e3 * r3, axis=1)

    rotations[degenerate] = np.eye(3)
    scales[degenerate, 1:] = eps
    return v1.copy(), rotations, scales, degenerate


def triangle_to_gauss(t: SoupTriangle, eps: Optional[float] = None) -> FlatGaussian:
    """
    Recover the flat Gaussian described by a triangle.

    Raises:
        DegenerateTriangleError: vertices are collinear
    """
    vertices = np.stack([t.v1, t.v2, t.v3])[None]
    means, rotations, scales, degenerate = triangle_to_gauss_arrays(vertices, eps)
    if degenerate[0]:
        raise DegenerateTriangleError(t.source_index)
    return FlatGaussian(
        mean=means[0],
        rotation=rotations[0],
        scales=scales[0],
        opacity=t.opacity,
        sh_coeffs=t.sh_coeffs,
    )


def covariance_arrays(rotations: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """R diag(s)^2 R^T for a stack of Gaussians, exactly symmetric."""
    factor = np.asarray(rotations, dtype=np.float64) * np.asarray(scales, dtype=np.float64)[:, None, :]
    cov = factor @ np.swapaxes(factor, 1, 2)
    return 0.5 * (cov + np.swapaxes(cov, 1, 2))


def covariance_of(g: FlatGaussian) -> np.ndarray:
    """Covariance matrix of a single Gaussian."""
    return covariance_arrays(np.asarray(g.rotation)[None], np.asarray(g.scales)[None])[0]


def scene_to_soup(scene: GaussianScene) -> TriangleSoup:
    """
    Forward parametrization of a whole scene.

    Triangle i has source_index i and inherits Gaussian i's appearance.
    """
    vertices = gauss_to_triangle_arrays(scene.means, scene.rotations, scene.scales)
    rest = np.stack(
        [
            np.linalg.norm(vertices[:, 1] - vertices[:, 0], axis=1),
            np.linalg.norm(vertices[:, 2] - vertices[:, 0], axis=1),
        ],
        axis=1,
    )
    return TriangleSoup(
        vertices=vertices,
        rest_lengths=rest,
        source_index=np.arange(len(scene)),
        opacities=scene.opacities.copy(),
        sh_dc=scene.sh_dc.copy(),
        sh_rest=scene.sh_rest.copy(),
    )


def soup_to_scene(
    soup: TriangleSoup,
    vertices: Optional[np.ndarray] = None,
    eps: Optional[float] = None,
    metadata: Optional[SceneMetadata] = None,
) -> Tuple[GaussianScene, np.ndarray]:
    """
    Inverse parametrization of a whole soup.

    Args:
        soup: Triangles carrying appearance
        vertices: Optional deformed vertices replacing soup.vertices
        eps: Flatness constant
        metadata: Metadata for the resulting scene

    Returns:
        Tuple of (scene, degenerate mask)
    """
    eps = settings.flat_epsilon if eps is None else eps
    means, rotations, scales, degenerate = triangle_to_gauss_arrays(
        soup.vertices if vertices is None else vertices, eps
    )
    scene = GaussianScene(
        means=means,
        rotations=rotations,
        scales=scales,
        opacities=soup.opacities,
        sh_dc=soup.sh_dc,
        sh_rest=soup.sh_rest,
        normals=np.zeros_like(means),
        metadata=metadata or SceneMetadata(epsilon=eps),
    )
    return scene, degenerate
