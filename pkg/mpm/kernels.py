"""B-spline interpolation kernels for particle-grid transfers."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config.settings import KERNEL_CUBIC, KERNEL_QUADRATIC


@dataclass
class KernelWeights:
    """
    Per-axis kernel data for a batch of particles.

    base: (N, 3) index of the first stencil node per axis
    weights: (N, 3, S) one-dimensional weights, S = stencil width
    gradients: (N, 3, S) derivatives of the weights with respect to position
    """

    base: np.ndarray
    weights: np.ndarray
    gradients: np.ndarray

    @property
    def width(self) -> int:
        return int(self.weights.shape[2])


def stencil_width(degree: str) -> int:
    return 4 if degree == KERNEL_CUBIC else 3


def inverse_moment(degree: str, h: float) -> float:
    """Inverse of the kernel's second moment (D^-1 of the affine transfer)."""
    if degree == KERNEL_CUBIC:
        return 3.0 / (h * h)
    if degree == KERNEL_QUADRATIC:
        return 4.0 / (h * h)
    raise ValueError(f"unknown kernel degree '{degree}'")


def _cubic(d: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.abs(d)
    s = np.sign(d)
    inner = a < 1.0
    outer = (a >= 1.0) & (a < 2.0)
    w = np.where(inner, 0.5 * a**3 - a**2 + 2.0 / 3.0, 0.0)
    w = np.where(outer, (2.0 - a) ** 3 / 6.0, w)
    dw = np.where(inner, (1.5 * a**2 - 2.0 * a) * s, 0.0)
    dw = np.where(outer, -0.5 * (2.0 - a) ** 2 * s, dw)
    return w, dw


def kernel_weights(
    positions: np.ndarray,
    origin: np.ndarray,
    h: float,
    degree: str = KERNEL_CUBIC,
) -> KernelWeights:
    """
    One-dimensional B-spline weights of the nodes around each particle.

    The 3D weight of node base + (a, b, c) is the product of the per-axis
    weights; per-axis weights sum to 1 and their gradients to 0.

    Args:
        positions: (N, 3) particle positions
        origin: World position of node (0, 0, 0)
        h: Cell size
        degree: "cubic" (4-node support) or "quadratic" (3-node support)

    Returns:
        KernelWeights
    """
    u = (np.asarray(positions, dtype=np.float64) - np.asarray(origin, dtype=np.float64)) / h

    if degree == KERNEL_CUBIC:
        base = np.floor(u).astype(np.int64) - 1
        fx = u - base
        offsets = np.arange(4, dtype=np.float64)
        w, dw = _cubic(fx[..., None] - offsets)
    elif degree == KERNEL_QUADRATIC:
        base = np.floor(u - 0.5).astype(np.int64)
        fx = (u - base)[..., None]
        w = np.concatenate(
            [0.5 * (1.5 - fx) ** 2, 0.75 - (fx - 1.0) ** 2, 0.5 * (fx - 0.5) ** 2], axis=-1
        )
        dw = np.concatenate([fx - 1.5, -2.0 * (fx - 1.0), fx - 0.5], axis=-1)
    else:
        raise ValueError(f"unknown kernel degree '{degree}'")

    return KernelWeights(base=base, weights=w, gradients=dw / h)


@dataclass
class Stencil:
    """
    Full 3D stencil of a particle batch, flattened over the S^3 neighbours.

    nodes: (N, S^3) flat node indices
    weights: (N, S^3)
    gradients: (N, S^3, 3)
    offsets: (N, S^3, 3) node position minus particle position
    """

    nodes: np.ndarray
    weights: np.ndarray
    gradients: np.ndarray
    offsets: np.ndarray


def flat_node_index(ijk: np.ndarray, resolution: Tuple[int, int, int]) -> np.ndarray:
    """C-order flat index of grid nodes (..., 3) on a grid of the given resolution."""
    ijk = np.asarray(ijk)
    _, ny, nz = resolution
    return (ijk[..., 0] * ny + ijk[..., 1]) * nz + ijk[..., 2]


def build_stencil(
    positions: np.ndarray,
    origin: np.ndarray,
    h: float,
    resolution: Tuple[int, int, int],
    degree: str = KERNEL_CUBIC,
) -> Stencil:
    """Expand per-axis kernel weights into the dyadic-product 3D stencil."""
    kw = kernel_weights(positions, origin, h, degree)
    width = kw.width
    n = positions.shape[0]
    wx, wy, wz = kw.weights[:, 0], kw.weights[:, 1], kw.weights[:, 2]
    gx, gy, gz = kw.gradients[:, 0], kw.gradients[:, 1], kw.gradients[:, 2]

    weights = wx[:, :, None, None] * wy[:, None, :, None] * wz[:, None, None, :]
    gradients = np.stack(
        [
            gx[:, :, None, None] * wy[:, None, :, None] * wz[:, None, None, :],
            wx[:, :, None, None] * gy[:, None, :, None] * wz[:, None, None, :],
            wx[:, :, None, None] * wy[:, None, :, None] * gz[:, None, None, :],
        ],
        axis=-1,
    )

    local = np.stack(np.meshgrid(*(np.arange(width),) * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    node_ijk = kw.base[:, None, :] + local[None, :, :]
    nodes = flat_node_index(node_ijk, resolution)
    offsets = np.asarray(origin, dtype=np.float64) + node_ijk * h - positions[:, None, :]

    return Stencil(
        nodes=nodes.reshape(n, -1),
        weights=weights.reshape(n, -1),
        gradients=gradients.reshape(n, -1, 3),
        offsets=offsets,
    )
