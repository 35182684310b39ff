"""
Software splat compositor for quick-look frame images.

Gaussians are projected with the first-order covariance approximation,
sorted by view depth and alpha-composited back to front using their
degree-0 SH colour.
"""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from config.settings import settings
from preview.camera import PreviewCamera
from splat.gaussian import GaussianScene
from splat.parametrization import covariance_arrays
from utils.error_handler import retry_with_backoff
from utils.logger import logger

SH_C0 = 0.28209479177387814

# Gaussians closer than this to the camera plane are culled
NEAR_PLANE = 0.01

# Screen-space low-pass filter added to every projected covariance
LOW_PASS = 0.3

# Footprint cutoff in standard deviations
CUTOFF_SIGMA = 3.0

MAX_ALPHA = 0.99


def sh_to_rgb(sh_dc: np.ndarray) -> np.ndarray:
    return np.clip(SH_C0 * np.asarray(sh_dc, dtype=np.float64) + 0.5, 0.0, 1.0)


def _draw_order(frame: GaussianScene, depth: np.ndarray, cov3d: np.ndarray) -> np.ndarray:
    # far to near; ties broken by content so input order never matters
    keys = [cov3d.reshape(len(frame), -1)[:, i] for i in range(9)]
    keys += [frame.sh_dc[:, i] for i in range(3)]
    keys += [frame.opacities]
    keys += [frame.means[:, i] for i in range(3)]
    keys.append(-depth)
    return np.lexsort(keys)


def render_preview(frame: GaussianScene, cam: PreviewCamera) -> np.ndarray:
    """
    Render a frame to a float RGB image.

    Args:
        frame: Gaussians to draw
        cam: Camera

    Returns:
        (height, width, 3) array with values in [0, 1]
    """
    image = np.empty((cam.height, cam.width, 3))
    image[:] = np.asarray(cam.background, dtype=np.float64)
    if len(frame) == 0:
        return image

    W, t = cam.world_to_camera()
    cam_points = frame.means @ W.T + t
    visible = cam_points[:, 2] > NEAR_PLANE
    if not np.any(visible):
        return image

    cov3d = covariance_arrays(frame.rotations, frame.scales)
    focal = cam.focal
    cx, cy = cam.principal_point

    x, y, z = cam_points[:, 0], cam_points[:, 1], np.where(visible, cam_points[:, 2], 1.0)
    J = np.zeros((len(frame), 2, 3))
    J[:, 0, 0] = focal / z
    J[:, 0, 2] = -focal * x / z**2
    J[:, 1, 1] = focal / z
    J[:, 1, 2] = -focal * y / z**2
    T = J @ W
    cov2d = T @ cov3d @ np.swapaxes(T, 1, 2) + LOW_PASS * np.eye(2)

    centers = np.stack([focal * x / z + cx, focal * y / z + cy], axis=1)
    colors = sh_to_rgb(frame.sh_dc)
    det = cov2d[:, 0, 0] * cov2d[:, 1, 1] - cov2d[:, 0, 1] ** 2
    conic = np.stack([cov2d[:, 1, 1], -cov2d[:, 0, 1], cov2d[:, 0, 0]], axis=1) / det[:, None]
    mid = 0.5 * (cov2d[:, 0, 0] + cov2d[:, 1, 1])
    radius = CUTOFF_SIGMA * np.sqrt(mid + np.sqrt(np.maximum(mid**2 - det, 0.0)))

    for i in _draw_order(frame, cam_points[:, 2], cov3d):
        if not visible[i]:
            continue
        u, v = centers[i]
        r = radius[i]
        j0, j1 = max(int(np.floor(u - r)), 0), min(int(np.ceil(u + r)), cam.width - 1)
        i0, i1 = max(int(np.floor(v - r)), 0), min(int(np.ceil(v + r)), cam.height - 1)
        if j0 > j1 or i0 > i1:
            continue
        du = np.arange(j0, j1 + 1)[None, :] - u
        dv = np.arange(i0, i1 + 1)[:, None] - v
        a, b, c = conic[i]
        power = a * du**2 + 2.0 * b * du * dv + c * dv**2
        alpha = np.minimum(MAX_ALPHA, frame.opacities[i] * np.exp(-0.5 * power))
        alpha = np.where(power > CUTOFF_SIGMA**2, 0.0, alpha)[..., None]
        patch = image[i0 : i1 + 1, j0 : j1 + 1]
        image[i0 : i1 + 1, j0 : j1 + 1] = alpha * colors[i] + (1.0 - alpha) * patch

    return image


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


@retry_with_backoff(
    max_retries=settings.io_retries,
    initial_delay=settings.io_retry_delay,
    exceptions=(OSError,),
)
def save_png(image: np.ndarray, path: Union[str, Path]) -> Path:
    """
    Save a float RGB image as an 8-bit PNG.

    Args:
        image: (H, W, 3) values in [0, 1]
        path: Output file

    Returns:
        Path to the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image)).save(path, format="PNG")
    logger.debug(f"Saved preview to {path}")
    return path
