"""Pinhole camera for quick-look previews."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class PreviewCamera:
    """
    Look-at pinhole camera.

    Camera space follows the OpenCV convention: x right, y down, z forward.
    """

    position: Tuple[float, float, float] = (0.0, -3.0, 0.0)
    look_at: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    up: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    fov_deg: float = 45.0
    width: int = 256
    height: int = 256
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError(f"vertical fov must lie in (0, 180) degrees, got {self.fov_deg}")
        if self.width < 16 or self.height < 16:
            raise ValueError(f"image size must be at least 16x16, got {self.width}x{self.height}")
        forward = np.subtract(self.look_at, self.position)
        if np.linalg.norm(forward) == 0.0:
            raise ValueError("camera position coincides with look_at")
        if np.linalg.norm(np.cross(forward, self.up)) == 0.0:
            raise ValueError("camera up vector is parallel to the viewing direction")
        if any(not 0.0 <= c <= 1.0 for c in self.background):
            raise ValueError("background colour components must lie in [0, 1]")

    def world_to_camera(self) -> Tuple[np.ndarray, np.ndarray]:
        """Rotation W and translation t with x_cam = W x + t."""
        position = np.asarray(self.position, dtype=np.float64)
        forward = np.asarray(self.look_at, dtype=np.float64) - position
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        W = np.stack([right, down, forward])
        return W, -W @ position

    @property
    def focal(self) -> float:
        """Focal length in pixels, shared by both axes."""
        return 0.5 * self.height / math.tan(math.radians(self.fov_deg) / 2.0)

    @property
    def principal_point(self) -> Tuple[float, float]:
        """Image centre; pixel (row i, column j) sits at (u, v) = (j, i)."""
        return 0.5 * (self.width - 1), 0.5 * (self.height - 1)
