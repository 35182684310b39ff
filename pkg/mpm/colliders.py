"""Analytic colliders applied to grid velocities."""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

# Stick to the boundary
SURFACE_STICKY = "sticky"
# Remove the normal component
SURFACE_SLIP = "slip"
# Remove only the component moving into the boundary
SURFACE_SEPARATE = "separate"

SURFACES = (SURFACE_STICKY, SURFACE_SLIP, SURFACE_SEPARATE)


def project_velocity(velocity: np.ndarray, normal: np.ndarray, surface: str) -> np.ndarray:
    """
    Boundary response for velocities at nodes in contact.

    Args:
        velocity: (N, 3) node velocities
        normal: (N, 3) unit normals pointing out of the solid
        surface: One of SURFACES

    Returns:
        (N, 3) projected velocities
    """
    if surface == SURFACE_STICKY:
        return np.zeros_like(velocity)
    normal_component = np.sum(velocity * normal, axis=1, keepdims=True)
    if surface == SURFACE_SLIP:
        return velocity - normal * normal_component
    if surface == SURFACE_SEPARATE:
        return velocity - normal * np.minimum(normal_component, 0.0)
    raise ValueError(f"unknown surface '{surface}'")


class Collider(ABC):
    """Static solid that constrains grid velocities of nodes inside it."""

    def __init__(self, surface: str = SURFACE_STICKY):
        if surface not in SURFACES:
            raise ValueError(f"unknown surface '{surface}', expected one of {SURFACES}")
        self.surface = surface

    @abstractmethod
    def contact(self, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nodes inside the solid and their outward normals.

        Args:
            positions: (N, 3) node positions

        Returns:
            Tuple of (inside mask (N,), normals (N, 3))
        """

    def apply(self, positions: np.ndarray, velocity: np.ndarray, active: np.ndarray) -> None:
        """Project velocities of active nodes in contact, in place."""
        inside, normals = self.contact(positions)
        hit = inside & active
        if np.any(hit):
            velocity[hit] = project_velocity(velocity[hit], normals[hit], self.surface)


class HalfSpaceCollider(Collider):
    """Solid on the side opposite to `normal` of the plane through `point`."""

    def __init__(self, point, normal, surface: str = SURFACE_STICKY):
        super().__init__(surface)
        self.point = np.asarray(point, dtype=np.float64)
        normal = np.asarray(normal, dtype=np.float64)
        self.normal = normal / np.linalg.norm(normal)

    def contact(self, positions):
        inside = (positions - self.point) @ self.normal < 0.0
        return inside, np.broadcast_to(self.normal, positions.shape)

    def __repr__(self) -> str:
        return f"HalfSpaceCollider(point={self.point.tolist()}, normal={self.normal.tolist()}, surface={self.surface})"


class SphereCollider(Collider):
    """Solid ball."""

    def __init__(self, center, radius: float, surface: str = SURFACE_STICKY):
        super().__init__(surface)
        if radius <= 0:
            raise ValueError("sphere collider radius must be positive")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)

    def contact(self, positions):
        offset = positions - self.center
        dist = np.linalg.norm(offset, axis=1)
        inside = dist < self.radius
        normals = offset / np.maximum(dist, 1e-12)[:, None]
        return inside, normals

    def __repr__(self) -> str:
        return f"SphereCollider(center={self.center.tolist()}, radius={self.radius}, surface={self.surface})"


class BoxCollider(Collider):
    """Solid axis-aligned box; stands in for pinned scene objects."""

    def __init__(self, lower, upper, surface: str = SURFACE_STICKY):
        super().__init__(surface)
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        if np.any(self.upper <= self.lower):
            raise ValueError("box collider upper corner must exceed lower corner")

    def contact(self, positions):
        inside = np.all((positions > self.lower) & (positions < self.upper), axis=1)
        # distance to each of the six faces; the nearest one gives the normal
        gaps = np.concatenate([positions - self.lower, self.upper - positions], axis=1)
        nearest = np.argmin(gaps, axis=1)
        normals = np.zeros_like(positions)
        axis = nearest % 3
        normals[np.arange(len(positions)), axis] = np.where(nearest < 3, -1.0, 1.0)
        return inside, normals

    def __repr__(self) -> str:
        return f"BoxCollider(lower={self.lower.tolist()}, upper={self.upper.tolist()}, surface={self.surface})"
