"""Spatial predicates used to pick Gaussians by their means."""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np


class Region(ABC):
    """A world-space region."""

    @abstractmethod
    def contains(self, points: np.ndarray) -> np.ndarray:
        """
        Membership test.

        Args:
            points: (N, 3) positions

        Returns:
            (N,) boolean mask
        """


class BoxRegion(Region):
    """Closed axis-aligned box."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        if np.any(self.upper < self.lower):
            raise ValueError("box region upper corner lies below the lower corner")

    def contains(self, points):
        points = np.asarray(points, dtype=np.float64)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)

    def __repr__(self) -> str:
        return f"BoxRegion(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class SphereRegion(Region):
    """Closed ball."""

    def __init__(self, center: Sequence[float], radius: float):
        if radius < 0:
            raise ValueError("sphere region radius must be non-negative")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)

    def contains(self, points):
        points = np.asarray(points, dtype=np.float64)
        return np.linalg.norm(points - self.center, axis=1) <= self.radius

    def __repr__(self) -> str:
        return f"SphereRegion(center={self.center.tolist()}, radius={self.radius})"


class HalfSpaceRegion(Region):
    """Points on the side of the plane that `normal` points to, plane included."""

    def __init__(self, point: Sequence[float], normal: Sequence[float]):
        normal = np.asarray(normal, dtype=np.float64)
        length = np.linalg.norm(normal)
        if length == 0.0:
            raise ValueError("half-space region normal must be non-zero")
        self.point = np.asarray(point, dtype=np.float64)
        self.normal = normal / length

    def contains(self, points):
        points = np.asarray(points, dtype=np.float64)
        return (points - self.point) @ self.normal >= 0.0

    def __repr__(self) -> str:
        return f"HalfSpaceRegion(point={self.point.tolist()}, normal={self.normal.tolist()})"
