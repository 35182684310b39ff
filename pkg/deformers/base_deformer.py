"""Base deformation map class with common functionality."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

from utils.logger import logger


class DeformationMap(ABC):
    """
    Abstract map from rest vertices to deformed vertices at time t.

    Vertices are the flattened triangle-soup vertices, three per triangle in
    slot order, shape (3T, 3). Implementations must preserve the vertex count
    and return finite positions.
    """

    def __init__(self, name: Optional[str] = None):
        """
        Initialize the map.

        Args:
            name: Label used in log messages
        """
        self.name = name or type(self).__name__
        self.rest_vertices: Optional[np.ndarray] = None

    def bind(self, rest_vertices: np.ndarray) -> None:
        """
        Attach the rest vertex set.

        Args:
            rest_vertices: (3T, 3) vertex positions at t = 0
        """
        rest_vertices = np.asarray(rest_vertices, dtype=np.float64)
        if rest_vertices.ndim != 2 or rest_vertices.shape[1] != 3:
            raise ValueError(f"rest vertices must have shape (V, 3), got {rest_vertices.shape}")
        self.rest_vertices = rest_vertices.copy()
        logger.debug(f"{self.name} bound to {len(rest_vertices)} vertices")

    def _require_bound(self) -> np.ndarray:
        if self.rest_vertices is None:
            raise RuntimeError(f"{self.name} used before bind()")
        return self.rest_vertices

    @abstractmethod
    def advance_to(self, t: float) -> np.ndarray:
        """
        Deformed vertex positions at time t.

        Args:
            t: Simulation time in seconds, non-decreasing across calls

        Returns:
            (3T, 3) array of vertex positions
        """
        pass

    def diagnostics(self) -> Dict[str, Any]:
        """Optional per-frame diagnostics merged into the frame manifest."""
        return {}

    def close(self) -> None:
        """Release any resources held by the map."""

    def __enter__(self):
        """Context manager entry."""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit - release resources."""
        self.close()
