"""Closed-form rigid motions, usable wherever the solver is."""

from typing import Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from deformers.base_deformer import DeformationMap


class RigidDeformer(DeformationMap):
    """
    phi(X, t) = pivot + R(t * omega) (X - pivot) + t * velocity.

    With zero angular velocity this is exactly X + t * velocity; with both
    zero it is the identity map.
    """

    def __init__(
        self,
        velocity: Sequence[float] = (0.0, 0.0, 0.0),
        angular_velocity: Sequence[float] = (0.0, 0.0, 0.0),
        pivot: Optional[Sequence[float]] = None,
        name: Optional[str] = None,
    ):
        """
        Initialize the motion.

        Args:
            velocity: Translation per second
            angular_velocity: Rotation vector per second (rad/s)
            pivot: Rotation centre; defaults to the centroid of the rest vertices
            name: Label used in log messages
        """
        super().__init__(name or "rigid")
        self.velocity = np.asarray(velocity, dtype=np.float64)
        self.angular_velocity = np.asarray(angular_velocity, dtype=np.float64)
        self.pivot = None if pivot is None else np.asarray(pivot, dtype=np.float64)

    def advance_to(self, t: float) -> np.ndarray:
        rest = self._require_bound()
        if not np.any(self.angular_velocity):
            return rest + t * self.velocity
        pivot = self.pivot if self.pivot is not None else rest.mean(axis=0)
        R = Rotation.from_rotvec(t * self.angular_velocity).as_matrix()
        return pivot + (rest - pivot) @ R.T + t * self.velocity
