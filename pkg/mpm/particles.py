"""Particle state of the material point solver."""

from dataclasses import dataclass, fields
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Particle:
    """Read-only view of a single particle."""

    position: np.ndarray
    velocity: np.ndarray
    F_E: np.ndarray
    C: np.ndarray
    mass: float
    volume0: float
    material_id: int
    plastic_state: float
    source: Tuple[int, int]
    escaped: bool = False


@dataclass
class ParticleSet:
    """
    Struct-of-arrays particle storage.

    source_triangle / source_slot tie every particle to a soup vertex
    (slot 1, 2 or 3). Escaped particles are frozen and skipped by transfers.
    """

    x: np.ndarray
    v: np.ndarray
    F: np.ndarray
    C: np.ndarray
    mass: np.ndarray
    volume0: np.ndarray
    material: np.ndarray
    plastic: np.ndarray
    source_triangle: np.ndarray
    source_slot: np.ndarray
    escaped: np.ndarray

    @classmethod
    def create(
        cls,
        positions: np.ndarray,
        velocities: np.ndarray,
        mass: np.ndarray,
        volume0: np.ndarray,
        material: np.ndarray,
        plastic: np.ndarray,
        source_triangle: np.ndarray,
        source_slot: np.ndarray,
    ) -> "ParticleSet":
        """Particles at rest configuration: F_E = I, C = 0."""
        n = positions.shape[0]
        mass = np.asarray(mass, dtype=np.float64)
        volume0 = np.asarray(volume0, dtype=np.float64)
        if np.any(mass <= 0) or np.any(volume0 <= 0):
            raise ValueError("particle mass and rest volume must be positive")
        return cls(
            x=np.array(positions, dtype=np.float64),
            v=np.array(velocities, dtype=np.float64),
            F=np.tile(np.eye(3), (n, 1, 1)),
            C=np.zeros((n, 3, 3)),
            mass=mass,
            volume0=volume0,
            material=np.asarray(material, dtype=np.int64),
            plastic=np.array(plastic, dtype=np.float64),
            source_triangle=np.asarray(source_triangle, dtype=np.int64),
            source_slot=np.asarray(source_slot, dtype=np.int64),
            escaped=np.zeros(n, dtype=bool),
        )

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def __getitem__(self, index: int) -> Particle:
        return Particle(
            position=self.x[index].copy(),
            velocity=self.v[index].copy(),
            F_E=self.F[index].copy(),
            C=self.C[index].copy(),
            mass=float(self.mass[index]),
            volume0=float(self.volume0[index]),
            material_id=int(self.material[index]),
            plastic_state=float(self.plastic[index]),
            source=(int(self.source_triangle[index]), int(self.source_slot[index])),
            escaped=bool(self.escaped[index]),
        )

    def copy(self) -> "ParticleSet":
        return ParticleSet(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    def total_momentum(self) -> np.ndarray:
        return np.sum(self.mass[:, None] * self.v, axis=0)

    def max_speed(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.v, axis=1)))

    def centroid(self) -> np.ndarray:
        return np.sum(self.mass[:, None] * self.x, axis=0) / self.total_mass()
