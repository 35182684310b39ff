"""Uniform background grid."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import settings
from mpm.colliders import SURFACE_SEPARATE, SURFACE_SLIP, SURFACE_STICKY, SURFACES
from mpm.kernels import flat_node_index

FACES = ("x-", "x+", "y-", "y+", "z-", "z+")

# Domain faces may also be left open: no wall response at all
FACE_OPEN = "open"
FACE_BEHAVIORS = SURFACES + (FACE_OPEN,)

# Nodes this close to a domain face get the wall response
WALL_CELLS = 3

# Particles must stay this many cells inside the domain
SAFE_MARGIN = 2


def uniform_boundary(behavior: str) -> Dict[str, str]:
    """Same wall behavior on all six faces."""
    return {face: behavior for face in FACES}


@dataclass
class SimGrid:
    """
    Dense grid of resolution (nx, ny, nz); node (i, j, k) sits at origin + h*(i, j, k).

    Nodes are stored flat in C order. `momentum` holds momentum after the
    scatter and `velocity` the normalized, force-updated velocity.
    """

    origin: np.ndarray
    h: float
    resolution: Tuple[int, int, int]
    boundary: Dict[str, str] = field(default_factory=lambda: {face: SURFACE_SEPARATE for face in FACES})

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.resolution = tuple(int(r) for r in self.resolution)
        if self.h <= 0:
            raise ValueError(f"grid cell size must be positive, got {self.h}")
        if len(self.resolution) != 3 or min(self.resolution) < 4:
            raise ValueError(f"grid resolution must be at least 4 per axis, got {self.resolution}")
        unknown = {k: v for k, v in self.boundary.items() if k not in FACES or v not in FACE_BEHAVIORS}
        if unknown:
            raise ValueError(f"invalid grid boundary entries: {unknown}")
        self.boundary = {face: self.boundary.get(face, SURFACE_SEPARATE) for face in FACES}

        self.mass = np.zeros(self.n_nodes)
        self.momentum = np.zeros((self.n_nodes, 3))
        self.velocity = np.zeros((self.n_nodes, 3))

        ijk = np.stack(
            np.meshgrid(*(np.arange(r) for r in self.resolution), indexing="ij"), axis=-1
        ).reshape(-1, 3)
        self._ijk = ijk
        self.positions = self.origin + ijk * self.h

    @classmethod
    def fit(
        cls,
        lower: np.ndarray,
        upper: np.ndarray,
        resolution: Optional[int] = None,
        padding: Optional[int] = None,
        boundary: Optional[Dict[str, str]] = None,
    ) -> "SimGrid":
        """
        Cubic grid centred on a bounding box with `padding` empty cells on every side.

        Args:
            lower: Bounding box minimum corner
            upper: Bounding box maximum corner
            resolution: Nodes per axis
            padding: Cells between the box and the domain faces

        Returns:
            SimGrid
        """
        resolution = resolution or settings.grid_resolution
        padding = settings.grid_padding if padding is None else padding
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        usable = resolution - 1 - 2 * padding
        if usable < 1:
            raise ValueError(f"resolution {resolution} too small for padding {padding}")
        extent = max(float(np.max(upper - lower)), 1e-6)
        h = extent / usable
        center = 0.5 * (lower + upper)
        origin = center - 0.5 * (resolution - 1) * h
        return cls(origin=origin, h=h, resolution=(resolution,) * 3, boundary=boundary or {})

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.resolution
        return nx * ny * nz

    def clear(self) -> None:
        self.mass.fill(0.0)
        self.momentum.fill(0.0)
        self.velocity.fill(0.0)

    def flat_index(self, i: int, j: int, k: int) -> int:
        return int(flat_node_index((i, j, k), self.resolution))

    def safe_mask(self, positions: np.ndarray, margin: int = SAFE_MARGIN) -> np.ndarray:
        """True for positions at least `margin` cells inside the domain."""
        u = (positions - self.origin) / self.h
        upper = np.asarray(self.resolution) - 1 - margin
        return np.all((u >= margin) & (u <= upper), axis=1)

    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    def total_momentum(self) -> np.ndarray:
        return np.sum(self.momentum, axis=0)

    def apply_walls(self, velocity: np.ndarray) -> None:
        """Domain-face boundary response on nodes within WALL_CELLS of each face, in place."""
        for axis in range(3):
            n = self.resolution[axis]
            coord = self._ijk[:, axis]
            for face, zone, outward in (
                (FACES[2 * axis], coord < WALL_CELLS, -1.0),
                (FACES[2 * axis + 1], coord >= n - WALL_CELLS, 1.0),
            ):
                surface = self.boundary[face]
                if surface == FACE_OPEN:
                    continue
                if surface == SURFACE_STICKY:
                    velocity[zone] = 0.0
                elif surface == SURFACE_SLIP:
                    velocity[zone, axis] = 0.0
                else:
                    component = velocity[zone, axis]
                    velocity[zone, axis] = np.where(component * outward > 0.0, 0.0, component)
