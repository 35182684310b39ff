"""Gaussian and triangle-soup domain types."""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np


def sh_rows_to_flat(sh_coeffs: np.ndarray) -> tuple:
    """
    Split per-Gaussian SH rows into the stored (dc, rest) layout.

    Args:
        sh_coeffs: (1 + M, 3) array, row 0 is the degree-0 colour

    Returns:
        Tuple of (dc (3,), rest (3 * M,)) with rest in channel-major order
    """
    sh_coeffs = np.asarray(sh_coeffs, dtype=np.float64).reshape(-1, 3)
    return sh_coeffs[0].copy(), sh_coeffs[1:].T.reshape(-1).copy()


def sh_flat_to_rows(dc: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """Inverse of sh_rows_to_flat."""
    rest = np.asarray(rest, dtype=np.float64)
    rows = rest.reshape(3, -1).T if rest.size else np.zeros((0, 3))
    return np.vstack([np.asarray(dc, dtype=np.float64).reshape(1, 3), rows])


@dataclass(frozen=True)
class Gaussian3D:
    """A general 3D Gaussian with three free scales, as stored by most checkpoints."""

    mean: np.ndarray
    rotation: np.ndarray
    scales: np.ndarray
    opacity: float = 1.0
    sh_coeffs: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))


@dataclass(frozen=True)
class FlatGaussian:
    """
    A Gaussian whose first scale is pinned to the flatness constant.

    The rotation columns are (r1, r2, r3); r1 is the disc normal.
    """

    mean: np.ndarray
    rotation: np.ndarray
    scales: np.ndarray
    opacity: float = 1.0
    sh_coeffs: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))


@dataclass(frozen=True)
class SoupTriangle:
    """Ordered vertex triple of the triangle soup with its binding-time rest lengths."""

    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    rest_len2: float
    rest_len3: float
    source_index: int
    opacity: float = 1.0
    sh_coeffs: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))

    @classmethod
    def from_vertices(
        cls,
        v1: np.ndarray,
        v2: np.ndarray,
        v3: np.ndarray,
        source_index: int,
        opacity: float = 1.0,
        sh_coeffs: Optional[np.ndarray] = None,
    ) -> "SoupTriangle":
        """Build a triangle and record its rest lengths from the given vertices."""
        v1, v2, v3 = (np.asarray(v, dtype=np.float64) for v in (v1, v2, v3))
        rest_len2 = float(np.linalg.norm(v2 - v1))
        rest_len3 = float(np.linalg.norm(v3 - v1))
        if rest_len2 <= 0.0 or rest_len3 <= 0.0:
            raise ValueError(f"triangle {source_index} has a zero-length edge")
        return cls(
            v1=v1,
            v2=v2,
            v3=v3,
            rest_len2=rest_len2,
            rest_len3=rest_len3,
            source_index=source_index,
            opacity=opacity,
            sh_coeffs=np.zeros((1, 3)) if sh_coeffs is None else np.asarray(sh_coeffs),
        )

    def deformed(self, v1: np.ndarray, v2: np.ndarray, v3: np.ndarray) -> "SoupTriangle":
        """Same triangle moved to new vertex positions; rest lengths stay."""
        return replace(self, v1=np.asarray(v1, dtype=np.float64), v2=np.asarray(v2, dtype=np.float64),
                       v3=np.asarray(v3, dtype=np.float64))


@dataclass
class SceneMetadata:
    """Provenance of a GaussianScene."""

    source: Optional[str] = None
    epsilon: float = 1e-6
    sh_degree: int = 0
    already_flat: int = 0


@dataclass
class GaussianScene:
    """
    Ordered collection of flat Gaussians, stored as arrays.

    Row i is Gaussian i; this order is the identity mapping to the
    source_index of the triangles built from the scene.
    """

    means: np.ndarray
    rotations: np.ndarray
    scales: np.ndarray
    opacities: np.ndarray
    sh_dc: np.ndarray
    sh_rest: np.ndarray
    normals: np.ndarray
    metadata: SceneMetadata = field(default_factory=SceneMetadata)

    def __post_init__(self):
        n = self.means.shape[0]
        if self.sh_rest is None:
            self.sh_rest = np.zeros((n, 0))
        if self.normals is None:
            self.normals = np.zeros((n, 3))

    def __len__(self) -> int:
        return int(self.means.shape[0])

    def __getitem__(self, index: int) -> FlatGaussian:
        return FlatGaussian(
            mean=self.means[index].copy(),
            rotation=self.rotations[index].copy(),
            scales=self.scales[index].copy(),
            opacity=float(self.opacities[index]),
            sh_coeffs=sh_flat_to_rows(self.sh_dc[index], self.sh_rest[index]),
        )

    @property
    def sh_rest_count(self) -> int:
        return int(self.sh_rest.shape[1])

    @classmethod
    def empty(cls, sh_rest_count: int = 0, metadata: Optional[SceneMetadata] = None) -> "GaussianScene":
        return cls(
            means=np.zeros((0, 3)),
            rotations=np.zeros((0, 3, 3)),
            scales=np.zeros((0, 3)),
            opacities=np.zeros(0),
            sh_dc=np.zeros((0, 3)),
            sh_rest=np.zeros((0, sh_rest_count)),
            normals=np.zeros((0, 3)),
            metadata=metadata or SceneMetadata(),
        )

    @classmethod
    def from_gaussians(
        cls, gaussians: Sequence[FlatGaussian], metadata: Optional[SceneMetadata] = None
    ) -> "GaussianScene":
        """
        Pack a list of FlatGaussian records into array form.

        Args:
            gaussians: Gaussians in scene order; all must carry the same SH size
            metadata: Optional provenance

        Returns:
            GaussianScene
        """
        if not gaussians:
            return cls.empty(metadata=metadata)
        dcs, rests = zip(*(sh_rows_to_flat(g.sh_coeffs) for g in gaussians))
        return cls(
            means=np.array([g.mean for g in gaussians], dtype=np.float64),
            rotations=np.array([g.rotation for g in gaussians], dtype=np.float64),
            scales=np.array([g.scales for g in gaussians], dtype=np.float64),
            opacities=np.array([g.opacity for g in gaussians], dtype=np.float64),
            sh_dc=np.array(dcs),
            sh_rest=np.array(rests).reshape(len(gaussians), -1),
            normals=np.zeros((len(gaussians), 3)),
            metadata=metadata or SceneMetadata(),
        )

    def subset(self, indices: np.ndarray) -> "GaussianScene":
        """Rows selected by an index or boolean array, order preserved."""
        return GaussianScene(
            means=self.means[indices],
            rotations=self.rotations[indices],
            scales=self.scales[indices],
            opacities=self.opacities[indices],
            sh_dc=self.sh_dc[indices],
            sh_rest=self.sh_rest[indices],
            normals=self.normals[indices],
            metadata=replace(self.metadata),
        )

    def with_geometry(self, means: np.ndarray, rotations: np.ndarray, scales: np.ndarray) -> "GaussianScene":
        """Copy with new geometry; appearance and metadata are carried over unchanged."""
        return GaussianScene(
            means=means,
            rotations=rotations,
            scales=scales,
            opacities=self.opacities,
            sh_dc=self.sh_dc,
            sh_rest=self.sh_rest,
            normals=self.normals,
            metadata=replace(self.metadata),
        )

    @staticmethod
    def concatenate(scenes: List["GaussianScene"], metadata: Optional[SceneMetadata] = None) -> "GaussianScene":
        """
        Stack scenes in order.

        SH blocks of different sizes are zero-padded to the largest one.
        """
        if not scenes:
            return GaussianScene.empty(metadata=metadata)
        width = max(s.sh_rest_count for s in scenes)

        def padded(s: "GaussianScene") -> np.ndarray:
            if s.sh_rest_count == width:
                return s.sh_rest
            out = np.zeros((len(s), width))
            out[:, : s.sh_rest_count] = s.sh_rest
            return out

        return GaussianScene(
            means=np.concatenate([s.means for s in scenes]),
            rotations=np.concatenate([s.rotations for s in scenes]),
            scales=np.concatenate([s.scales for s in scenes]),
            opacities=np.concatenate([s.opacities for s in scenes]),
            sh_dc=np.concatenate([s.sh_dc for s in scenes]),
            sh_rest=np.concatenate([padded(s) for s in scenes]),
            normals=np.concatenate([s.normals for s in scenes]),
            metadata=metadata or replace(scenes[0].metadata),
        )


@dataclass
class TriangleSoup:
    """
    Array form of a list of SoupTriangle.

    vertices has shape (N, 3, 3): triangle, slot (v1, v2, v3), coordinate.
    """

    vertices: np.ndarray
    rest_lengths: np.ndarray
    source_index: np.ndarray
    opacities: np.ndarray
    sh_dc: np.ndarray
    sh_rest: np.ndarray

    def __len__(self) -> int:
        return int(self.vertices.shape[0])

    def __getitem__(self, index: int) -> SoupTriangle:
        v = self.vertices[index]
        return SoupTriangle(
            v1=v[0].copy(),
            v2=v[1].copy(),
            v3=v[2].copy(),
            rest_len2=float(self.rest_lengths[index, 0]),
            rest_len3=float(self.rest_lengths[index, 1]),
            source_index=int(self.source_index[index]),
            opacity=float(self.opacities[index]),
            sh_coeffs=sh_flat_to_rows(self.sh_dc[index], self.sh_rest[index]),
        )
