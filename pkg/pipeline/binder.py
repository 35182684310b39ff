"""
Binding of scene objects to simulation particles.

Every simulated Gaussian becomes a soup triangle and each triangle vertex an
independent particle. Pinned objects and Gaussians outside an object's
region stay static and are emitted unchanged.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.scene_config import ObjectConfig, SceneConfig
from config.settings import settings
from mpm.colliders import BoxCollider, Collider, HalfSpaceCollider, SphereCollider
from mpm.grid import SimGrid
from mpm.materials import MaterialParams
from mpm.particles import ParticleSet
from splat.gaussian import GaussianScene, SceneMetadata, TriangleSoup
from splat.parametrization import gauss_to_triangle_arrays, scene_to_soup
from splat.procedural import generate_blob
from splat.regions import Region
from storage.ply_storage import read_ply
from utils.error_handler import ConfigError
from utils.logger import logger

# Bounding-box extents below this fraction of the largest one are raised to it
MIN_EXTENT_FRACTION = 1e-3


@dataclass
class ObjectRange:
    """Rows of one object in the bound rest frame."""

    name: str
    start: int
    stop: int
    material_id: int
    pinned: bool
    simulated: np.ndarray  # rest-frame rows bound to particles

    @property
    def count(self) -> int:
        return self.stop - self.start


@dataclass
class BoundState:
    """
    Rest state of a bound scene.

    rest_frame holds every Gaussian of every object in object order. soup holds
    the simulated ones; soup.source_index maps triangle k to its rest-frame row.
    Particle 3k + s - 1 is vertex slot s of triangle k.
    """

    rest_frame: GaussianScene
    soup: TriangleSoup
    particles: ParticleSet
    objects: List[ObjectRange]
    materials: List[MaterialParams]
    colliders: List[Collider] = field(default_factory=list)

    @property
    def rest_vertices(self) -> np.ndarray:
        """(3T, 3) soup vertices in particle order."""
        return self.soup.vertices.reshape(-1, 3)

    @property
    def static_index(self) -> np.ndarray:
        """Rest-frame rows that are never simulated."""
        mask = np.ones(len(self.rest_frame), dtype=bool)
        mask[self.soup.source_index] = False
        return np.flatnonzero(mask)


def select_region(scene: GaussianScene, region: Optional[Region]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split a scene by whether each Gaussian's mean lies in a region.

    Args:
        scene: Gaussians to split
        region: Region, or None to select everything

    Returns:
        Tuple of (simulated rows, static rows)
    """
    if region is None:
        return np.arange(len(scene)), np.zeros(0, dtype=np.int64)
    inside = region.contains(scene.means)
    if len(scene) and not np.any(inside):
        logger.warning(f"Region {region} selects no Gaussians; they will be played back statically")
    return np.flatnonzero(inside), np.flatnonzero(~inside)


def load_object_assets(config: SceneConfig, eps: Optional[float] = None) -> List[GaussianScene]:
    """
    Load or generate the Gaussians of every object, before transforms.

    Args:
        config: Scene configuration
        eps: Flatness constant

    Returns:
        One GaussianScene per object, in object order
    """
    eps = settings.flat_epsilon if eps is None else eps
    assets = []
    for obj in config.objects:
        if obj.procedural is not None:
            p = obj.procedural
            asset = generate_blob(
                p.count,
                shape=p.shape,
                center=p.center,
                size=p.size,
                scale_range=p.scale_range,
                color=p.color,
                seed=p.seed,
                eps=eps,
            )
        else:
            asset = read_ply(obj.asset, eps=eps)
        logger.info(f"Loaded object '{obj.name}': {len(asset)} Gaussians from {asset.metadata.source}")
        assets.append(asset)
    return assets


def _transform_asset(obj: ObjectConfig, asset: GaussianScene) -> GaussianScene:
    means, rotations, scales = obj.transform.apply(asset.means, asset.rotations, asset.scales)
    return asset.with_geometry(means, rotations, scales)


def _initial_velocities(obj: ObjectConfig, means: np.ndarray) -> np.ndarray:
    velocities = np.tile(np.asarray(obj.velocity, dtype=np.float64), (len(means), 1))
    for entry in obj.velocity_regions:
        inside = entry.region.contains(means)
        velocities[inside] = entry.velocity
        logger.debug(f"Object '{obj.name}': {int(np.sum(inside))} Gaussians start at velocity {entry.velocity}")
    return velocities


def _padded_bounds(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lower, upper = points.min(axis=0), points.max(axis=0)
    extent = upper - lower
    floor = max(MIN_EXTENT_FRACTION * float(np.max(extent)), 1e-9)
    grow = 0.5 * np.maximum(floor - extent, 0.0)
    return lower - grow, upper + grow


def particle_volume(vertices: np.ndarray, count: int, fill_fraction: float) -> float:
    """
    Rest volume of one particle of an object.

    The object's vertex bounding box, scaled by the fill fraction, is shared
    equally among its 3 * count particles.
    """
    lower, upper = _padded_bounds(vertices)
    return float(np.prod(upper - lower)) * fill_fraction / (3 * count)


def pinned_collider(obj: ObjectConfig, scene: GaussianScene) -> BoxCollider:
    """Box collider over the triangle vertices of a pinned object."""
    vertices = gauss_to_triangle_arrays(scene.means, scene.rotations, scene.scales).reshape(-1, 3)
    lower, upper = _padded_bounds(vertices)
    return BoxCollider(lower, upper, surface=obj.surface)


def bind(config: SceneConfig, assets: Sequence[GaussianScene]) -> BoundState:
    """
    Bind every object of a scene to particles.

    Args:
        config: Scene configuration
        assets: Flattened Gaussians per object, in object order

    Returns:
        BoundState at t = 0

    Raises:
        ConfigError: Asset list does not match the objects, or an object is empty
    """
    if len(assets) != len(config.objects):
        raise ConfigError(f"{len(assets)} assets supplied for {len(config.objects)} objects", "objects")

    scenes, ranges, colliders = [], [], []
    sim_rows, velocities, material_ids, volumes = [], [], [], []
    offset = 0
    for i, (obj, asset) in enumerate(zip(config.objects, assets)):
        if len(asset) == 0:
            raise ConfigError(f"object '{obj.name}' has no Gaussians", f"objects[{i}]")
        scene = _transform_asset(obj, asset)
        material_id = config.material_id(obj.material)

        if obj.pinned:
            collider = pinned_collider(obj, scene)
            colliders.append(collider)
            simulated = np.zeros(0, dtype=np.int64)
            logger.info(f"Object '{obj.name}' is pinned; colliding against {collider}")
        else:
            simulated, _ = select_region(scene, obj.region)
            if simulated.size:
                sim_scene = scene.subset(simulated)
                vertices = gauss_to_triangle_arrays(
                    sim_scene.means, sim_scene.rotations, sim_scene.scales
                ).reshape(-1, 3)
                volume = particle_volume(vertices, simulated.size, config.simulation.fill_fraction)
                velocities.append(_initial_velocities(obj, sim_scene.means))
                material_ids.append(np.full(simulated.size, material_id))
                volumes.append(np.full(simulated.size, volume))
                sim_rows.append(simulated + offset)

        ranges.append(
            ObjectRange(
                name=obj.name,
                start=offset,
                stop=offset + len(scene),
                material_id=material_id,
                pinned=obj.pinned,
                simulated=simulated + offset,
            )
        )
        scenes.append(scene)
        offset += len(scene)

    metadata = SceneMetadata(
        source=str(config.source) if config.source else None,
        epsilon=assets[0].metadata.epsilon,
        sh_degree=max(a.metadata.sh_degree for a in assets),
        already_flat=sum(a.metadata.already_flat for a in assets),
    )
    rest_frame = GaussianScene.concatenate(scenes, metadata=metadata)

    rows = np.concatenate(sim_rows) if sim_rows else np.zeros(0, dtype=np.int64)
    soup = scene_to_soup(rest_frame.subset(rows))
    soup.source_index = rows

    materials = config.material_table
    n_tri = len(soup)
    if n_tri:
        tri_material = np.concatenate(material_ids)
        tri_volume = np.concatenate(volumes)
        particle_material = np.repeat(tri_material, 3)
        volume0 = np.repeat(tri_volume, 3)
        density = np.array([m.density for m in materials])[particle_material]
        plastic = np.array([m.initial_plastic_state for m in materials])[particle_material]
        particle_velocity = np.repeat(np.concatenate(velocities), 3, axis=0)
    else:
        particle_material = np.zeros(0, dtype=np.int64)
        volume0 = density = plastic = np.zeros(0)
        particle_velocity = np.zeros((0, 3))

    particles = ParticleSet.create(
        positions=soup.vertices.reshape(-1, 3),
        velocities=particle_velocity,
        mass=density * volume0,
        volume0=volume0,
        material=particle_material,
        plastic=plastic,
        source_triangle=np.repeat(np.arange(n_tri), 3),
        source_slot=np.tile(np.array([1, 2, 3]), n_tri),
    )
    colliders.extend(config.colliders)

    logger.info(
        f"Bound {len(rest_frame)} Gaussians: {n_tri} triangles / {len(particles)} particles simulated, "
        f"{len(rest_frame) - n_tri} static, {len(colliders)} collider(s)"
    )
    return BoundState(
        rest_frame=rest_frame,
        soup=soup,
        particles=particles,
        objects=ranges,
        materials=materials,
        colliders=colliders,
    )


def _collider_points(collider: Collider) -> np.ndarray:
    if isinstance(collider, HalfSpaceCollider):
        return collider.point[None]
    if isinstance(collider, SphereCollider):
        return np.stack([collider.center - collider.radius, collider.center + collider.radius])
    if isinstance(collider, BoxCollider):
        return np.stack([collider.lower, collider.upper])
    return np.zeros((0, 3))


def fit_grid(bound: BoundState, config: SceneConfig) -> SimGrid:
    """
    Background grid for a bound scene.

    An explicit [grid] lower/upper box is used as the domain directly;
    otherwise the grid is fitted around the particles and collider geometry
    with the configured padding.
    """
    grid_cfg = config.grid
    if grid_cfg.lower is not None:
        lower = np.asarray(grid_cfg.lower, dtype=np.float64)
        upper = np.asarray(grid_cfg.upper, dtype=np.float64)
        h = float(np.max(upper - lower)) / (grid_cfg.resolution - 1)
        grid = SimGrid(origin=lower, h=h, resolution=(grid_cfg.resolution,) * 3, boundary=dict(grid_cfg.boundary))
    else:
        points = [bound.particles.x] + [_collider_points(c) for c in bound.colliders]
        points = np.concatenate([p for p in points if len(p)] or [np.zeros((1, 3))])
        grid = SimGrid.fit(
            points.min(axis=0),
            points.max(axis=0),
            resolution=grid_cfg.resolution,
            padding=grid_cfg.padding,
            boundary=dict(grid_cfg.boundary),
        )
    logger.info(f"Grid: {grid.resolution} nodes, h={grid.h:.4e}, origin={grid.origin.tolist()}")
    return grid
