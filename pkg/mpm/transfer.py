"""
Particle-grid transfers of the MLS-MPM step.

p2g scatters mass and APIC momentum with the fused stress force, grid_update
turns momentum into velocity and applies forces and boundaries, g2p gathers
velocities back and advances positions and deformation gradients.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from config.settings import KERNEL_CUBIC
from mpm.colliders import Collider
from mpm.grid import SimGrid
from mpm.kernels import build_stencil, inverse_moment
from mpm.materials import MaterialParams, check_finite, kirchhoff_stress, plastic_project
from mpm.particles import ParticleSet
from utils.error_handler import NumericalBlowupError

# f(x, t): (N, 3) node positions and time to (N, 3) or (3,) accelerations
ForceField = Callable[[np.ndarray, float], np.ndarray]

# Fewer particles than this are never split across workers
MIN_CHUNK = 256


def _scatter_chunk(
    particles: ParticleSet,
    idx: np.ndarray,
    grid: SimGrid,
    dt: float,
    materials: Sequence[MaterialParams],
    kernel: str,
) -> Tuple[np.ndarray, np.ndarray]:
    """Private grid contribution (mass, momentum) of one batch of particles."""
    x = particles.x[idx]
    F = particles.F[idx]
    plastic = particles.plastic[idx]
    mass = particles.mass[idx]
    stencil = build_stencil(x, grid.origin, grid.h, grid.resolution, kernel)

    material = particles.material[idx]
    tau = np.zeros((len(idx), 3, 3))
    for mid, mat in enumerate(materials):
        sel = material == mid
        if np.any(sel):
            tau[sel] = kirchhoff_stress(F[sel], plastic[sel], mat)
    d_inv = inverse_moment(kernel, grid.h)
    affine = mass[:, None, None] * particles.C[idx] - (dt * d_inv) * particles.volume0[idx][:, None, None] * tau

    w = stencil.weights
    momentum = w[..., None] * (
        (mass[:, None] * particles.v[idx])[:, None, :]
        + np.einsum("pij,psj->psi", affine, stencil.offsets)
    )

    nodes = stencil.nodes.ravel()
    n_nodes = grid.n_nodes
    grid_mass = np.bincount(nodes, weights=(w * mass[:, None]).ravel(), minlength=n_nodes)
    grid_momentum = np.stack(
        [np.bincount(nodes, weights=momentum[..., axis].ravel(), minlength=n_nodes) for axis in range(3)],
        axis=1,
    )
    return grid_mass, grid_momentum


def p2g(
    particles: ParticleSet,
    grid: SimGrid,
    dt: float,
    materials: Sequence[MaterialParams],
    kernel: str = KERNEL_CUBIC,
    deterministic: bool = True,
    workers: int = 1,
    step: Optional[int] = None,
) -> None:
    """
    Scatter particle mass and momentum onto a cleared grid.

    Node momentum is sum_p w_ip (m_p v_p + (m_p C_p - dt V0_p D^-1 tau_p)(x_i - x_p)),
    which folds the internal stress force into the affine term.

    Args:
        particles: Particle state; escaped particles are skipped
        grid: Target grid, expected to be cleared
        dt: Step size in seconds
        materials: Material table indexed by particle material id
        kernel: Interpolation kernel degree
        deterministic: Single ordered reduction instead of per-worker grids
        workers: Thread count for the non-deterministic scatter
        step: Step index for error reports
    """
    idx = np.flatnonzero(~particles.escaped)
    if idx.size == 0:
        return
    check_finite(particles.F[idx], step=step, particle_ids=idx)

    if deterministic or workers <= 1 or idx.size < 2 * MIN_CHUNK:
        mass, momentum = _scatter_chunk(particles, idx, grid, dt, materials, kernel)
        grid.mass += mass
        grid.momentum += momentum
        return

    # one private grid per chunk, summed in whatever order they finish
    chunks = np.array_split(idx, min(workers, idx.size // MIN_CHUNK))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(_scatter_chunk, particles, chunk, grid, dt, materials, kernel) for chunk in chunks
        ]
        for future in as_completed(futures):
            mass, momentum = future.result()
            grid.mass += mass
            grid.momentum += momentum


def grid_update(
    grid: SimGrid,
    dt: float,
    force: Optional[ForceField] = None,
    colliders: Sequence[Collider] = (),
    time: float = 0.0,
    damping: float = 0.0,
) -> None:
    """
    Normalize momentum to velocity, add body forces, then apply colliders and walls.

    Nodes without mass keep zero velocity. A positive damping rate (1/s)
    scales node velocities by exp(-damping * dt) before the boundaries.
    """
    grid.velocity.fill(0.0)
    massive = grid.mass > 0.0
    grid.velocity[massive] = grid.momentum[massive] / grid.mass[massive, None]

    if force is not None and np.any(massive):
        grid.velocity[massive] += dt * np.asarray(force(grid.positions[massive], time), dtype=np.float64)
    if damping > 0.0:
        grid.velocity[massive] *= np.exp(-damping * dt)

    for collider in colliders:
        collider.apply(grid.positions, grid.velocity, massive)
    grid.apply_walls(grid.velocity)


def g2p(
    particles: ParticleSet,
    grid: SimGrid,
    dt: float,
    materials: Sequence[MaterialParams],
    kernel: str = KERNEL_CUBIC,
    step: Optional[int] = None,
) -> None:
    """
    Gather grid velocities, move particles and update F_E with plasticity.

    Raises:
        NumericalBlowupError: A particle ends up with non-finite state
    """
    idx = np.flatnonzero(~particles.escaped)
    if idx.size == 0:
        return
    x = particles.x[idx]
    stencil = build_stencil(x, grid.origin, grid.h, grid.resolution, kernel)

    node_v = grid.velocity[stencil.nodes]
    w = stencil.weights
    v = np.einsum("ps,psi->pi", w, node_v)
    C = inverse_moment(kernel, grid.h) * np.einsum("ps,psi,psj->pij", w, node_v, stencil.offsets)

    F_trial = (np.eye(3) + dt * C) @ particles.F[idx]
    check_finite(F_trial, step=step, particle_ids=idx)
    plastic = particles.plastic[idx]
    F_new = np.empty_like(F_trial)
    plastic_new = np.empty_like(plastic)
    for mid, mat in enumerate(materials):
        sel = particles.material[idx] == mid
        if np.any(sel):
            F_new[sel], plastic_new[sel] = plastic_project(F_trial[sel], plastic[sel], mat)

    x_new = x + dt * v
    bad = ~(np.isfinite(x_new).all(axis=1) & np.isfinite(v).all(axis=1))
    if np.any(bad):
        raise NumericalBlowupError("non-finite particle state", step=step, particle=int(idx[np.argmax(bad)]))
    check_finite(F_new, step=step, particle_ids=idx)

    particles.v[idx] = v
    particles.C[idx] = C
    particles.x[idx] = x_new
    particles.F[idx] = F_new
    particles.plastic[idx] = plastic_new
