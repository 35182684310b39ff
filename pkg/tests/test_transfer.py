import numpy as np
import pytest

from mpm.colliders import HalfSpaceCollider
from mpm.grid import SimGrid, uniform_boundary
from mpm.materials import MaterialParams
from mpm.particles import ParticleSet
from mpm.transfer import g2p, grid_update, p2g

MAT = [MaterialParams(youngs_modulus=1e4, poisson_ratio=0.3)]


def _grid(boundary: str = "open") -> SimGrid:
    return SimGrid(origin=np.zeros(3), h=0.1, resolution=(16, 16, 16), boundary=uniform_boundary(boundary))


def _particles(positions, velocities=None, mass=1.0) -> ParticleSet:
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    n = len(positions)
    velocities = np.zeros((n, 3)) if velocities is None else np.atleast_2d(velocities)
    return ParticleSet.create(
        positions=positions,
        velocities=velocities,
        mass=np.full(n, mass),
        volume0=np.full(n, 1e-3),
        material=np.zeros(n, dtype=np.int64),
        plastic=np.ones(n),
        source_triangle=np.arange(n) // 3,
        source_slot=np.arange(n) % 3 + 1,
    )


def test_p2g_single_particle_at_rest():
    grid = _grid()
    p = _particles([0.73, 0.81, 0.77], mass=2.5)
    p2g(p, grid, 1e-3, MAT)
    assert grid.total_mass() == pytest.approx(2.5, abs=1e-12)
    np.testing.assert_array_equal(grid.momentum, 0.0)


def test_p2g_single_moving_particle_conserves_momentum():
    grid = _grid()
    v = np.array([0.3, -1.2, 0.5])
    p = _particles([0.73, 0.81, 0.77], v, mass=2.0)
    p2g(p, grid, 1e-3, MAT)
    np.testing.assert_allclose(grid.total_momentum(), 2.0 * v, atol=1e-12)


def test_p2g_internal_forces_cancel(rng):
    grid = _grid()
    p = _particles(rng.uniform(0.6, 0.9, size=(2, 3)), rng.normal(size=(2, 3)))
    p.F[:] = np.eye(3) + 0.05 * rng.normal(size=(2, 3, 3))
    p2g(p, grid, 1e-3, MAT)
    np.testing.assert_allclose(grid.total_momentum(), p.total_momentum(), atol=1e-8)


@pytest.mark.parametrize("kernel", ["cubic", "quadratic"])
def test_parallel_scatter_matches_ordered_scatter(rng, kernel):
    p = _particles(rng.uniform(0.5, 1.0, size=(1200, 3)), rng.normal(size=(1200, 3)), mass=0.01)
    serial, parallel = _grid(), _grid()
    p2g(p, serial, 1e-3, MAT, kernel=kernel, deterministic=True)
    p2g(p, parallel, 1e-3, MAT, kernel=kernel, deterministic=False, workers=4)
    np.testing.assert_allclose(parallel.mass, serial.mass, atol=1e-12)
    np.testing.assert_allclose(parallel.momentum, serial.momentum, atol=1e-12)


def test_p2g_skips_escaped_particles():
    grid = _grid()
    p = _particles([[0.7, 0.7, 0.7], [0.8, 0.8, 0.8]])
    p.escaped[1] = True
    p2g(p, grid, 1e-3, MAT)
    assert grid.total_mass() == pytest.approx(1.0)


def test_grid_update_without_forces_normalizes():
    grid = _grid()
    p = _particles([0.73, 0.81, 0.77], [1.0, 2.0, 3.0])
    p2g(p, grid, 1e-3, MAT)
    grid_update(grid, 1e-3)
    massive = grid.mass > 0
    np.testing.assert_array_equal(grid.velocity[massive], grid.momentum[massive] / grid.mass[massive, None])
    np.testing.assert_array_equal(grid.velocity[~massive], 0.0)


def test_grid_damping_scales_node_velocities():
    grid = _grid()
    p = _particles([0.73, 0.81, 0.77], [1.0, 2.0, 3.0])
    p2g(p, grid, 1e-3, MAT)
    grid_update(grid, 1e-3)
    undamped = grid.velocity.copy()
    grid_update(grid, 1e-3, damping=50.0)
    np.testing.assert_allclose(grid.velocity, undamped * np.exp(-50.0 * 1e-3), rtol=1e-14)


def test_grid_update_gravity_on_free_node():
    grid = _grid()
    p = _particles([0.8, 0.8, 0.8])
    p2g(p, grid, 1e-3, MAT)
    g = np.array([0.0, 0.0, -9.8])
    grid_update(grid, 1e-3, force=lambda x, t: g)
    massive = grid.mass > 0
    np.testing.assert_allclose(grid.velocity[massive], np.tile(1e-3 * g, (int(massive.sum()), 1)), atol=1e-15)


def test_sticky_ground_stops_nodes():
    grid = _grid()
    p = _particles([0.8, 0.8, 0.8], [0.0, 0.0, -2.0])
    p2g(p, grid, 1e-3, MAT)
    ground = HalfSpaceCollider(point=[0.0, 0.0, 0.8], normal=[0.0, 0.0, 1.0], surface="sticky")
    grid_update(grid, 1e-3, colliders=[ground])
    below = (grid.mass > 0) & (grid.positions[:, 2] < 0.8)
    assert below.any()
    np.testing.assert_array_equal(grid.velocity[below], 0.0)


def test_g2p_uniform_field_translates(rng):
    grid = _grid()
    p = _particles(rng.uniform(0.6, 0.9, size=(20, 3)))
    F0 = p.F.copy()
    v_star = np.array([0.2, -0.1, 0.4])
    grid.velocity[:] = v_star
    x0 = p.x.copy()
    g2p(p, grid, 1e-3, MAT)
    np.testing.assert_allclose(p.v, np.tile(v_star, (20, 1)), atol=1e-8)
    np.testing.assert_allclose(p.C, 0.0, atol=1e-8)
    np.testing.assert_allclose(p.F, F0, atol=1e-8)
    np.testing.assert_allclose(p.x, x0 + 1e-3 * v_star, atol=1e-12)


def test_g2p_linear_field_recovers_gradient(rng):
    grid = _grid()
    A = 0.5 * rng.normal(size=(3, 3))
    x0 = np.full(3, 0.75)
    grid.velocity[:] = (grid.positions - x0) @ A.T
    p = _particles(rng.uniform(0.6, 0.9, size=(10, 3)))
    g2p(p, grid, 1e-3, MAT)
    for C in p.C:
        np.testing.assert_allclose(C, A, rtol=5e-2, atol=5e-2 * np.abs(A).max())


def test_g2p_zero_field_freezes_state(rng):
    grid = _grid()
    p = _particles(rng.uniform(0.6, 0.9, size=(5, 3)))
    x0, F0 = p.x.copy(), p.F.copy()
    g2p(p, grid, 1e-3, MAT)
    np.testing.assert_array_equal(p.x, x0)
    np.testing.assert_array_equal(p.F, F0)
