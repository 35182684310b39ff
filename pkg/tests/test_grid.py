import numpy as np
import pytest

from mpm.colliders import BoxCollider, HalfSpaceCollider, SphereCollider, project_velocity
from mpm.grid import SAFE_MARGIN, WALL_CELLS, SimGrid, uniform_boundary
from mpm.kernels import flat_node_index


def test_fit_centres_bounds_with_padding():
    grid = SimGrid.fit(np.zeros(3), np.array([1.0, 0.5, 0.25]), resolution=16, padding=3)
    assert grid.h == pytest.approx(1.0 / 9)
    np.testing.assert_allclose(grid.origin + 0.5 * 15 * grid.h, [0.5, 0.25, 0.125])
    assert grid.safe_mask(np.array([[0.0, 0.0, 0.0], [1.0, 0.5, 0.25]])).all()


def test_rejects_bad_boundary_and_resolution():
    with pytest.raises(ValueError):
        SimGrid(origin=np.zeros(3), h=0.1, resolution=(8, 8, 8), boundary={"x-": "bouncy"})
    with pytest.raises(ValueError):
        SimGrid(origin=np.zeros(3), h=0.1, resolution=(3, 8, 8))


def test_node_lookup_uses_ijk_order():
    grid = SimGrid(origin=np.ones(3), h=0.5, resolution=(4, 5, 6))
    idx = grid.flat_index(1, 2, 3)
    np.testing.assert_allclose(grid.positions[idx], [1.5, 2.0, 2.5])
    assert grid.flat_index(3, 4, 5) == grid.n_nodes - 1
    np.testing.assert_array_equal(flat_node_index(np.array([[0, 0, 1], [1, 0, 0]]), grid.resolution), [1, 30])


def test_safe_mask_margin():
    grid = SimGrid(origin=np.zeros(3), h=1.0, resolution=(10, 10, 10))
    inside = np.array([[SAFE_MARGIN, 5.0, 5.0], [9 - SAFE_MARGIN, 5.0, 5.0]])
    outside = np.array([[SAFE_MARGIN - 0.01, 5.0, 5.0], [5.0, 5.0, 9.5]])
    assert grid.safe_mask(inside).all()
    assert not grid.safe_mask(outside).any()


@pytest.mark.parametrize(
    "behavior, expected",
    [
        ("sticky", [0.0, 0.0, 0.0]),
        ("slip", [1.0, 0.0, 2.0]),
        ("separate", [1.0, 0.0, 2.0]),
        ("open", [1.0, -3.0, 2.0]),
    ],
)
def test_walls_towards_low_face(behavior, expected):
    grid = SimGrid(origin=np.zeros(3), h=1.0, resolution=(10, 10, 10), boundary=uniform_boundary(behavior))
    velocity = np.tile([1.0, -3.0, 2.0], (grid.n_nodes, 1))
    grid.apply_walls(velocity)
    wall_node = grid.flat_index(5, WALL_CELLS - 1, 5)
    interior = grid.flat_index(5, 5, 5)
    np.testing.assert_array_equal(velocity[wall_node], expected)
    np.testing.assert_array_equal(velocity[interior], [1.0, -3.0, 2.0])


def test_separate_wall_keeps_inward_motion():
    grid = SimGrid(origin=np.zeros(3), h=1.0, resolution=(10, 10, 10), boundary=uniform_boundary("separate"))
    velocity = np.tile([0.0, 0.0, 4.0], (grid.n_nodes, 1))
    grid.apply_walls(velocity)
    np.testing.assert_array_equal(velocity[grid.flat_index(5, 5, 0)], [0.0, 0.0, 4.0])
    np.testing.assert_array_equal(velocity[grid.flat_index(5, 5, 9)], [0.0, 0.0, 0.0])


def test_project_velocity_surfaces():
    v = np.array([[1.0, 2.0, -3.0], [1.0, 2.0, 3.0]])
    n = np.tile([0.0, 0.0, 1.0], (2, 1))
    np.testing.assert_array_equal(project_velocity(v, n, "sticky"), 0.0)
    np.testing.assert_array_equal(project_velocity(v, n, "slip"), [[1.0, 2.0, 0.0], [1.0, 2.0, 0.0]])
    np.testing.assert_array_equal(project_velocity(v, n, "separate"), [[1.0, 2.0, 0.0], [1.0, 2.0, 3.0]])


def test_collider_contact_regions():
    points = np.array([[0.0, 0.0, -0.1], [0.0, 0.0, 0.5], [0.95, 0.2, 0.3]])
    inside, _ = HalfSpaceCollider([0, 0, 0], [0, 0, 1]).contact(points)
    assert inside.tolist() == [True, False, False]

    inside, normals = SphereCollider([0, 0, 0.5], 0.2).contact(points)
    assert inside.tolist() == [False, True, False]

    inside, normals = BoxCollider([0, 0, 0], [1, 1, 1]).contact(points)
    assert inside.tolist() == [False, False, True]
    np.testing.assert_array_equal(normals[2], [1.0, 0.0, 0.0])


def test_box_collider_needs_positive_extent():
    with pytest.raises(ValueError):
        BoxCollider([0, 0, 0], [1, 0, 1])
