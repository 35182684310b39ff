import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from mpm.materials import (
    MaterialKind,
    MaterialParams,
    energy_density,
    first_piola,
    kirchhoff_stress,
    plastic_project,
    stress,
)
from utils.error_handler import NumericalBlowupError

MATERIALS = [
    MaterialParams(kind=MaterialKind.ELASTIC, youngs_modulus=1e4, poisson_ratio=0.3),
    MaterialParams(kind=MaterialKind.SNOW, youngs_modulus=1.4e5, poisson_ratio=0.2),
    MaterialParams(kind=MaterialKind.SAND, youngs_modulus=3.5e5, poisson_ratio=0.3),
    MaterialParams(kind=MaterialKind.FLUID, youngs_modulus=1e4, poisson_ratio=0.3, bulk_modulus=2e3),
]


def test_poisson_ratio_half_rejected():
    with pytest.raises(ValueError):
        MaterialParams(poisson_ratio=0.5)


@pytest.mark.parametrize("mat", [m for m in MATERIALS if m.kind != MaterialKind.FLUID], ids=lambda m: m.kind.value)
def test_rest_state_is_stress_free(mat):
    sigma = stress(np.eye(3)[None], mat.initial_plastic_state, mat)
    assert np.max(np.abs(sigma)) <= 1e-12


def test_fluid_rest_state_is_stress_free():
    mat = MATERIALS[3]
    assert np.max(np.abs(stress(np.eye(3)[None], 1.0, mat))) <= 1e-12


@pytest.mark.parametrize("mat", MATERIALS, ids=lambda m: m.kind.value)
def test_rigid_rotation_is_stress_free(mat):
    Q = Rotation.random(50, random_state=7).as_matrix()
    sigma = stress(Q, mat.initial_plastic_state, mat)
    # round-off in the SVD scales with the moduli
    assert np.max(np.linalg.norm(sigma, axis=(1, 2))) <= 1e-10 * max(1.0, mat.youngs_modulus / 1e4)


def test_corotated_uniform_stretch_closed_form():
    mat = MaterialParams(youngs_modulus=1.0, poisson_ratio=0.25)
    F = 1.1 * np.eye(3)
    J = 1.331
    expected_tau = mat.lam * (J - 1.0) * J * np.eye(3) + 2.0 * mat.mu * (F - np.eye(3)) @ F.T
    np.testing.assert_allclose(kirchhoff_stress(F[None], 1.0, mat)[0], expected_tau, atol=1e-12)
    np.testing.assert_allclose(stress(F[None], 1.0, mat)[0], expected_tau / J, atol=1e-12)


def test_lambda_only_volumetric_stress_values():
    # with mu = 0 and lambda = 1 the Kirchhoff stress is (J - 1) J I and the Cauchy stress (J - 1) I
    J = 1.331
    F = 1.1 * np.eye(3)
    P = (J - 1.0) * J * np.linalg.inv(F).T
    tau = P @ F.T
    np.testing.assert_allclose(tau, 0.440561 * np.eye(3), atol=1e-6)
    np.testing.assert_allclose(tau / J, 0.331 * np.eye(3), atol=1e-12)


@pytest.mark.parametrize("mat", MATERIALS, ids=lambda m: m.kind.value)
def test_first_piola_matches_energy_gradient(rng, mat):
    delta = 1e-6
    for _ in range(100):
        F = np.eye(3) + 1e-3 * rng.uniform(-1.0, 1.0, size=(3, 3))
        plastic = mat.initial_plastic_state
        analytic = first_piola(F[None], plastic, mat)[0]
        numeric = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                dF = np.zeros((3, 3))
                dF[i, j] = delta
                numeric[i, j] = (energy_density((F + dF)[None], plastic, mat)[0]
                                 - energy_density((F - dF)[None], plastic, mat)[0]) / (2 * delta)
        scale = max(np.linalg.norm(analytic), mat.youngs_modulus * 1e-3)
        assert np.linalg.norm(analytic - numeric) <= 1e-4 * scale


def test_stress_rejects_non_finite():
    F = np.tile(np.eye(3), (3, 1, 1))
    F[1, 0, 0] = np.nan
    with pytest.raises(NumericalBlowupError) as info:
        stress(F, 1.0, MATERIALS[0], step=5, particle_ids=np.array([10, 11, 12]))
    assert (info.value.step, info.value.particle) == (5, 11)


def test_elastic_projection_is_identity(rng):
    F = np.eye(3) + 0.2 * rng.normal(size=(10, 3, 3))
    projected, _ = plastic_project(F, 1.0, MATERIALS[0])
    np.testing.assert_array_equal(projected, F)


def test_snow_clamps_singular_values():
    mat = MaterialParams(kind=MaterialKind.SNOW, critical_compression=0.025, critical_stretch=0.0075)
    F = np.diag([1.2, 1.0, 0.9])[None]
    projected, jp = plastic_project(F, 1.0, mat)
    np.testing.assert_allclose(np.sort(np.linalg.svd(projected[0], compute_uv=False)), [0.975, 1.0, 1.0075])
    assert jp[0] == pytest.approx(1.2 * 0.9 / (1.0075 * 0.975))


def _cone_value(F: np.ndarray, mat: MaterialParams) -> float:
    eps = np.log(np.linalg.svd(F, compute_uv=False))
    dev = eps - eps.sum() / 3.0
    ratio = (3.0 * mat.lam + 2.0 * mat.mu) / (2.0 * mat.mu)
    return np.linalg.norm(dev) + ratio * eps.sum() * mat.cone_alpha


def test_sand_inside_cone_unchanged():
    mat = MATERIALS[2]
    F = np.diag([0.97, 0.97, 0.97])[None]
    projected, state = plastic_project(F, 0.0, mat)
    np.testing.assert_allclose(projected, F, atol=1e-12)
    assert state[0] == 0.0


def test_sand_outside_cone_projected_onto_it():
    mat = MATERIALS[2]
    F = np.diag([0.8, 1.05, 0.99])[None]
    assert _cone_value(F[0], mat) > 0
    projected, _ = plastic_project(F, 0.0, mat)
    assert abs(_cone_value(projected[0], mat)) < 1e-8


def test_sand_expansion_returns_to_tip():
    mat = MATERIALS[2]
    F = np.diag([1.1, 1.05, 1.02])[None]
    projected, state = plastic_project(F, 0.0, mat)
    np.testing.assert_allclose(projected[0], np.eye(3), atol=1e-12)
    assert state[0] > 0
