import numpy as np
import pytest

from config.settings import KERNEL_CUBIC, KERNEL_QUADRATIC
from mpm.kernels import build_stencil, inverse_moment, kernel_weights

KERNELS = (KERNEL_CUBIC, KERNEL_QUADRATIC)


def test_cubic_weights_on_node():
    kw = kernel_weights(np.array([[2.0, 2.0, 2.0]]), np.zeros(3), 1.0, KERNEL_CUBIC)
    np.testing.assert_array_equal(kw.base[0], [1, 1, 1])
    np.testing.assert_allclose(kw.weights[0, 0], [1 / 6, 2 / 3, 1 / 6, 0.0], atol=1e-15)


@pytest.mark.parametrize("degree", KERNELS)
def test_partition_of_unity_and_zero_gradient_sum(rng, degree):
    h = 0.05
    positions = rng.uniform(0.5, 1.5, size=(1000, 3))
    stencil = build_stencil(positions, np.zeros(3), h, (64, 64, 64), degree)
    np.testing.assert_allclose(stencil.weights.sum(axis=1), 1.0, atol=1e-10)
    assert np.max(np.abs(stencil.gradients.sum(axis=1))) < 1e-8


@pytest.mark.parametrize("degree", KERNELS)
def test_gradients_match_central_differences(rng, degree):
    h, delta = 0.1, 1e-6
    positions = rng.uniform(1.0, 2.0, size=(200, 3))
    origin = np.zeros(3)
    kw = kernel_weights(positions, origin, h, degree)
    for axis in range(3):
        shift = np.zeros(3)
        shift[axis] = delta
        plus = kernel_weights(positions + shift, origin, h, degree)
        minus = kernel_weights(positions - shift, origin, h, degree)
        # stay away from knots where the stencil base changes
        same = np.all(plus.base == kw.base, axis=1) & np.all(minus.base == kw.base, axis=1)
        numeric = (plus.weights[same, axis] - minus.weights[same, axis]) / (2 * delta)
        np.testing.assert_allclose(kw.gradients[same, axis], numeric, atol=1e-5 / h)


@pytest.mark.parametrize("degree", KERNELS)
def test_second_moment_matches_inverse(rng, degree):
    h = 0.1
    positions = rng.uniform(1.0, 2.0, size=(50, 3))
    stencil = build_stencil(positions, np.zeros(3), h, (32, 32, 32), degree)
    moment = np.einsum("ps,psi,psj->pij", stencil.weights, stencil.offsets, stencil.offsets)
    np.testing.assert_allclose(moment * inverse_moment(degree, h), np.tile(np.eye(3), (50, 1, 1)), atol=1e-10)


def test_unknown_degree_rejected():
    with pytest.raises(ValueError):
        kernel_weights(np.zeros((1, 3)), np.zeros(3), 1.0, "quintic")
