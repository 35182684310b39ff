import numpy as np
import pytest

from splat.correction import CorrectionConfig, apply_scale_clip, clip_scales_arrays
from splat.gaussian import SoupTriangle
from splat.parametrization import triangle_to_gauss, triangle_to_gauss_arrays

EPS = 1e-6


def _rest_triangle() -> SoupTriangle:
    return SoupTriangle.from_vertices(np.zeros(3), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), 0)


def test_alpha_must_exceed_one():
    with pytest.raises(ValueError):
        CorrectionConfig(alpha=1.0)
    assert CorrectionConfig.from_settings().alpha == pytest.approx(2.0)


def test_stretched_edge_is_clipped_to_alpha_times_rest():
    t = _rest_triangle().deformed(np.zeros(3), np.array([0.0, 3.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    g = apply_scale_clip(t, CorrectionConfig(alpha=2.0), eps=EPS)
    assert g.scales[1] == 2.0
    assert g.scales[2] == pytest.approx(1.0)
    assert g.scales[0] == EPS


def test_below_threshold_is_plain_reconstruction():
    t = _rest_triangle().deformed(np.zeros(3), np.array([0.0, 1.5, 0.2]), np.array([0.1, 0.0, 1.2]))
    clipped = apply_scale_clip(t, CorrectionConfig(alpha=2.0), eps=EPS)
    plain = triangle_to_gauss(t, eps=EPS)
    np.testing.assert_array_equal(clipped.scales, plain.scales)
    np.testing.assert_array_equal(clipped.rotation, plain.rotation)
    np.testing.assert_array_equal(clipped.mean, plain.mean)


def test_disabled_correction_returns_scales_unchanged():
    vertices = np.array([[[0, 0, 0], [0, 5, 0], [0, 0, 5]]], dtype=np.float64)
    _, _, scales, _ = triangle_to_gauss_arrays(vertices, EPS)
    out = clip_scales_arrays(np.ones((1, 2)), scales, CorrectionConfig(enabled=False))
    np.testing.assert_array_equal(out, scales)


def test_random_deformations_respect_bound(rng):
    n, alpha = 1000, 2.0
    rest = rng.normal(size=(n, 3, 3))
    rest_lengths = np.linalg.norm(rest[:, 1:] - rest[:, :1], axis=2)
    deformed = rest + rng.normal(scale=2.0, size=rest.shape)
    _, _, scales, degenerate = triangle_to_gauss_arrays(deformed, EPS)
    out = clip_scales_arrays(rest_lengths, scales, CorrectionConfig(alpha=alpha))
    ok = ~degenerate
    assert np.all(out[ok, 1:] <= alpha * rest_lengths[ok] + 1e-9)


def test_sheared_triangle_is_never_enlarged():
    # v3 moves far along the v2 direction: |v3 - v1| exceeds the bound but its
    # component orthogonal to r2 stays short
    t = _rest_triangle().deformed(np.zeros(3), np.array([0.0, 1.0, 0.0]), np.array([0.0, 2.9, 0.5]))
    plain = triangle_to_gauss(t, eps=EPS)
    clipped = apply_scale_clip(t, CorrectionConfig(alpha=2.0), eps=EPS)
    assert plain.scales[2] == pytest.approx(0.5)
    np.testing.assert_array_equal(clipped.scales, plain.scales)


def test_larger_alpha_never_shrinks_scales(rng):
    n = 500
    rest = rng.normal(size=(n, 3, 3))
    rest_lengths = np.linalg.norm(rest[:, 1:] - rest[:, :1], axis=2)
    deformed = rest + rng.normal(scale=2.0, size=rest.shape)
    _, _, scales, _ = triangle_to_gauss_arrays(deformed, EPS)
    previous = clip_scales_arrays(rest_lengths, scales, CorrectionConfig(alpha=1.5))
    for alpha in (2.0, 3.0, 10.0):
        current = clip_scales_arrays(rest_lengths, scales, CorrectionConfig(alpha=alpha))
        assert np.all(current >= previous)
        assert np.all(current <= scales)
        previous = current


def test_correction_is_idempotent(rng):
    n = 500
    rest = rng.normal(size=(n, 3, 3))
    rest_lengths = np.linalg.norm(rest[:, 1:] - rest[:, :1], axis=2)
    deformed = rest + rng.normal(scale=2.0, size=rest.shape)
    _, _, scales, _ = triangle_to_gauss_arrays(deformed, EPS)
    cfg = CorrectionConfig(alpha=2.0)
    once = clip_scales_arrays(rest_lengths, scales, cfg)
    np.testing.assert_array_equal(clip_scales_arrays(rest_lengths, once, cfg), once)
