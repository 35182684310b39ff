import time

import numpy as np
import pytest
from PIL import Image

from config.settings import settings
from preview.camera import PreviewCamera
from preview.renderer import SH_C0, render_preview, save_png, to_uint8
from splat.gaussian import GaussianScene

# Flat Gaussians facing a camera that looks along +y
FACING_Y = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
CAMERA = PreviewCamera(position=(0.0, -3.0, 0.0), look_at=(0.0, 0.0, 0.0), width=33, height=33)


def _scene(means, colors, opacity=0.9, size=0.1):
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    n = len(means)
    rgb = np.atleast_2d(np.asarray(colors, dtype=np.float64))
    return GaussianScene(
        means=means,
        rotations=np.tile(FACING_Y, (n, 1, 1)),
        scales=np.tile([1e-6, size, size], (n, 1)),
        opacities=np.full(n, opacity),
        sh_dc=(rgb - 0.5) / SH_C0,
        sh_rest=np.zeros((n, 0)),
        normals=np.zeros((n, 3)),
    )


def test_empty_scene_is_background():
    cam = PreviewCamera(width=16, height=16, background=(0.2, 0.4, 0.6))
    image = render_preview(GaussianScene.empty(), cam)
    assert image.shape == (16, 16, 3)
    np.testing.assert_allclose(image, np.tile([0.2, 0.4, 0.6], (16, 16, 1)))


def test_centred_gaussian_brightest_at_principal_point():
    image = render_preview(_scene([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]), CAMERA)
    luminance = image.sum(axis=2)
    assert np.unravel_index(np.argmax(luminance), luminance.shape) == (16, 16)
    assert luminance[0, 0] == 0.0


def test_nearer_splat_wins():
    scene = _scene([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]], [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    r, g, _ = render_preview(scene, CAMERA)[16, 16]
    assert r > 0.8
    assert r > g


def test_input_order_does_not_change_image(rng):
    n = 30
    means = rng.uniform(-0.5, 0.5, size=(n, 3))
    colors = rng.uniform(0.0, 1.0, size=(n, 3))
    scene = _scene(means, colors, opacity=0.6)
    perm = rng.permutation(n)
    np.testing.assert_array_equal(render_preview(scene, CAMERA), render_preview(scene.subset(perm), CAMERA))


def test_gaussians_behind_camera_are_culled():
    image = render_preview(_scene([0.0, -5.0, 0.0], [1.0, 1.0, 1.0]), CAMERA)
    np.testing.assert_array_equal(image, 0.0)


def test_png_is_rgb_of_camera_size(tmp_path):
    image = render_preview(_scene([0.0, 0.0, 0.0], [1.0, 0.5, 0.0]), CAMERA)
    path = save_png(image, tmp_path / "preview.png")
    with Image.open(path) as png:
        assert png.size == (33, 33)
        assert png.mode == "RGB"
        np.testing.assert_array_equal(np.asarray(png), to_uint8(image))


def test_png_write_retries_transient_failures(tmp_path, monkeypatch):
    attempts = []
    original = Image.Image.save

    def flaky_save(self, *args, **kwargs):
        attempts.append(1)
        if len(attempts) < settings.io_retries:
            raise OSError("disk busy")
        return original(self, *args, **kwargs)

    monkeypatch.setattr(Image.Image, "save", flaky_save)
    monkeypatch.setattr(time, "sleep", lambda _: None)
    path = save_png(np.zeros((4, 4, 3)), tmp_path / "retry.png")
    assert path.exists()
    assert len(attempts) == settings.io_retries


def test_png_write_gives_up_after_configured_attempts(tmp_path, monkeypatch):
    attempts = []

    def failing_save(self, *args, **kwargs):
        attempts.append(1)
        raise OSError("read-only file system")

    monkeypatch.setattr(Image.Image, "save", failing_save)
    monkeypatch.setattr(time, "sleep", lambda _: None)
    with pytest.raises(OSError):
        save_png(np.zeros((4, 4, 3)), tmp_path / "never.png")
    assert len(attempts) == max(1, settings.io_retries)
