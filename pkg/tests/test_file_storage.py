from dataclasses import dataclass, field

import numpy as np
import pytest

from config.settings import MANIFEST_FORMAT_CSV, MANIFEST_FORMAT_PARQUET
from splat.parametrization import scene_to_soup, triangle_to_gauss_arrays
from storage.file_storage import (
    FrameStorage,
    frame_filename,
    read_obj_soup,
    write_frame_sequence,
    write_obj_soup,
)
from tests.helpers import read_manifest
from utils.error_handler import PartialOutputError, PipelineHaltedError


@dataclass
class StubFrame:
    index: int
    time: float
    scene: object
    vertices: np.ndarray = field(default=None)

    def manifest_record(self):
        return {"frame": self.index, "time": self.time, "gaussians": len(self.scene)}


def _frames(scene, count=10, frame_rate=24.0):
    vertices = scene_to_soup(scene).vertices
    return [StubFrame(i, i / frame_rate, scene, vertices) for i in range(count)]


def test_frame_filename_is_zero_padded():
    assert frame_filename(7, "ply") == "frame_00007.ply"


def test_single_triangle_obj_layout(tmp_path):
    vertices = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    path = write_obj_soup(vertices, tmp_path / "tri.obj")
    lines = path.read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 3
    assert sum(line.startswith("f ") for line in lines) == 1


def test_obj_reimport_reproduces_geometry(tmp_path, small_scene):
    vertices = scene_to_soup(small_scene).vertices
    loaded = read_obj_soup(write_obj_soup(vertices, tmp_path / "soup.obj"))
    np.testing.assert_allclose(loaded, vertices, atol=1e-12)

    means, rotations, scales, degenerate = triangle_to_gauss_arrays(loaded, small_scene.metadata.epsilon)
    assert not degenerate.any()
    expected = np.einsum("nij,nj,nkj->nik", small_scene.rotations, small_scene.scales**2, small_scene.rotations)
    actual = np.einsum("nij,nj,nkj->nik", rotations, scales**2, rotations)
    np.testing.assert_allclose(actual, expected, atol=1e-9)
    np.testing.assert_allclose(means, small_scene.means, atol=1e-12)


def test_sequence_writes_frames_and_ordered_manifest(output_dir, small_scene):
    storage = FrameStorage(output_dir, ply=True, obj=True)
    records = write_frame_sequence(_frames(small_scene), storage)
    assert [r["frame"] for r in records] == list(range(10))
    for i in range(10):
        assert (output_dir / frame_filename(i, "ply")).exists()
        assert (output_dir / frame_filename(i, "obj")).exists()
    manifest = read_manifest(output_dir / "manifest.jsonl")
    assert len(manifest) == 10
    assert manifest["time"].is_monotonic_increasing
    assert manifest["ply"].iloc[3] == frame_filename(3, "ply")


@pytest.mark.parametrize("fmt", [MANIFEST_FORMAT_CSV, MANIFEST_FORMAT_PARQUET])
def test_extra_manifest_formats(output_dir, small_scene, fmt):
    storage = FrameStorage(output_dir, manifest_format=fmt)
    write_frame_sequence(_frames(small_scene, count=3), storage)
    extra = read_manifest(output_dir / f"manifest.{fmt}")
    jsonl = read_manifest(output_dir / "manifest.jsonl")
    assert list(extra["frame"]) == [0, 1, 2]
    np.testing.assert_allclose(extra["time"], jsonl["time"])


def test_unknown_manifest_format_rejected(output_dir):
    with pytest.raises(ValueError):
        FrameStorage(output_dir, manifest_format="xml")


def test_failed_frame_raises_partial_output(output_dir, small_scene, monkeypatch):
    storage = FrameStorage(output_dir)
    original = storage.save_frame

    def flaky(frame):
        if frame.index == 2:
            raise OSError("disk full")
        return original(frame)

    monkeypatch.setattr(storage, "save_frame", flaky)
    with pytest.raises(PartialOutputError) as info:
        write_frame_sequence(_frames(small_scene, count=4), storage)
    assert sorted(info.value.completed) == [0, 1, 3]
    assert (output_dir / "manifest.jsonl").exists()


def test_halted_stream_keeps_finished_frames(output_dir, small_scene):
    frames = _frames(small_scene, count=5)

    def stream():
        yield from frames[:3]
        raise PipelineHaltedError("blew up", last_good_frame=2)

    with pytest.raises(PipelineHaltedError):
        write_frame_sequence(stream(), FrameStorage(output_dir))
    assert len(read_manifest(output_dir / "manifest.jsonl")) == 3
    assert not (output_dir / frame_filename(3, "ply")).exists()
