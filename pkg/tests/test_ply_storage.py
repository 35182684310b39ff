import math

import numpy as np
import pytest
from plyfile import PlyData

from splat.gaussian import GaussianScene
from storage.ply_storage import (
    decode_rotations,
    encode_opacities,
    encode_rotations,
    gs_ply_property_names,
    read_ply,
    sh_degree_from_rest_count,
    write_ply,
)
from tests.helpers import random_flat_scene, random_rotations
from utils.error_handler import PlyFormatError, UnsupportedFormatError

EPS = 1e-6


def _raw_ply(path, values, names=None, fmt="binary_little_endian"):
    names = names or gs_ply_property_names(0)
    header = ["ply", f"format {fmt} 1.0", f"element vertex {len(values)}"]
    header += [f"property float {name}" for name in names]
    header.append("end_header")
    payload = np.asarray(values, dtype="<f4").tobytes()
    path.write_bytes(("\n".join(header) + "\n").encode("ascii") + payload)
    return path


def _single_record():
    # x y z, normals, f_dc, opacity, scales, rotation
    return [[1.0, 2.0, 3.0, 0, 0, 0, 0.1, 0.2, 0.3, 0.0,
             math.log(0.1), math.log(0.2), math.log(0.3), 1.0, 0.0, 0.0, 0.0]]


def test_sh_degree_from_rest_count():
    assert [sh_degree_from_rest_count(k) for k in (0, 9, 24, 45)] == [0, 1, 2, 3]
    assert sh_degree_from_rest_count(10) is None


def test_read_single_gaussian(tmp_path):
    scene = read_ply(_raw_ply(tmp_path / "one.ply", _single_record()), eps=EPS)
    assert len(scene) == 1
    np.testing.assert_allclose(scene.means[0], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(scene.scales[0], [EPS, 0.2, 0.3], rtol=1e-6)
    np.testing.assert_allclose(scene.rotations[0], np.eye(3), atol=1e-7)
    assert scene.opacities[0] == pytest.approx(0.5)
    assert scene.metadata.sh_degree == 0
    assert scene.metadata.already_flat == 0


def test_smallest_axis_moves_to_first_slot(tmp_path):
    record = _single_record()
    record[0][10:13] = [math.log(0.4), math.log(0.05), math.log(0.3)]
    scene = read_ply(_raw_ply(tmp_path / "swap.ply", record), eps=EPS)
    np.testing.assert_allclose(scene.scales[0], [EPS, 0.4, 0.3], rtol=1e-6)
    np.testing.assert_allclose(scene.rotations[0][:, 1], [1.0, 0.0, 0.0], atol=1e-7)
    assert np.linalg.det(scene.rotations[0]) == pytest.approx(1.0)


def test_written_file_stores_log_epsilon_and_clamped_logit(tmp_path, rng):
    scene = random_flat_scene(rng, 3, EPS)
    scene.opacities[0] = 1.0
    path = write_ply(scene, tmp_path / "out.ply")
    vertex = PlyData.read(str(path))["vertex"].data
    np.testing.assert_array_equal(vertex["scale_0"], np.float32(math.log(EPS)))
    assert vertex["opacity"][0] == np.float32(15.0)


def test_encode_opacities_clamps_both_ends():
    np.testing.assert_array_equal(encode_opacities(np.array([0.0, 1.0])), [-15.0, 15.0])


def test_rotation_encoding_roundtrips(rng):
    rotations = random_rotations(rng, 200)
    decoded = decode_rotations(encode_rotations(rotations))
    np.testing.assert_allclose(decoded, rotations, atol=1e-6)


def test_rewrite_is_byte_identical(tmp_path, rng):
    scene = random_flat_scene(rng, 100, EPS, sh_rest=9)
    first = write_ply(scene, tmp_path / "first.ply")
    second = write_ply(read_ply(first, eps=EPS), tmp_path / "second.ply")
    assert first.read_bytes() == second.read_bytes()


def test_reread_preserves_sh_layout(tmp_path, rng):
    scene = random_flat_scene(rng, 10, EPS, sh_rest=24)
    loaded = read_ply(write_ply(scene, tmp_path / "sh.ply"), eps=EPS)
    assert loaded.metadata.sh_degree == 2
    np.testing.assert_allclose(loaded.sh_rest, scene.sh_rest, rtol=1e-6, atol=1e-6)
    assert loaded.metadata.already_flat == 10


def test_ascii_ply_unsupported(tmp_path):
    path = tmp_path / "ascii.ply"
    path.write_text("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n")
    with pytest.raises(UnsupportedFormatError):
        read_ply(path)


def test_truncated_payload_reports_offset_and_property(tmp_path):
    path = _raw_ply(tmp_path / "cut.ply", _single_record())
    data = path.read_bytes()
    path.write_bytes(data[:-6])
    with pytest.raises(PlyFormatError) as info:
        read_ply(path)
    assert info.value.byte_offset == len(data) - 6
    assert info.value.property_name == "rot_2"


def test_missing_property_is_named(tmp_path):
    names = [n for n in gs_ply_property_names(0) if n != "opacity"]
    values = [r[:9] + r[10:] for r in _single_record()]
    with pytest.raises(PlyFormatError) as info:
        read_ply(_raw_ply(tmp_path / "noopacity.ply", values, names=names))
    assert info.value.property_name == "opacity"
    assert info.value.byte_offset is not None


def test_zero_quaternion_rejected():
    with pytest.raises(PlyFormatError):
        decode_rotations(np.zeros((1, 4)))


def test_empty_scene_roundtrip(tmp_path):
    path = write_ply(GaussianScene.empty(), tmp_path / "empty.ply")
    assert len(read_ply(path)) == 0
